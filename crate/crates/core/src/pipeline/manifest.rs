//! The sweep manifest: where the stimulus, car impulse responses, and
//! noises come from (synthesized in place or read from WAV files), which
//! microphone profiles to run, and the stimulus timing layout.
//!
//! Plain TOML. Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, write_wav, AudioBuffer, ImpulseResponse, SampleFormat};
use crate::error::{Error, Result};
use crate::fixtures::{
    synth_impulse_response, synth_noise_leveled, synth_stimulus, CarModel, NoiseClass,
    StimulusLayout,
};
use crate::pipeline::{default_selection, select_profiles, MicProfile};

/// The canonical sample rate of the render pipeline. The 20 kHz low-pass
/// corner needs the Nyquist headroom; files at other rates are rejected.
pub const CANONICAL_SAMPLE_RATE: u32 = 48000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Synth,
    Wav,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusSpec {
    pub kind: SourceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_sentence_count")]
    pub sentence_count: usize,
    #[serde(default = "default_sentence_seconds")]
    pub sentence_seconds: f64,
    #[serde(default = "default_edge_silence")]
    pub lead_silence_s: f64,
    #[serde(default = "default_edge_silence")]
    pub trail_silence_s: f64,
}

fn default_sentence_count() -> usize {
    20
}
fn default_sentence_seconds() -> f64 {
    4.0
}
fn default_edge_silence() -> f64 {
    1.0
}
fn default_peak_gain() -> f64 {
    crate::pipeline::DEFAULT_PEAK_GAIN_DB
}

impl StimulusSpec {
    pub fn layout(&self) -> StimulusLayout {
        StimulusLayout {
            sentence_count: self.sentence_count,
            sentence_seconds: self.sentence_seconds,
            lead_silence_s: self.lead_silence_s,
            trail_silence_s: self.trail_silence_s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarSpec {
    pub id: String,
    pub kind: SourceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rt60_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct_to_reverb_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub id: String,
    pub kind: SourceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<NoiseClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_dbfs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MicsSpec {
    /// Profile-id list file; the shipped 113-profile default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<PathBuf>,
    #[serde(default = "default_peak_gain")]
    pub peak_gain_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub sample_rate: u32,
    pub stimulus: StimulusSpec,
    #[serde(default)]
    pub mics: MicsSpec,
    pub cars: Vec<CarSpec>,
    pub noises: Vec<NoiseSpec>,
    /// Optional file with one reference sentence text per line, for the
    /// ASR export. Built-in texts are used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub references: Option<PathBuf>,
    /// Directory the manifest was loaded from; resolves relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = toml::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        manifest.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Manifest(format!("serialize: {e}")))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate != CANONICAL_SAMPLE_RATE {
            return Err(Error::Manifest(format!(
                "sample_rate must be the canonical {CANONICAL_SAMPLE_RATE} Hz \
                 (fullband filters need the Nyquist headroom; resampling is out of scope), \
                 got {}",
                self.sample_rate
            )));
        }
        self.stimulus.layout().validate()?;
        if self.cars.is_empty() {
            return Err(Error::Manifest("at least one car is required".into()));
        }
        if self.noises.is_empty() {
            return Err(Error::Manifest("at least one noise is required".into()));
        }
        let mut car_ids: Vec<&str> = self.cars.iter().map(|c| c.id.as_str()).collect();
        car_ids.sort_unstable();
        car_ids.dedup();
        if car_ids.len() != self.cars.len() {
            return Err(Error::Manifest("duplicate car ids".into()));
        }
        let mut noise_ids: Vec<&str> = self.noises.iter().map(|n| n.id.as_str()).collect();
        noise_ids.sort_unstable();
        noise_ids.dedup();
        if noise_ids.len() != self.noises.len() {
            return Err(Error::Manifest("duplicate noise ids".into()));
        }

        match self.stimulus.kind {
            SourceKind::Wav if self.stimulus.path.is_none() => {
                return Err(Error::Manifest("stimulus kind=wav needs a path".into()))
            }
            SourceKind::Synth if self.stimulus.seed.is_none() => {
                return Err(Error::Manifest("stimulus kind=synth needs a seed".into()))
            }
            _ => {}
        }
        for c in &self.cars {
            match c.kind {
                SourceKind::Wav if c.path.is_none() => {
                    return Err(Error::Manifest(format!("car {:?} kind=wav needs a path", c.id)))
                }
                SourceKind::Synth
                    if c.rt60_s.is_none() || c.seed.is_none() =>
                {
                    return Err(Error::Manifest(format!(
                        "car {:?} kind=synth needs rt60_s and seed",
                        c.id
                    )))
                }
                _ => {}
            }
        }
        for n in &self.noises {
            match n.kind {
                SourceKind::Wav if n.path.is_none() => {
                    return Err(Error::Manifest(format!(
                        "noise {:?} kind=wav needs a path",
                        n.id
                    )))
                }
                SourceKind::Synth if n.class.is_none() || n.seed.is_none() => {
                    return Err(Error::Manifest(format!(
                        "noise {:?} kind=synth needs class and seed",
                        n.id
                    )))
                }
                _ => {}
            }
        }

        // severity ordering across synthesized classes that are present
        let level_of = |class: NoiseClass| -> Option<f64> {
            self.noises
                .iter()
                .find(|n| n.kind == SourceKind::Synth && n.class == Some(class))
                .map(|n| n.level_dbfs.unwrap_or(class.default_level_dbfs()))
        };
        let idle = level_of(NoiseClass::Idle);
        let city = level_of(NoiseClass::City);
        let highway = level_of(NoiseClass::Highway);
        for (lo, hi, names) in [
            (idle, city, "idle < city"),
            (city, highway, "city < highway"),
            (idle, highway, "idle < highway"),
        ] {
            if let (Some(a), Some(b)) = (lo, hi) {
                if a >= b {
                    return Err(Error::Manifest(format!(
                        "noise levels must increase with severity ({names}): {a} vs {b} dBFS"
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Reference sentence texts, one per sentence window: the manifest's
    /// file when given, the built-in texts otherwise.
    pub fn reference_texts(&self) -> Result<Vec<String>> {
        let layout = self.stimulus.layout();
        match &self.references {
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let refs: Vec<String> = text.lines().map(str::to_string).collect();
                if refs.len() != layout.sentence_count {
                    return Err(Error::Manifest(format!(
                        "references file {} has {} lines; layout has {} sentences",
                        path.display(),
                        refs.len(),
                        layout.sentence_count
                    )));
                }
                Ok(refs)
            }
            None => {
                if layout.sentence_count > REFERENCE_SENTENCES.len() {
                    return Err(Error::Manifest(format!(
                        "no references file and only {} built-in sentence texts for {} sentences",
                        REFERENCE_SENTENCES.len(),
                        layout.sentence_count
                    )));
                }
                Ok(REFERENCE_SENTENCES[..layout.sentence_count]
                    .iter()
                    .map(|s| s.to_string())
                    .collect())
            }
        }
    }

    /// Materialize every input. Files are read and rate-checked;
    /// synthesized sources are generated in memory.
    pub fn load_inputs(&self) -> Result<LoadedInputs> {
        let rate = self.sample_rate;
        let layout = self.stimulus.layout();

        let stimulus = match self.stimulus.kind {
            SourceKind::Synth => {
                synth_stimulus(&layout, rate, self.stimulus.seed.expect("validated"))?
            }
            SourceKind::Wav => {
                let path = self.resolve(self.stimulus.path.as_ref().expect("validated"));
                let buf = read_wav(&path)?;
                if buf.sample_rate != rate {
                    return Err(Error::RateMismatch {
                        left: buf.sample_rate,
                        right: rate,
                    });
                }
                if buf.len() != layout.total_samples(rate) {
                    return Err(Error::Manifest(format!(
                        "stimulus {} has {} samples; layout expects {}",
                        path.display(),
                        buf.len(),
                        layout.total_samples(rate)
                    )));
                }
                buf
            }
        };

        let mut irs = Vec::with_capacity(self.cars.len());
        for c in &self.cars {
            let ir = match c.kind {
                SourceKind::Synth => {
                    let rt60 = c.rt60_s.expect("validated");
                    let car = CarModel {
                        id: c.id.clone(),
                        rt60_s: rt60,
                        direct_to_reverb_db: c.direct_to_reverb_db.unwrap_or(4.0),
                    };
                    synth_impulse_response(
                        &car,
                        c.length_s.unwrap_or(2.0 * rt60),
                        rate,
                        c.seed.expect("validated"),
                    )?
                }
                SourceKind::Wav => {
                    let path = self.resolve(c.path.as_ref().expect("validated"));
                    let buf = read_wav(&path)?;
                    if buf.sample_rate != rate {
                        return Err(Error::RateMismatch {
                            left: buf.sample_rate,
                            right: rate,
                        });
                    }
                    ImpulseResponse::new(buf, c.id.clone())?
                }
            };
            irs.push(ir);
        }

        let mut noises = Vec::with_capacity(self.noises.len());
        for n in &self.noises {
            let buf = match n.kind {
                SourceKind::Synth => {
                    let class = n.class.expect("validated");
                    synth_noise_leveled(
                        n.level_dbfs.unwrap_or(class.default_level_dbfs()),
                        n.duration_s.unwrap_or(layout.total_seconds()),
                        rate,
                        n.seed.expect("validated"),
                    )?
                }
                SourceKind::Wav => {
                    let path = self.resolve(n.path.as_ref().expect("validated"));
                    let buf = read_wav(&path)?;
                    if buf.sample_rate != rate {
                        return Err(Error::RateMismatch {
                            left: buf.sample_rate,
                            right: rate,
                        });
                    }
                    buf
                }
            };
            noises.push((n.id.clone(), buf));
        }

        let profiles = match &self.mics.selection {
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                select_profiles(&text)?
            }
            None => default_selection(),
        };

        let references = self.reference_texts()?;

        Ok(LoadedInputs {
            sample_rate: rate,
            layout,
            stimulus,
            irs,
            noises,
            profiles,
            peak_gain_db: self.mics.peak_gain_db,
            references,
        })
    }
}

/// Everything a sweep needs, fully materialized.
#[derive(Debug, Clone)]
pub struct LoadedInputs {
    pub sample_rate: u32,
    pub layout: StimulusLayout,
    pub stimulus: AudioBuffer,
    pub irs: Vec<ImpulseResponse>,
    pub noises: Vec<(String, AudioBuffer)>,
    pub profiles: Vec<MicProfile>,
    pub peak_gain_db: f64,
    pub references: Vec<String>,
}

impl LoadedInputs {
    pub fn ir(&self, car_id: &str) -> Result<&ImpulseResponse> {
        self.irs
            .iter()
            .find(|ir| ir.source == car_id)
            .ok_or_else(|| Error::Manifest(format!("unknown car id {car_id:?}")))
    }

    pub fn noise(&self, noise_id: &str) -> Result<&AudioBuffer> {
        self.noises
            .iter()
            .find(|(id, _)| id == noise_id)
            .map(|(_, b)| b)
            .ok_or_else(|| Error::Manifest(format!("unknown noise id {noise_id:?}")))
    }
}

/// Reference sentence texts for the synthetic stimulus, one per sentence
/// window. Plain everyday sentences written for this project; real Harvard
/// stimuli come with their own reference list via the manifest.
pub const REFERENCE_SENTENCES: [&str; 20] = [
    "the small boat drifted near the quiet shore",
    "a warm light filled the empty kitchen",
    "she placed the letter under the heavy book",
    "fresh bread cooled slowly on the wooden rack",
    "the driver checked the mirror before the turn",
    "rain tapped gently on the cabin roof",
    "two birds crossed the pale morning sky",
    "he folded the map along its worn creases",
    "the engine hummed low on the long hill",
    "cold water ran fast over the smooth stones",
    "a child drew circles in the soft sand",
    "the clerk counted coins behind the counter",
    "dry leaves gathered by the garden gate",
    "the radio played softly during the ride",
    "she tied the rope to the iron ring",
    "smoke rose straight from the village chimney",
    "the old clock kept time on the wall",
    "green apples filled the basket by the door",
    "he wiped the dust from the glass case",
    "the last train left before the storm broke",
];

/// Built-in fixture sets for the `synth` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 3 cars x 3 noises, default 113-profile selection.
    Default,
    /// 1 car x 3 noises x 5 profiles; small enough for CI.
    Ci,
}

const CI_SELECTION: [&str; 5] = [
    "hp100_lp08000_flat",
    "hp350_lp08000_flat",
    "hp100_lp20000_flat",
    "hp100_lp20000_pk04000_q1.414",
    "hp100_lp20000_pk13000_q4.000",
];

/// Generate fixture WAVs plus a manifest referencing them. Returns the
/// manifest path.
pub fn write_fixture_set(preset: Preset, seed: u64, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rate = CANONICAL_SAMPLE_RATE;
    let layout = StimulusLayout::default();

    let stimulus = synth_stimulus(&layout, rate, seed + 1)?;
    write_wav(out_dir.join("stimulus.wav"), &stimulus, SampleFormat::Float32)?;

    let car_params: &[(&str, f64, f64)] = match preset {
        Preset::Default => &[
            ("sedan", 0.05, 4.0),
            ("compact_suv", 0.07, 2.0),
            ("subcompact_suv", 0.09, 1.0),
        ],
        Preset::Ci => &[("sedan", 0.05, 4.0)],
    };
    let mut cars = Vec::new();
    for (i, &(id, rt60, drr)) in car_params.iter().enumerate() {
        let car = CarModel {
            id: id.to_string(),
            rt60_s: rt60,
            direct_to_reverb_db: drr,
        };
        let ir = synth_impulse_response(&car, 2.0 * rt60, rate, seed + 11 + i as u64)?;
        let file = format!("ir_{id}.wav");
        write_wav(out_dir.join(&file), &ir.buffer, SampleFormat::Float32)?;
        cars.push(CarSpec {
            id: id.to_string(),
            kind: SourceKind::Wav,
            path: Some(PathBuf::from(file)),
            rt60_s: None,
            direct_to_reverb_db: None,
            length_s: None,
            seed: None,
        });
    }

    let mut noises = Vec::new();
    for (i, class) in [NoiseClass::Idle, NoiseClass::City, NoiseClass::Highway]
        .into_iter()
        .enumerate()
    {
        let noise = synth_noise_leveled(
            class.default_level_dbfs(),
            30.0,
            rate,
            seed + 21 + i as u64,
        )?;
        let file = format!("noise_{}.wav", class.name());
        write_wav(out_dir.join(&file), &noise, SampleFormat::Float32)?;
        noises.push(NoiseSpec {
            id: class.name().to_string(),
            kind: SourceKind::Wav,
            path: Some(PathBuf::from(file)),
            class: Some(class),
            level_dbfs: None,
            duration_s: None,
            seed: None,
        });
    }

    let selection = match preset {
        Preset::Default => None,
        Preset::Ci => {
            let path = out_dir.join("selection.txt");
            let text: String = CI_SELECTION.iter().map(|id| format!("{id}\n")).collect();
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Some(PathBuf::from("selection.txt"))
        }
    };

    let manifest = Manifest {
        sample_rate: rate,
        stimulus: StimulusSpec {
            kind: SourceKind::Wav,
            path: Some(PathBuf::from("stimulus.wav")),
            seed: None,
            sentence_count: layout.sentence_count,
            sentence_seconds: layout.sentence_seconds,
            lead_silence_s: layout.lead_silence_s,
            trail_silence_s: layout.trail_silence_s,
        },
        mics: MicsSpec {
            selection,
            peak_gain_db: crate::pipeline::DEFAULT_PEAK_GAIN_DB,
        },
        cars,
        noises,
        references: None,
        base_dir: out_dir.to_path_buf(),
    };
    let manifest_path = out_dir.join("manifest.toml");
    manifest.save(&manifest_path)?;
    Ok(manifest_path)
}

/// An all-synth manifest (no files on disk) for tests and quick runs.
pub fn synth_manifest(preset: Preset, seed: u64) -> Manifest {
    let layout = StimulusLayout::default();
    let car_params: &[(&str, f64, f64)] = match preset {
        Preset::Default => &[
            ("sedan", 0.05, 4.0),
            ("compact_suv", 0.07, 2.0),
            ("subcompact_suv", 0.09, 1.0),
        ],
        Preset::Ci => &[("sedan", 0.05, 4.0)],
    };
    Manifest {
        sample_rate: CANONICAL_SAMPLE_RATE,
        stimulus: StimulusSpec {
            kind: SourceKind::Synth,
            path: None,
            seed: Some(seed + 1),
            sentence_count: layout.sentence_count,
            sentence_seconds: layout.sentence_seconds,
            lead_silence_s: layout.lead_silence_s,
            trail_silence_s: layout.trail_silence_s,
        },
        mics: MicsSpec::default(),
        cars: car_params
            .iter()
            .enumerate()
            .map(|(i, &(id, rt60, drr))| CarSpec {
                id: id.to_string(),
                kind: SourceKind::Synth,
                path: None,
                rt60_s: Some(rt60),
                direct_to_reverb_db: Some(drr),
                length_s: None,
                seed: Some(seed + 11 + i as u64),
            })
            .collect(),
        noises: [NoiseClass::Idle, NoiseClass::City, NoiseClass::Highway]
            .into_iter()
            .enumerate()
            .map(|(i, class)| NoiseSpec {
                id: class.name().to_string(),
                kind: SourceKind::Synth,
                path: None,
                class: Some(class),
                level_dbfs: None,
                duration_s: Some(30.0),
                seed: Some(seed + 21 + i as u64),
            })
            .collect(),
        references: None,
        base_dir: PathBuf::from("."),
    }
}
