//! Bridges to externally computed metrics.
//!
//! MOS-style scores come from commercial estimators and ASR hypotheses
//! from whatever engine the user runs; this artifact never fabricates
//! either. `export_asr_batch` writes per-sentence WAVs plus a job list;
//! `read_hypotheses` + `wer_records_from_hypotheses` turn the engine's
//! transcripts into pooled per-condition WER rows; `ingest_external_metrics`
//! validates and merges a generic metric CSV.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::audio::{write_wav, AudioBuffer, SampleFormat};
use crate::dataset::{Dataset, SentenceRecord};
use crate::dsp::convolve;
use crate::error::{Error, Result};
use crate::metrics::segment;
use crate::metrics::wer::{normalize_text, wer, wer_aggregate, WerCounts};
use crate::pipeline::render::tile_noise;
use crate::pipeline::{enumerate_conditions, LoadedInputs};

/// Columns of `asr/jobs.csv`.
pub const JOBS_HEADER: &str = "condition_id,sentence_idx,wav_path,reference";
/// Columns of `asr/hypotheses.csv`.
pub const HYPOTHESES_HEADER: &str = "condition_id,sentence_idx,hypothesis";
/// Columns of an external metric CSV.
pub const EXTERNAL_HEADER: &str = "condition_id,sentence_idx,metric,value";

/// Merge an externally computed metric CSV against a dataset.
///
/// Rows must reference known condition ids and sentence indices, metric
/// values must be finite, `*_mos` metrics must sit in [1, 5], and a
/// (condition, sentence, metric) key may appear only once across the file
/// and the existing dataset.
pub fn ingest_external_metrics(
    path: impl AsRef<Path>,
    dataset: &Dataset,
) -> Result<Vec<SentenceRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    {
        let got: Vec<&str> = reader
            .headers()
            .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?
            .iter()
            .collect();
        let expected: Vec<&str> = EXTERNAL_HEADER.split(',').collect();
        if got != expected {
            return Err(Error::Ingest(format!(
                "{}: expected header {EXTERNAL_HEADER:?}, got {:?}",
                path.display(),
                got.join(",")
            )));
        }
    }

    let by_condition: HashMap<&str, &SentenceRecord> = dataset
        .conditions()
        .into_iter()
        .map(|r| (r.condition_id.as_str(), r))
        .collect();
    let max_idx = dataset.max_sentence_idx();

    let mut seen: HashMap<(String, i64, String), usize> = HashMap::new();
    for r in &dataset.records {
        seen.insert(
            (r.condition_id.clone(), r.sentence_idx, r.metric.clone()),
            0,
        );
    }

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
        if row.len() != 4 {
            return Err(Error::Ingest(format!(
                "{} line {line}: expected 4 columns, got {}",
                path.display(),
                row.len()
            )));
        }
        let condition_id = row[0].to_string();
        let meta = by_condition.get(condition_id.as_str()).ok_or_else(|| {
            Error::Ingest(format!(
                "{} line {line}: unknown condition_id {condition_id:?}",
                path.display()
            ))
        })?;
        let sentence_idx: i64 = row[1].parse().map_err(|_| {
            Error::Ingest(format!(
                "{} line {line}: bad sentence_idx {:?}",
                path.display(),
                &row[1]
            ))
        })?;
        if sentence_idx < -1 || sentence_idx > max_idx {
            return Err(Error::Ingest(format!(
                "{} line {line}: sentence_idx {sentence_idx} outside -1..={max_idx}",
                path.display()
            )));
        }
        let metric = row[2].to_string();
        if metric.is_empty() {
            return Err(Error::Ingest(format!(
                "{} line {line}: empty metric name",
                path.display()
            )));
        }
        let value: f64 = row[3].parse().map_err(|_| {
            Error::Ingest(format!(
                "{} line {line}: bad value {:?}",
                path.display(),
                &row[3]
            ))
        })?;
        if !value.is_finite() {
            return Err(Error::Ingest(format!(
                "{} line {line}: non-finite value {value}",
                path.display()
            )));
        }
        if metric.ends_with("_mos") && !(1.0..=5.0).contains(&value) {
            return Err(Error::Ingest(format!(
                "{} line {line}: {metric} value {value} outside the 1..5 MOS scale",
                path.display()
            )));
        }
        let key = (condition_id.clone(), sentence_idx, metric.clone());
        if seen.insert(key, line).is_some() {
            return Err(Error::Ingest(format!(
                "{} line {line}: duplicate (condition, sentence, metric) = \
                 ({condition_id}, {sentence_idx}, {metric})",
                path.display()
            )));
        }
        out.push(SentenceRecord {
            condition_id,
            car: meta.car.clone(),
            noise: meta.noise.clone(),
            hp_fc: meta.hp_fc,
            lp_fc: meta.lp_fc,
            peak_fc: meta.peak_fc,
            peak_q: meta.peak_q,
            sentence_idx,
            metric,
            value,
        });
    }
    Ok(out)
}

pub struct AsrExport {
    pub jobs_path: PathBuf,
    pub wav_count: usize,
}

/// Render every condition and write its sentence windows as individual
/// WAVs plus `asr/jobs.csv` naming the reference text for each.
///
/// The external engine is expected to write `asr/hypotheses.csv`
/// (`condition_id,sentence_idx,hypothesis`) next to it.
pub fn export_asr_batch(inputs: &LoadedInputs, out_dir: impl AsRef<Path>) -> Result<AsrExport> {
    let asr_dir = out_dir.as_ref().join("asr");
    fs::create_dir_all(&asr_dir).map_err(|e| Error::io(&asr_dir, e))?;

    let len = inputs.stimulus.len();
    let wet_by_car: Vec<(String, Vec<f64>)> = inputs
        .irs
        .iter()
        .map(|ir| {
            let wet = convolve(&inputs.stimulus, ir)?;
            Ok((ir.source.clone(), wet.samples[..len].to_vec()))
        })
        .collect::<Result<_>>()?;
    let tiled_by_noise: Vec<(String, Vec<f64>)> = inputs
        .noises
        .iter()
        .map(|(id, buf)| Ok((id.clone(), tile_noise(buf, len)?)))
        .collect::<Result<_>>()?;

    let conditions = enumerate_conditions(inputs);
    let rows: Vec<Vec<String>> = conditions
        .par_iter()
        .map(|cond| -> Result<Vec<String>> {
            let wet = &wet_by_car
                .iter()
                .find(|(id, _)| id == &cond.car_id)
                .expect("enumerated")
                .1;
            let tiled = &tiled_by_noise
                .iter()
                .find(|(id, _)| id == &cond.noise_id)
                .expect("enumerated")
                .1;
            let cascade = cond.mic.cascade(inputs.peak_gain_db, inputs.sample_rate)?;
            let rendered = cascade.apply(&AudioBuffer {
                samples: wet.iter().zip(tiled).map(|(a, b)| a + b).collect(),
                sample_rate: inputs.sample_rate,
            });
            let spans = segment(&rendered, &inputs.layout)?;
            let condition_id = cond.id();
            let cond_dir = asr_dir.join(&condition_id);
            fs::create_dir_all(&cond_dir).map_err(|e| Error::io(&cond_dir, e))?;
            spans
                .iter()
                .enumerate()
                .map(|(k, span)| {
                    let slice = AudioBuffer {
                        samples: rendered.samples[span.start..span.end].to_vec(),
                        sample_rate: inputs.sample_rate,
                    };
                    let rel = format!("{condition_id}/{k}.wav");
                    write_wav(asr_dir.join(&rel), &slice, SampleFormat::Float32)?;
                    Ok(format!(
                        "{condition_id},{k},{rel},{}",
                        inputs.references[k]
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut jobs = String::from(JOBS_HEADER);
    jobs.push('\n');
    let mut wav_count = 0usize;
    for group in rows {
        for row in group {
            jobs.push_str(&row);
            jobs.push('\n');
            wav_count += 1;
        }
    }
    let jobs_path = asr_dir.join("jobs.csv");
    fs::write(&jobs_path, jobs).map_err(|e| Error::io(&jobs_path, e))?;
    Ok(AsrExport {
        jobs_path,
        wav_count,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub condition_id: String,
    pub sentence_idx: usize,
    pub hypothesis: String,
}

/// Read `asr/hypotheses.csv`. Duplicate (condition, sentence) rows are an
/// error.
pub fn read_hypotheses(path: impl AsRef<Path>) -> Result<Vec<Transcript>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    {
        let got: Vec<&str> = reader
            .headers()
            .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?
            .iter()
            .collect();
        let expected: Vec<&str> = HYPOTHESES_HEADER.split(',').collect();
        if got != expected {
            return Err(Error::Ingest(format!(
                "{}: expected header {HYPOTHESES_HEADER:?}, got {:?}",
                path.display(),
                got.join(",")
            )));
        }
    }
    let mut out: Vec<Transcript> = Vec::new();
    let mut seen: HashMap<(String, usize), usize> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
        let condition_id = row[0].to_string();
        let sentence_idx: usize = row[1].parse().map_err(|_| {
            Error::Ingest(format!(
                "{} line {line}: bad sentence_idx {:?}",
                path.display(),
                &row[1]
            ))
        })?;
        if seen
            .insert((condition_id.clone(), sentence_idx), line)
            .is_some()
        {
            return Err(Error::Ingest(format!(
                "{} line {line}: duplicate transcript for ({condition_id}, {sentence_idx})",
                path.display()
            )));
        }
        out.push(Transcript {
            condition_id,
            sentence_idx,
            hypothesis: row[2].to_string(),
        });
    }
    Ok(out)
}

/// Pool transcripts into one WER row per condition
/// (`metric = "wer"`, `sentence_idx = -1`).
///
/// A sentence with no transcript counts as a full deletion (an engine
/// emitting nothing on noisy input must not bias WER down); conditions
/// with no transcripts at all get no row.
pub fn wer_records_from_hypotheses(
    dataset: &Dataset,
    transcripts: &[Transcript],
    references: &[String],
) -> Result<Vec<SentenceRecord>> {
    if references.is_empty() {
        return Err(Error::Invalid("no reference texts".into()));
    }
    let ref_words: Vec<Vec<String>> = references.iter().map(|s| normalize_text(s)).collect();
    for (k, w) in ref_words.iter().enumerate() {
        if w.is_empty() {
            return Err(Error::Invalid(format!(
                "reference sentence {k} has no words after normalization"
            )));
        }
    }

    let conditions = dataset.conditions();
    let by_condition: HashMap<&str, &SentenceRecord> = conditions
        .iter()
        .map(|r| (r.condition_id.as_str(), *r))
        .collect();
    for r in &dataset.records {
        if r.metric == "wer" {
            return Err(Error::Ingest(format!(
                "dataset already has a wer row for condition {}",
                r.condition_id
            )));
        }
    }

    let mut hyp_map: HashMap<&str, HashMap<usize, &str>> = HashMap::new();
    for t in transcripts {
        if !by_condition.contains_key(t.condition_id.as_str()) {
            return Err(Error::Ingest(format!(
                "transcript references unknown condition {:?}",
                t.condition_id
            )));
        }
        if t.sentence_idx >= references.len() {
            return Err(Error::Ingest(format!(
                "transcript for {} names sentence {} but only {} references exist",
                t.condition_id,
                t.sentence_idx,
                references.len()
            )));
        }
        hyp_map
            .entry(t.condition_id.as_str())
            .or_default()
            .insert(t.sentence_idx, t.hypothesis.as_str());
    }

    let mut out = Vec::new();
    for meta in conditions {
        let Some(hyps) = hyp_map.get(meta.condition_id.as_str()) else {
            continue;
        };
        let counts: Vec<WerCounts> = ref_words
            .iter()
            .enumerate()
            .map(|(k, rw)| match hyps.get(&k) {
                Some(h) => wer(rw, &normalize_text(h)),
                None => Ok(WerCounts::full_deletion(rw.len())),
            })
            .collect::<Result<_>>()?;
        out.push(SentenceRecord {
            condition_id: meta.condition_id.clone(),
            car: meta.car.clone(),
            noise: meta.noise.clone(),
            hp_fc: meta.hp_fc,
            lp_fc: meta.lp_fc,
            peak_fc: meta.peak_fc,
            peak_q: meta.peak_q,
            sentence_idx: -1,
            metric: "wer".into(),
            value: wer_aggregate(&counts)?,
        });
    }
    Ok(out)
}
