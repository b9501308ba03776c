//! The microphone frequency-response grid and the condition sweep.

pub mod manifest;
pub mod render;

pub use manifest::{LoadedInputs, Manifest};
pub use render::{enumerate_conditions, render_condition, run_sweep, SweepOptions};

use crate::dsp::{design_biquad, FilterCascade, FilterKind};
use crate::error::{Error, Result};

/// High-pass corner choices, Hz.
pub const HP_CORNERS: [f64; 3] = [20.0, 100.0, 350.0];
/// Low-pass corner choices, Hz: narrowband through fullband.
pub const LP_CORNERS: [f64; 5] = [4000.0, 8000.0, 12000.0, 16000.0, 20000.0];
/// Resonance peak center choices, Hz.
pub const PEAK_CENTERS: [f64; 5] = [4000.0, 6000.0, 8000.0, 13000.0, 16000.0];
/// Resonance peak quality choices.
pub const PEAK_QS: [f64; 3] = [1.414, 2.0, 4.0];
/// Bandwidth-defining filters share this Butterworth quality.
pub const BANDWIDTH_Q: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// Default resonance peak amplitude, dB.
pub const DEFAULT_PEAK_GAIN_DB: f64 = 20.0;
/// Size of the shipped default profile selection.
pub const DEFAULT_SELECTION_LEN: usize = 113;

/// Resonance peak position and sharpness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSpec {
    pub fc: f64,
    pub q: f64,
}

/// One microphone frequency-response shape: bandwidth corners plus an
/// optional resonance peak. The id is uniquely determined by the
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MicProfile {
    pub hp_fc: f64,
    pub lp_fc: f64,
    pub peak: Option<PeakSpec>,
    pub id: String,
}

impl MicProfile {
    pub fn new(hp_fc: f64, lp_fc: f64, peak: Option<PeakSpec>) -> Result<Self> {
        if !(hp_fc > 0.0 && lp_fc > hp_fc) {
            return Err(Error::Invalid(format!(
                "mic profile needs 0 < hp_fc < lp_fc, got {hp_fc}/{lp_fc}"
            )));
        }
        if let Some(p) = &peak {
            if !(p.fc > hp_fc) {
                return Err(Error::Invalid(format!(
                    "peak center {} Hz must sit above the high-pass corner {hp_fc} Hz",
                    p.fc
                )));
            }
            if !(p.q > 0.0) {
                return Err(Error::Invalid(format!("peak q must be positive, got {}", p.q)));
            }
        }
        let id = match &peak {
            Some(p) => format!(
                "hp{:03}_lp{:05}_pk{:05}_q{:.3}",
                hp_fc as u32, lp_fc as u32, p.fc as u32, p.q
            ),
            None => format!("hp{:03}_lp{:05}_flat", hp_fc as u32, lp_fc as u32),
        };
        Ok(MicProfile {
            hp_fc,
            lp_fc,
            peak,
            id,
        })
    }

    /// -1 encodes "no peak" in datasets and figure legends.
    pub fn peak_fc_code(&self) -> f64 {
        self.peak.map_or(-1.0, |p| p.fc)
    }

    pub fn peak_q_code(&self) -> f64 {
        self.peak.map_or(-1.0, |p| p.q)
    }

    /// Build the emulation cascade: high-pass, low-pass, then peak. The
    /// magnitude is order-independent; the fixed order keeps renders
    /// bit-reproducible.
    pub fn cascade(&self, peak_gain_db: f64, sample_rate: u32) -> Result<FilterCascade> {
        let mut sections = vec![
            design_biquad(
                FilterKind::HighPass2 {
                    fc: self.hp_fc,
                    q: BANDWIDTH_Q,
                },
                sample_rate,
            )?,
            design_biquad(
                FilterKind::LowPass2 {
                    fc: self.lp_fc,
                    q: BANDWIDTH_Q,
                },
                sample_rate,
            )?,
        ];
        if let Some(p) = &self.peak {
            sections.push(design_biquad(
                FilterKind::Peak2 {
                    fc: p.fc,
                    q: p.q,
                    gain_db: peak_gain_db,
                },
                sample_rate,
            )?);
        }
        FilterCascade::from_sections(sections)
    }
}

/// Cartesian product of the grid parameters.
///
/// Ordering is deterministic: hp ascending, lp ascending, then peak center
/// and q ascending; when `include_no_peak` is set, the flat (no-peak)
/// profile comes last within each (hp, lp) block.
pub fn full_grid(include_no_peak: bool) -> Vec<MicProfile> {
    let mut out = Vec::new();
    for &hp in &HP_CORNERS {
        for &lp in &LP_CORNERS {
            for &fc in &PEAK_CENTERS {
                for &q in &PEAK_QS {
                    out.push(
                        MicProfile::new(hp, lp, Some(PeakSpec { fc, q }))
                            .expect("grid parameters are valid"),
                    );
                }
            }
            if include_no_peak {
                out.push(MicProfile::new(hp, lp, None).expect("grid parameters are valid"));
            }
        }
    }
    out
}

/// The shipped default selection of 113 profiles.
///
/// The exact set used in practice varies by lab; this default is a
/// documented placeholder heuristic: every flat-bandwidth combination (15)
/// plus peaked combinations whose center sits inside or just above the
/// passband (peak fc > hp corner and peak fc < 1.25 x lp corner), taken in
/// grid order and truncated to 113 profiles total.
pub fn default_selection() -> Vec<MicProfile> {
    let mut out: Vec<MicProfile> = Vec::with_capacity(DEFAULT_SELECTION_LEN);
    let mut peaked_budget = DEFAULT_SELECTION_LEN - 15;
    for p in full_grid(true) {
        match &p.peak {
            None => out.push(p),
            Some(peak) => {
                if peaked_budget > 0 && peak.fc > p.hp_fc && peak.fc < p.lp_fc * 1.25 {
                    out.push(p);
                    peaked_budget -= 1;
                }
            }
        }
    }
    debug_assert_eq!(out.len(), DEFAULT_SELECTION_LEN);
    out
}

/// Resolve a selection file (one profile id per line, `#` comments) against
/// the full grid. The result keeps grid order regardless of file order.
pub fn select_profiles(selection_text: &str) -> Result<Vec<MicProfile>> {
    let grid = full_grid(true);
    let mut wanted: Vec<&str> = Vec::new();
    for (lineno, raw) in selection_text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if wanted.contains(&line) {
            return Err(Error::Invalid(format!(
                "selection line {}: duplicate profile id {line:?}",
                lineno + 1
            )));
        }
        wanted.push(line);
    }
    if wanted.is_empty() {
        return Err(Error::Invalid(
            "selection file lists no profiles".into(),
        ));
    }
    for id in &wanted {
        if !grid.iter().any(|p| p.id == *id) {
            return Err(Error::Invalid(format!("unknown profile id {id:?}")));
        }
    }
    Ok(grid
        .into_iter()
        .filter(|p| wanted.contains(&p.id.as_str()))
        .collect())
}

/// One cell of the sweep: a microphone shape in a car under a noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub mic: MicProfile,
    pub car_id: String,
    pub noise_id: String,
}

impl Condition {
    pub fn id(&self) -> String {
        format!("{}__{}__{}", self.mic.id, self.car_id, self.noise_id)
    }
}
