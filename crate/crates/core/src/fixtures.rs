//! Synthetic, license-free stand-ins for proprietary inputs: a speech-like
//! stimulus, car impulse responses, and driving noises at three severities.
//!
//! Every generator is a pure function of its parameters and a `u64` seed
//! (ChaCha8 stream, see `rng`): identical inputs give bit-identical
//! buffers on every platform.

use crate::audio::{AudioBuffer, ImpulseResponse};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Timing structure of the sentence stimulus.
///
/// Each sentence occupies a fixed window: leading silence, active speech,
/// trailing silence. Defaults give 20 four-second sentences (80 s total)
/// with one second of silence at each end of the window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StimulusLayout {
    pub sentence_count: usize,
    pub sentence_seconds: f64,
    pub lead_silence_s: f64,
    pub trail_silence_s: f64,
}

impl Default for StimulusLayout {
    fn default() -> Self {
        StimulusLayout {
            sentence_count: 20,
            sentence_seconds: 4.0,
            lead_silence_s: 1.0,
            trail_silence_s: 1.0,
        }
    }
}

impl StimulusLayout {
    pub fn validate(&self) -> Result<()> {
        if self.sentence_count == 0 {
            return Err(Error::Invalid("layout needs at least one sentence".into()));
        }
        if !(self.sentence_seconds > 0.0
            && self.lead_silence_s >= 0.0
            && self.trail_silence_s >= 0.0)
        {
            return Err(Error::Invalid("layout durations must be positive".into()));
        }
        if self.lead_silence_s + self.trail_silence_s >= self.sentence_seconds {
            return Err(Error::Invalid(format!(
                "lead ({}) + trail ({}) silence must be shorter than the sentence ({} s)",
                self.lead_silence_s, self.trail_silence_s, self.sentence_seconds
            )));
        }
        Ok(())
    }

    pub fn total_seconds(&self) -> f64 {
        self.sentence_count as f64 * self.sentence_seconds
    }

    pub fn sentence_samples(&self, sample_rate: u32) -> usize {
        (self.sentence_seconds * sample_rate as f64).round() as usize
    }

    pub fn lead_samples(&self, sample_rate: u32) -> usize {
        (self.lead_silence_s * sample_rate as f64).round() as usize
    }

    pub fn trail_samples(&self, sample_rate: u32) -> usize {
        (self.trail_silence_s * sample_rate as f64).round() as usize
    }

    pub fn total_samples(&self, sample_rate: u32) -> usize {
        self.sentence_count * self.sentence_samples(sample_rate)
    }
}

/// Driving-noise severity classes with their default render levels.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum NoiseClass {
    Idle,
    City,
    Highway,
}

impl NoiseClass {
    /// Default RMS target. Levels are chosen so rendered A-weighted SNR
    /// spans roughly +30 dB (idle) down to single digits (highway).
    pub fn default_level_dbfs(self) -> f64 {
        match self {
            NoiseClass::Idle => -50.0,
            NoiseClass::City => -35.0,
            NoiseClass::Highway => -25.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseClass::Idle => "idle",
            NoiseClass::City => "city",
            NoiseClass::Highway => "highway",
        }
    }
}

/// Synthetic cabin analog of a car: reverberation time plus the energy
/// ratio of the direct path to the reverberant tail.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CarModel {
    pub id: String,
    pub rt60_s: f64,
    pub direct_to_reverb_db: f64,
}

/// Highest harmonic allowed in the synthetic stimulus. Keeps all speech
/// energy in the band relevant for the bandwidth comparisons.
pub const STIMULUS_MAX_HARMONIC_HZ: f64 = 3400.0;

/// Active-region peak level of each synthesized sentence.
pub const STIMULUS_PEAK_DBFS: f64 = -12.0;

/// Generate the sentence stimulus.
///
/// Each sentence's active region is a harmonic complex (fundamental
/// alternating 120/220 Hz to mimic male and female talkers, random phases
/// per harmonic) amplitude-modulated at a 4 Hz syllabic rate, peaking at
/// -12 dBFS. Lead/trail regions are exactly zero.
pub fn synth_stimulus(
    layout: &StimulusLayout,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer> {
    layout.validate()?;
    let fs = sample_rate as f64;
    let sentence_n = layout.sentence_samples(sample_rate);
    let lead_n = layout.lead_samples(sample_rate);
    let trail_n = layout.trail_samples(sample_rate);
    let active_n = sentence_n
        .checked_sub(lead_n + trail_n)
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Invalid("no active region left in sentence window".into()))?;

    let peak = 10f64.powf(STIMULUS_PEAK_DBFS / 20.0);
    let mut rng = SeededRng::new(seed);
    let mut samples = vec![0.0f64; layout.total_samples(sample_rate)];

    for s in 0..layout.sentence_count {
        let f0 = if s % 2 == 0 { 120.0 } else { 220.0 };
        let harmonics = (STIMULUS_MAX_HARMONIC_HZ / f0).floor() as usize;
        let phases: Vec<f64> = (0..harmonics)
            .map(|_| rng.uniform() * 2.0 * std::f64::consts::PI)
            .collect();

        let start = s * sentence_n + lead_n;
        let mut peak_raw = 0.0f64;
        let active = &mut samples[start..start + active_n];
        for (i, out) in active.iter_mut().enumerate() {
            let t = i as f64 / fs;
            let mut v = 0.0;
            for (k, &phi) in phases.iter().enumerate() {
                let h = (k + 1) as f64;
                v += (2.0 * std::f64::consts::PI * h * f0 * t + phi).sin() / h;
            }
            // raised-cosine syllabic envelope, zero at both window edges
            let env = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * 4.0 * t).cos());
            let v = v * env;
            peak_raw = peak_raw.max(v.abs());
            *out = v;
        }
        if peak_raw > 0.0 {
            let g = peak / peak_raw;
            for v in active.iter_mut() {
                *v *= g;
            }
        }
    }

    Ok(AudioBuffer {
        samples,
        sample_rate,
    })
}

/// Generate a synthetic car impulse response: a unit direct-path impulse
/// at t = 0 plus an exponentially decaying white-noise tail.
///
/// The tail is scaled so the direct-to-reverb energy ratio is met exactly,
/// and the decay rate is solved so the Schroeder energy-decay curve of the
/// whole response crosses -60 dB at `rt60_s`. An infinite
/// `direct_to_reverb_db` yields a pure delta.
pub fn synth_impulse_response(
    car: &CarModel,
    length_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<ImpulseResponse> {
    if !(car.rt60_s > 0.0) {
        return Err(Error::Invalid(format!(
            "rt60 must be positive, got {}",
            car.rt60_s
        )));
    }
    if length_s < car.rt60_s {
        return Err(Error::Invalid(format!(
            "ir length {length_s} s is shorter than rt60 {} s",
            car.rt60_s
        )));
    }
    let n = (length_s * sample_rate as f64).round() as usize;
    if n < 2 {
        return Err(Error::Invalid("ir length under two samples".into()));
    }

    let mut h = vec![0.0f64; n];
    h[0] = 1.0;

    if car.direct_to_reverb_db.is_finite() {
        let e_tail = 10f64.powf(-car.direct_to_reverb_db / 10.0);
        // decay rate such that the full EDC (direct + tail) hits -60 dB at
        // rt60: exp(-2 a rt60) * E_tail = 1e-6 * (1 + E_tail)
        let alpha = (6.0 * std::f64::consts::LN_10 + (e_tail / (1.0 + e_tail)).ln())
            / (2.0 * car.rt60_s);
        if alpha <= 0.0 {
            return Err(Error::Invalid(format!(
                "direct-to-reverb ratio {} dB leaves no -60 dB tail decay; \
                 use +inf for a pure delta",
                car.direct_to_reverb_db
            )));
        }
        let mut rng = SeededRng::new(seed);
        let fs = sample_rate as f64;
        let mut e_raw = 0.0;
        for (i, v) in h.iter_mut().enumerate().skip(1) {
            let w = rng.bipolar() * (-alpha * i as f64 / fs).exp();
            e_raw += w * w;
            *v = w;
        }
        if e_raw > 0.0 {
            let g = (e_tail / e_raw).sqrt();
            for v in h.iter_mut().skip(1) {
                *v *= g;
            }
        }
    }

    ImpulseResponse::new(
        AudioBuffer {
            samples: h,
            sample_rate,
        },
        car.id.clone(),
    )
}

/// Generate driving noise of the given class at its default level.
pub fn synth_noise(
    class: NoiseClass,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer> {
    synth_noise_leveled(class.default_level_dbfs(), duration_s, sample_rate, seed)
}

/// Generate road-like noise at an explicit RMS level in dBFS.
///
/// White noise is shaped to an approximate 1/f spectrum (Kellet's economy
/// pinking filter) and tilted down with a gentle one-pole low-pass, then
/// scaled so the measured RMS equals `level_dbfs` exactly.
pub fn synth_noise_leveled(
    level_dbfs: f64,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer> {
    if !(duration_s > 0.0) {
        return Err(Error::Invalid(format!(
            "noise duration must be positive, got {duration_s}"
        )));
    }
    if !level_dbfs.is_finite() {
        return Err(Error::Invalid("noise level must be finite".into()));
    }
    let n = (duration_s * sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::Invalid("noise duration under one sample".into()));
    }

    let mut rng = SeededRng::new(seed);
    let mut samples = Vec::with_capacity(n);
    let (mut b0, mut b1, mut b2) = (0.0f64, 0.0, 0.0);
    let mut lp = 0.0f64;
    // one-pole tilt around 800 Hz mimics the LF-heavy road noise slope
    let tilt = 1.0 - (-2.0 * std::f64::consts::PI * 800.0 / sample_rate as f64).exp();
    for _ in 0..n {
        let w = rng.bipolar();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        let pink = b0 + b1 + b2 + w * 0.1848;
        lp += tilt * (pink - lp);
        samples.push(lp);
    }

    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        let g = 10f64.powf(level_dbfs / 20.0) / rms;
        for v in &mut samples {
            *v *= g;
        }
    }

    Ok(AudioBuffer {
        samples,
        sample_rate,
    })
}
