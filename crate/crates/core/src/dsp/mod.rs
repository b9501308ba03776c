//! Second-order filter design and application.
//!
//! Sections are designed from analog prototypes via the bilinear transform
//! with frequency prewarping, so the analog corner/center frequency lands
//! exactly on the requested digital frequency. The derivations follow the
//! familiar audio-EQ cookbook forms: low-pass and high-pass are standard
//! second-order resonant prototypes with quality `q`; the peaking section
//! has unity gain at DC and Nyquist with `|H(fc)|` equal to the requested
//! boost.

mod a_weighting;
mod convolve;

pub use a_weighting::a_weighting_cascade;
pub use convolve::convolve;

use rustfft::num_complex::Complex;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// One second-order section; `a0` is normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    pub fn identity() -> Self {
        BiquadCoeffs {
            b0: 1.0,
            b1: 0.0,
            b2: 0.0,
            a1: 0.0,
            a2: 0.0,
        }
    }

    /// Both poles strictly inside the unit circle:
    /// `|a2| < 1` and `|a1| < 1 + a2`.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Complex response at `freq` Hz.
    fn response_at(&self, freq: f64, sample_rate: u32) -> Complex<f64> {
        let w = 2.0 * std::f64::consts::PI * freq / sample_rate as f64;
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = Complex::new(self.b0, 0.0) + z1 * self.b1 + z2 * self.b2;
        let den = Complex::new(1.0, 0.0) + z1 * self.a1 + z2 * self.a2;
        num / den
    }

    /// `20*log10 |H(e^{j2*pi*f/fs})|` at each frequency.
    pub fn magnitude_db(&self, freqs: &[f64], sample_rate: u32) -> Result<Vec<f64>> {
        let nyquist = sample_rate as f64 / 2.0;
        freqs
            .iter()
            .map(|&f| {
                if !(0.0..=nyquist).contains(&f) {
                    return Err(Error::FrequencyRange { freq: f, nyquist });
                }
                Ok(20.0 * self.response_at(f, sample_rate).norm().log10())
            })
            .collect()
    }
}

/// Filter shape plus its design parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    HighPass2 { fc: f64, q: f64 },
    LowPass2 { fc: f64, q: f64 },
    Peak2 { fc: f64, q: f64, gain_db: f64 },
}

/// Design one section at the given sample rate.
pub fn design_biquad(kind: FilterKind, sample_rate: u32) -> Result<BiquadCoeffs> {
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    let (fc, q) = match kind {
        FilterKind::HighPass2 { fc, q }
        | FilterKind::LowPass2 { fc, q }
        | FilterKind::Peak2 { fc, q, .. } => (fc, q),
    };
    if !(fc > 0.0 && fc < nyquist) {
        return Err(Error::FilterDesign(format!(
            "corner/center {fc} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    if !(q > 0.0) {
        return Err(Error::FilterDesign(format!("q must be positive, got {q}")));
    }

    let w0 = 2.0 * std::f64::consts::PI * fc / fs;
    let cos_w0 = w0.cos();
    let sin_w0 = w0.sin();
    let alpha = sin_w0 / (2.0 * q);

    let (b0, b1, b2, a0, a1, a2) = match kind {
        FilterKind::LowPass2 { .. } => {
            let b1 = 1.0 - cos_w0;
            (
                b1 * 0.5,
                b1,
                b1 * 0.5,
                1.0 + alpha,
                -2.0 * cos_w0,
                1.0 - alpha,
            )
        }
        FilterKind::HighPass2 { .. } => {
            let p = 1.0 + cos_w0;
            (
                p * 0.5,
                -p,
                p * 0.5,
                1.0 + alpha,
                -2.0 * cos_w0,
                1.0 - alpha,
            )
        }
        FilterKind::Peak2 { gain_db, .. } => {
            if !gain_db.is_finite() {
                return Err(Error::FilterDesign(format!(
                    "peak gain must be finite, got {gain_db}"
                )));
            }
            let a = 10f64.powf(gain_db / 40.0);
            (
                1.0 + alpha * a,
                -2.0 * cos_w0,
                1.0 - alpha * a,
                1.0 + alpha / a,
                -2.0 * cos_w0,
                1.0 - alpha / a,
            )
        }
    };

    let coeffs = BiquadCoeffs {
        b0: b0 / a0,
        b1: b1 / a0,
        b2: b2 / a0,
        a1: a1 / a0,
        a2: a2 / a0,
    };
    debug_assert!(coeffs.is_stable());
    Ok(coeffs)
}

/// An ordered list of stable sections; overall magnitude is the product of
/// the section magnitudes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterCascade {
    sections: Vec<BiquadCoeffs>,
}

impl FilterCascade {
    pub fn empty() -> Self {
        FilterCascade::default()
    }

    pub fn from_sections(sections: Vec<BiquadCoeffs>) -> Result<Self> {
        for (i, s) in sections.iter().enumerate() {
            if !s.is_stable() {
                return Err(Error::FilterDesign(format!(
                    "section {i} is unstable: a1={}, a2={}",
                    s.a1, s.a2
                )));
            }
        }
        Ok(FilterCascade { sections })
    }

    pub fn push(&mut self, section: BiquadCoeffs) -> Result<()> {
        if !section.is_stable() {
            return Err(Error::FilterDesign(format!(
                "unstable section: a1={}, a2={}",
                section.a1, section.a2
            )));
        }
        self.sections.push(section);
        Ok(())
    }

    pub fn sections(&self) -> &[BiquadCoeffs] {
        &self.sections
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// Cascade response in dB: the sum of the section responses in dB.
    pub fn magnitude_db(&self, freqs: &[f64], sample_rate: u32) -> Result<Vec<f64>> {
        let mut total = vec![0.0; freqs.len()];
        for section in &self.sections {
            for (acc, db) in total.iter_mut().zip(section.magnitude_db(freqs, sample_rate)?) {
                *acc += db;
            }
        }
        if self.sections.is_empty() {
            // still validate the frequency range
            let nyquist = sample_rate as f64 / 2.0;
            for &f in freqs {
                if !(0.0..=nyquist).contains(&f) {
                    return Err(Error::FrequencyRange { freq: f, nyquist });
                }
            }
        }
        Ok(total)
    }

    /// Run the cascade over a buffer (direct-form transposed II, zero
    /// initial state). Output length equals input length.
    pub fn apply(&self, input: &AudioBuffer) -> AudioBuffer {
        let mut samples = input.samples.clone();
        for s in &self.sections {
            let mut s1 = 0.0f64;
            let mut s2 = 0.0f64;
            for x in samples.iter_mut() {
                let x0 = *x;
                let y = s.b0 * x0 + s1;
                s1 = s.b1 * x0 - s.a1 * y + s2;
                s2 = s.b2 * x0 - s.a2 * y;
                *x = y;
            }
        }
        AudioBuffer {
            samples,
            sample_rate: input.sample_rate,
        }
    }
}
