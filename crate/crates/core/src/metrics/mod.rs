//! Per-sentence segmentation and the A-weighted SNR estimator.

pub mod ingest;
pub mod wer;

use crate::audio::AudioBuffer;
use crate::dsp::FilterCascade;
use crate::error::{Error, Result};
use crate::fixtures::StimulusLayout;

/// Sample spans of one sentence window inside a rendered buffer, split into
/// lead silence, active region, and trail silence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub active_start: usize,
    pub active_end: usize,
    pub end: usize,
}

impl SentenceSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }
}

/// Fixed-time slicing of a rendered buffer into sentence windows.
///
/// The stimulus timing is known by construction, so no voice-activity
/// detection is involved; boundaries land on exact sample indices and the
/// windows partition the buffer.
pub fn segment(buffer: &AudioBuffer, layout: &StimulusLayout) -> Result<Vec<SentenceSpan>> {
    layout.validate()?;
    let fs = buffer.sample_rate;
    let sentence_n = layout.sentence_samples(fs);
    let expected = layout.total_samples(fs);
    if buffer.len() != expected {
        return Err(Error::Invalid(format!(
            "buffer length {} does not match layout ({} sentences x {} samples = {expected})",
            buffer.len(),
            layout.sentence_count,
            sentence_n
        )));
    }
    let lead = layout.lead_samples(fs);
    let trail = layout.trail_samples(fs);
    Ok((0..layout.sentence_count)
        .map(|k| {
            let start = k * sentence_n;
            SentenceSpan {
                start,
                active_start: start + lead,
                active_end: start + sentence_n - trail,
                end: start + sentence_n,
            }
        })
        .collect())
}

fn mean_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64
}

/// Guard for the power subtraction in the SNR estimator.
pub const SNR_POWER_EPS: f64 = 1e-20;

/// A-weighted per-sentence SNR in dB.
///
/// The whole sentence window is A-weighted (zero filter state; the leading
/// silence absorbs the transient), noise power is estimated from the lead
/// and trail silences, and the active-region power has the noise estimate
/// subtracted before the ratio: noise persists under speech in the render.
/// Returns `+inf` when the silence regions are exactly zero.
pub fn snr_a_weighted(
    buffer: &AudioBuffer,
    span: &SentenceSpan,
    a_weighting: &FilterCascade,
) -> Result<f64> {
    if span.end > buffer.len()
        || span.active_start <= span.start
        || span.active_end <= span.active_start
        || span.end <= span.active_end
    {
        return Err(Error::Invalid(
            "sentence span needs nonempty lead, active, and trail regions".into(),
        ));
    }
    let slice = AudioBuffer {
        samples: buffer.samples[span.start..span.end].to_vec(),
        sample_rate: buffer.sample_rate,
    };
    let weighted = a_weighting.apply(&slice);

    let lead_n = span.active_start - span.start;
    let active_n = span.active_end - span.active_start;
    let w = &weighted.samples;
    let lead = &w[..lead_n];
    let active = &w[lead_n..lead_n + active_n];
    let trail = &w[lead_n + active_n..];

    let p_noise = (lead.iter().map(|v| v * v).sum::<f64>()
        + trail.iter().map(|v| v * v).sum::<f64>())
        / (lead.len() + trail.len()) as f64;
    let p_active = mean_power(active);

    if p_noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * ((p_active - p_noise).max(SNR_POWER_EPS) / p_noise).log10())
}

/// A-weighted mean power of the active region, in dB.
///
/// This is the speech term of the SNR estimator; with the noise path held
/// fixed, differences of this quantity equal differences of SNR in the
/// noise-free limit.
pub fn active_power_a_weighted_db(
    buffer: &AudioBuffer,
    span: &SentenceSpan,
    a_weighting: &FilterCascade,
) -> Result<f64> {
    if span.end > buffer.len() || span.active_end <= span.active_start {
        return Err(Error::Invalid("empty active region".into()));
    }
    let slice = AudioBuffer {
        samples: buffer.samples[span.start..span.end].to_vec(),
        sample_rate: buffer.sample_rate,
    };
    let weighted = a_weighting.apply(&slice);
    let lead_n = span.active_start - span.start;
    let active_n = span.active_end - span.active_start;
    Ok(10.0 * mean_power(&weighted.samples[lead_n..lead_n + active_n]).log10())
}
