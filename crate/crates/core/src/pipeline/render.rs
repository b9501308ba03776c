//! The render chain and the condition sweep.
//!
//! One condition renders as: speech convolved with the car impulse
//! response (trimmed back to stimulus length), plus the noise tiled to the
//! same length, all passed through the microphone cascade. No level
//! normalization anywhere; fixture targets set the levels.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::audio::{write_wav, AudioBuffer, SampleFormat};
use crate::dataset::{Dataset, SentenceRecord};
use crate::dsp::{a_weighting_cascade, convolve};
use crate::error::{Error, Result};
use crate::metrics::{segment, snr_a_weighted};
use crate::pipeline::{Condition, LoadedInputs};

/// Shortest noise buffer worth tiling.
const MIN_NOISE_SECONDS: f64 = 1.0;

/// Repeat (wrapping from sample 0, no crossfade) or trim the noise to
/// `len` samples.
pub fn tile_noise(noise: &AudioBuffer, len: usize) -> Result<Vec<f64>> {
    let min_len = (MIN_NOISE_SECONDS * noise.sample_rate as f64).round() as usize;
    if noise.len() < min_len {
        return Err(Error::Invalid(format!(
            "noise of {} samples is shorter than {MIN_NOISE_SECONDS} s; refusing to tile",
            noise.len()
        )));
    }
    Ok((0..len).map(|i| noise.samples[i % noise.len()]).collect())
}

fn sum_into(wet: &[f64], noise: &[f64]) -> Vec<f64> {
    wet.iter().zip(noise).map(|(a, b)| a + b).collect()
}

/// Render one condition end to end (fresh convolution; the sweep caches
/// the per-car wet signal and is bit-identical to this path).
pub fn render_condition(cond: &Condition, inputs: &LoadedInputs) -> Result<AudioBuffer> {
    let ir = inputs.ir(&cond.car_id)?;
    let noise = inputs.noise(&cond.noise_id)?;
    let wet = convolve(&inputs.stimulus, ir)?;
    let len = inputs.stimulus.len();
    let tiled = tile_noise(noise, len)?;
    let cascade = cond.mic.cascade(inputs.peak_gain_db, inputs.sample_rate)?;
    Ok(cascade.apply(&AudioBuffer {
        samples: sum_into(&wet.samples[..len], &tiled),
        sample_rate: inputs.sample_rate,
    }))
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub workers: usize,
    /// Write each rendered condition as `renders/<condition_id>.wav`
    /// (float32) under `out_dir`.
    pub write_renders: bool,
    pub out_dir: PathBuf,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            workers: 0, // rayon default
            write_renders: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// All conditions of a sweep in canonical order: profile-major, then car,
/// then noise (manifest order).
pub fn enumerate_conditions(inputs: &LoadedInputs) -> Vec<Condition> {
    let mut out =
        Vec::with_capacity(inputs.profiles.len() * inputs.irs.len() * inputs.noises.len());
    for mic in &inputs.profiles {
        for ir in &inputs.irs {
            for (noise_id, _) in &inputs.noises {
                out.push(Condition {
                    mic: mic.clone(),
                    car_id: ir.source.clone(),
                    noise_id: noise_id.clone(),
                });
            }
        }
    }
    out
}

/// Render every condition and measure the built-in per-sentence metric
/// (A-weighted SNR, 20 rows per condition). Row order is canonical and
/// independent of the worker count.
pub fn run_sweep(inputs: &LoadedInputs, opts: &SweepOptions) -> Result<Dataset> {
    let len = inputs.stimulus.len();

    // per-car wet speech, shared across all profiles and noises
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

    let a_weighting = a_weighting_cascade(inputs.sample_rate)?;
    let conditions = enumerate_conditions(inputs);

    let renders_dir = opts.out_dir.join("renders");
    if opts.write_renders {
        fs::create_dir_all(&renders_dir).map_err(|e| Error::io(&renders_dir, e))?;
    }

    let measure = |cond: &Condition| -> Result<Vec<SentenceRecord>> {
        let wet = &wet_by_car
            .iter()
            .find(|(id, _)| id == &cond.car_id)
            .expect("enumerated from inputs")
            .1;
        let tiled = &tiled_by_noise
            .iter()
            .find(|(id, _)| id == &cond.noise_id)
            .expect("enumerated from inputs")
            .1;
        let cascade = cond.mic.cascade(inputs.peak_gain_db, inputs.sample_rate)?;
        let rendered = cascade.apply(&AudioBuffer {
            samples: sum_into(wet, tiled),
            sample_rate: inputs.sample_rate,
        });
        if opts.write_renders {
            write_wav(
                renders_dir.join(format!("{}.wav", cond.id())),
                &rendered,
                SampleFormat::Float32,
            )?;
        }
        let spans = segment(&rendered, &inputs.layout)?;
        let condition_id = cond.id();
        spans
            .iter()
            .enumerate()
            .map(|(k, span)| {
                Ok(SentenceRecord {
                    condition_id: condition_id.clone(),
                    car: cond.car_id.clone(),
                    noise: cond.noise_id.clone(),
                    hp_fc: cond.mic.hp_fc,
                    lp_fc: cond.mic.lp_fc,
                    peak_fc: cond.mic.peak_fc_code(),
                    peak_q: cond.mic.peak_q_code(),
                    sentence_idx: k as i64,
                    metric: "snr_a".into(),
                    value: snr_a_weighted(&rendered, span, &a_weighting)?,
                })
            })
            .collect()
    };

    let run = || -> Result<Vec<Vec<SentenceRecord>>> {
        conditions
            .par_iter()
            .map(|cond| {
                measure(cond).map_err(|e| {
                    Error::Invalid(format!("condition {} failed: {e}", cond.id()))
                })
            })
            .collect()
    };

    let per_condition = if opts.workers == 0 {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        pool.install(run)?
    };

    Ok(Dataset::new(per_condition.into_iter().flatten().collect()))
}
