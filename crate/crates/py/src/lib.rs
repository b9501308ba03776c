//! Python bindings: the main types and operations of the harness, exposed
//! as plain functions over lists and dicts so analysis notebooks can drive
//! renders and metrics directly.
//!
//! Filter sections travel as `(b0, b1, b2, a1, a2)` tuples and cascades as
//! lists of sections.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use micfr_core::audio::{AudioBuffer, ImpulseResponse, SampleFormat};
use micfr_core::dsp::{BiquadCoeffs, FilterCascade, FilterKind};
use micfr_core::error::Error;
use micfr_core::fixtures::{CarModel, NoiseClass, StimulusLayout};
use micfr_core::pipeline::{Manifest, MicProfile, PeakSpec, SweepOptions};

type Section = (f64, f64, f64, f64, f64);

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Wav { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn section_of(c: BiquadCoeffs) -> Section {
    (c.b0, c.b1, c.b2, c.a1, c.a2)
}

fn cascade_of(sections: Vec<Section>) -> PyResult<FilterCascade> {
    FilterCascade::from_sections(
        sections
            .into_iter()
            .map(|(b0, b1, b2, a1, a2)| BiquadCoeffs { b0, b1, b2, a1, a2 })
            .collect(),
    )
    .map_err(to_py_err)
}

fn layout_of(
    sentence_count: usize,
    sentence_seconds: f64,
    lead_silence_s: f64,
    trail_silence_s: f64,
) -> StimulusLayout {
    StimulusLayout {
        sentence_count,
        sentence_seconds,
        lead_silence_s,
        trail_silence_s,
    }
}

/// Design one second-order section. `kind` is "lowpass", "highpass", or
/// "peak" (which requires `gain_db`).
#[pyfunction]
#[pyo3(signature = (kind, fc, q, sample_rate=48000, gain_db=None))]
fn design_biquad(
    kind: &str,
    fc: f64,
    q: f64,
    sample_rate: u32,
    gain_db: Option<f64>,
) -> PyResult<Section> {
    let kind = match (kind, gain_db) {
        ("lowpass", _) => FilterKind::LowPass2 { fc, q },
        ("highpass", _) => FilterKind::HighPass2 { fc, q },
        ("peak", Some(gain_db)) => FilterKind::Peak2 { fc, q, gain_db },
        ("peak", None) => {
            return Err(PyValueError::new_err("peak design needs gain_db"))
        }
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown filter kind {kind:?} (expected lowpass, highpass, or peak)"
            )))
        }
    };
    Ok(section_of(
        micfr_core::dsp::design_biquad(kind, sample_rate).map_err(to_py_err)?,
    ))
}

/// Cascade magnitude in dB at each frequency.
#[pyfunction]
#[pyo3(signature = (sections, freqs, sample_rate=48000))]
fn magnitude_response(
    sections: Vec<Section>,
    freqs: Vec<f64>,
    sample_rate: u32,
) -> PyResult<Vec<f64>> {
    cascade_of(sections)?
        .magnitude_db(&freqs, sample_rate)
        .map_err(to_py_err)
}

/// Run a cascade over samples (zero initial state).
#[pyfunction]
#[pyo3(signature = (sections, samples, sample_rate=48000))]
fn apply_cascade(
    sections: Vec<Section>,
    samples: Vec<f64>,
    sample_rate: u32,
) -> PyResult<Vec<f64>> {
    let buf = AudioBuffer::new(samples, sample_rate).map_err(to_py_err)?;
    Ok(cascade_of(sections)?.apply(&buf).samples)
}

/// A-weighting cascade for the given sample rate (>= 44100).
#[pyfunction]
#[pyo3(signature = (sample_rate=48000))]
fn a_weighting(sample_rate: u32) -> PyResult<Vec<Section>> {
    Ok(micfr_core::dsp::a_weighting_cascade(sample_rate)
        .map_err(to_py_err)?
        .sections()
        .iter()
        .copied()
        .map(section_of)
        .collect())
}

/// Full linear convolution (length `len(x) + len(h) - 1`).
#[pyfunction]
fn convolve(x: Vec<f64>, h: Vec<f64>) -> PyResult<Vec<f64>> {
    let x = AudioBuffer::new(x, 48000).map_err(to_py_err)?;
    let h = ImpulseResponse::new(AudioBuffer::new(h, 48000).map_err(to_py_err)?, "py")
        .map_err(to_py_err)?;
    Ok(micfr_core::dsp::convolve(&x, &h).map_err(to_py_err)?.samples)
}

fn profile_dict<'py>(py: Python<'py>, p: &MicProfile) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", &p.id)?;
    d.set_item("hp_fc", p.hp_fc)?;
    d.set_item("lp_fc", p.lp_fc)?;
    d.set_item("peak_fc", p.peak_fc_code())?;
    d.set_item("peak_q", p.peak_q_code())?;
    Ok(d)
}

/// The microphone FR grid as a list of dicts.
#[pyfunction]
#[pyo3(signature = (include_no_peak=false))]
fn full_grid(py: Python<'_>, include_no_peak: bool) -> PyResult<Vec<Bound<'_, PyDict>>> {
    micfr_core::pipeline::full_grid(include_no_peak)
        .iter()
        .map(|p| profile_dict(py, p))
        .collect()
}

/// Ids of the shipped default 113-profile selection.
#[pyfunction]
fn default_selection() -> Vec<String> {
    micfr_core::pipeline::default_selection()
        .into_iter()
        .map(|p| p.id)
        .collect()
}

/// Microphone emulation cascade (high-pass, low-pass, optional peak).
#[pyfunction]
#[pyo3(signature = (hp_fc, lp_fc, peak_fc=None, peak_q=None, peak_gain_db=20.0, sample_rate=48000))]
fn mic_cascade(
    hp_fc: f64,
    lp_fc: f64,
    peak_fc: Option<f64>,
    peak_q: Option<f64>,
    peak_gain_db: f64,
    sample_rate: u32,
) -> PyResult<Vec<Section>> {
    let peak = match (peak_fc, peak_q) {
        (Some(fc), Some(q)) => Some(PeakSpec { fc, q }),
        (None, None) => None,
        _ => {
            return Err(PyValueError::new_err(
                "peak_fc and peak_q must be given together",
            ))
        }
    };
    let profile = MicProfile::new(hp_fc, lp_fc, peak).map_err(to_py_err)?;
    Ok(profile
        .cascade(peak_gain_db, sample_rate)
        .map_err(to_py_err)?
        .sections()
        .iter()
        .copied()
        .map(section_of)
        .collect())
}

/// Synthetic sentence stimulus (see the fixture generator docs).
#[pyfunction]
#[pyo3(signature = (seed, sentence_count=20, sentence_seconds=4.0, lead_silence_s=1.0,
                    trail_silence_s=1.0, sample_rate=48000))]
fn synth_stimulus(
    seed: u64,
    sentence_count: usize,
    sentence_seconds: f64,
    lead_silence_s: f64,
    trail_silence_s: f64,
    sample_rate: u32,
) -> PyResult<Vec<f64>> {
    let layout = layout_of(
        sentence_count,
        sentence_seconds,
        lead_silence_s,
        trail_silence_s,
    );
    Ok(micfr_core::fixtures::synth_stimulus(&layout, sample_rate, seed)
        .map_err(to_py_err)?
        .samples)
}

/// Road-like noise. `noise_class` is "idle", "city", or "highway";
/// `level_dbfs` overrides the class default RMS.
#[pyfunction]
#[pyo3(signature = (noise_class, duration_s, seed, level_dbfs=None, sample_rate=48000))]
fn synth_noise(
    noise_class: &str,
    duration_s: f64,
    seed: u64,
    level_dbfs: Option<f64>,
    sample_rate: u32,
) -> PyResult<Vec<f64>> {
    let class = match noise_class {
        "idle" => NoiseClass::Idle,
        "city" => NoiseClass::City,
        "highway" => NoiseClass::Highway,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown noise class {noise_class:?}"
            )))
        }
    };
    let level = level_dbfs.unwrap_or(class.default_level_dbfs());
    Ok(
        micfr_core::fixtures::synth_noise_leveled(level, duration_s, sample_rate, seed)
            .map_err(to_py_err)?
            .samples,
    )
}

/// Synthetic car impulse response (unit direct path plus decaying tail).
#[pyfunction]
#[pyo3(signature = (rt60_s, direct_to_reverb_db, length_s, seed, sample_rate=48000))]
fn synth_impulse_response(
    rt60_s: f64,
    direct_to_reverb_db: f64,
    length_s: f64,
    seed: u64,
    sample_rate: u32,
) -> PyResult<Vec<f64>> {
    let car = CarModel {
        id: "py".into(),
        rt60_s,
        direct_to_reverb_db,
    };
    Ok(
        micfr_core::fixtures::synth_impulse_response(&car, length_s, sample_rate, seed)
            .map_err(to_py_err)?
            .buffer
            .samples,
    )
}

/// Per-sentence A-weighted SNR of a rendered buffer.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate=48000, sentence_count=20, sentence_seconds=4.0,
                    lead_silence_s=1.0, trail_silence_s=1.0))]
fn sentence_snrs(
    samples: Vec<f64>,
    sample_rate: u32,
    sentence_count: usize,
    sentence_seconds: f64,
    lead_silence_s: f64,
    trail_silence_s: f64,
) -> PyResult<Vec<f64>> {
    let buf = AudioBuffer::new(samples, sample_rate).map_err(to_py_err)?;
    let layout = layout_of(
        sentence_count,
        sentence_seconds,
        lead_silence_s,
        trail_silence_s,
    );
    let spans = micfr_core::metrics::segment(&buf, &layout).map_err(to_py_err)?;
    let aw = micfr_core::dsp::a_weighting_cascade(sample_rate).map_err(to_py_err)?;
    spans
        .iter()
        .map(|s| micfr_core::metrics::snr_a_weighted(&buf, s, &aw).map_err(to_py_err))
        .collect()
}

/// Normalization used before WER: lowercase, strip punctuation except
/// intra-word apostrophes, collapse whitespace.
#[pyfunction]
fn normalize_text(s: &str) -> Vec<String> {
    micfr_core::metrics::wer::normalize_text(s)
}

/// Word error rate of a hypothesis against a reference (both plain
/// strings; normalized internally).
#[pyfunction]
fn wer<'py>(py: Python<'py>, reference: &str, hypothesis: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = micfr_core::metrics::wer::normalize_text(reference);
    let h = micfr_core::metrics::wer::normalize_text(hypothesis);
    let counts = micfr_core::metrics::wer::wer(&r, &h).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("substitutions", counts.substitutions)?;
    d.set_item("deletions", counts.deletions)?;
    d.set_item("insertions", counts.insertions)?;
    d.set_item("ref_len", counts.ref_len)?;
    d.set_item("rate", counts.rate())?;
    Ok(d)
}

/// One-way ANOVA over groups of values.
#[pyfunction]
fn anova_oneway<'py>(py: Python<'py>, groups: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let r = micfr_core::stats::anova_oneway(&groups).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("f", r.f_stat)?;
    d.set_item("p", r.p_value)?;
    d.set_item("df_between", r.df_between)?;
    d.set_item("df_within", r.df_within)?;
    d.set_item(
        "group_means",
        r.groups.iter().map(|g| g.mean).collect::<Vec<_>>(),
    )?;
    d.set_item("group_ns", r.groups.iter().map(|g| g.n).collect::<Vec<_>>())?;
    Ok(d)
}

/// F-distribution CDF.
#[pyfunction]
fn f_cdf(x: f64, d1: u64, d2: u64) -> PyResult<f64> {
    micfr_core::stats::f_cdf(x, d1, d2).map_err(to_py_err)
}

/// Median, quartiles, Tukey whiskers, and outliers.
#[pyfunction]
fn box_summary<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let s = micfr_core::stats::box_summary(&values).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("median", s.median)?;
    d.set_item("q1", s.q1)?;
    d.set_item("q3", s.q3)?;
    d.set_item("whisker_lo", s.whisker_lo)?;
    d.set_item("whisker_hi", s.whisker_hi)?;
    d.set_item("outliers", s.outliers)?;
    Ok(d)
}

/// Read a WAV file; returns (samples, sample_rate).
#[pyfunction]
fn read_wav(path: &str) -> PyResult<(Vec<f64>, u32)> {
    let buf = micfr_core::audio::read_wav(path).map_err(to_py_err)?;
    Ok((buf.samples, buf.sample_rate))
}

/// Write a mono WAV file; `format` is "float32" or "pcm16".
#[pyfunction]
#[pyo3(signature = (path, samples, sample_rate=48000, format="float32"))]
fn write_wav(path: &str, samples: Vec<f64>, sample_rate: u32, format: &str) -> PyResult<()> {
    let fmt = match format {
        "float32" => SampleFormat::Float32,
        "pcm16" => SampleFormat::Pcm16,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown format {format:?} (expected float32 or pcm16)"
            )))
        }
    };
    let buf = AudioBuffer::new(samples, sample_rate).map_err(to_py_err)?;
    micfr_core::audio::write_wav(path, &buf, fmt).map_err(to_py_err)
}

/// Run the full condition sweep described by a manifest; returns the
/// dataset CSV path.
#[pyfunction]
#[pyo3(signature = (manifest_path, out_dir, workers=0, write_renders=false))]
fn run_sweep(
    manifest_path: &str,
    out_dir: &str,
    workers: usize,
    write_renders: bool,
) -> PyResult<String> {
    let manifest = Manifest::load(manifest_path).map_err(to_py_err)?;
    let inputs = manifest.load_inputs().map_err(to_py_err)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PyIOError::new_err(format!("{out_dir}: {e}")))?;
    let opts = SweepOptions {
        workers,
        write_renders,
        out_dir: out_dir.into(),
    };
    let dataset = micfr_core::pipeline::run_sweep(&inputs, &opts).map_err(to_py_err)?;
    let path = std::path::Path::new(out_dir).join("dataset.csv");
    dataset.write_csv(&path).map_err(to_py_err)?;
    Ok(path.display().to_string())
}

#[pymodule]
fn micfr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(design_biquad, m)?)?;
    m.add_function(wrap_pyfunction!(magnitude_response, m)?)?;
    m.add_function(wrap_pyfunction!(apply_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(a_weighting, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(full_grid, m)?)?;
    m.add_function(wrap_pyfunction!(default_selection, m)?)?;
    m.add_function(wrap_pyfunction!(mic_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(synth_stimulus, m)?)?;
    m.add_function(wrap_pyfunction!(synth_noise, m)?)?;
    m.add_function(wrap_pyfunction!(synth_impulse_response, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_snrs, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_text, m)?)?;
    m.add_function(wrap_pyfunction!(wer, m)?)?;
    m.add_function(wrap_pyfunction!(anova_oneway, m)?)?;
    m.add_function(wrap_pyfunction!(f_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(box_summary, m)?)?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
