//! Fast linear convolution via frequency-domain overlap-add.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::{AudioBuffer, ImpulseResponse};
use crate::error::{Error, Result};

/// Full linear convolution of a signal with an impulse response.
///
/// Output length is `|x| + |h| - 1`. Computed by overlap-add with a
/// power-of-two block size; numerically equivalent to direct time-domain
/// convolution.
pub fn convolve(x: &AudioBuffer, h: &ImpulseResponse) -> Result<AudioBuffer> {
    if x.is_empty() || h.buffer.is_empty() {
        return Err(Error::Invalid("convolution inputs must be nonempty".into()));
    }
    if x.sample_rate != h.buffer.sample_rate {
        return Err(Error::RateMismatch {
            left: x.sample_rate,
            right: h.buffer.sample_rate,
        });
    }
    Ok(AudioBuffer {
        samples: fft_convolve(&x.samples, &h.buffer.samples),
        sample_rate: x.sample_rate,
    })
}

pub(crate) fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    // partition the longer input; the shorter one becomes the fixed kernel
    let (long, short) = if x.len() >= h.len() { (x, h) } else { (h, x) };
    let out_len = long.len() + short.len() - 1;

    let fft_len = (2 * short.len()).max(64).next_power_of_two();
    let block = fft_len - short.len() + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(fft_len);
    let ifft = planner.plan_fft_inverse(fft_len);

    let mut kernel: Vec<Complex<f64>> = short
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(fft_len)
        .collect();
    fft.process(&mut kernel);

    let mut out = vec![0.0f64; out_len];
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    let scale = 1.0 / fft_len as f64;

    for (bi, chunk) in long.chunks(block).enumerate() {
        for (dst, &v) in buf.iter_mut().zip(chunk) {
            *dst = Complex::new(v, 0.0);
        }
        for dst in buf.iter_mut().skip(chunk.len()) {
            *dst = Complex::new(0.0, 0.0);
        }
        fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&kernel) {
            *b *= k;
        }
        ifft.process(&mut buf);

        let offset = bi * block;
        let take = (out_len - offset).min(fft_len);
        for (dst, src) in out[offset..offset + take].iter_mut().zip(&buf) {
            *dst += src.re * scale;
        }
    }
    out
}
