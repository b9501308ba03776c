//! WAV file I/O and the in-memory audio representation.
//!
//! Everything downstream works on mono `f64` buffers. Readers accept 16-bit
//! PCM and 32-bit IEEE float RIFF/WAVE files; writers emit either format.
//! The canonical sample rate for the render pipeline is 48 kHz (a 20 kHz
//! low-pass corner needs the headroom); `read_wav` itself preserves whatever
//! rate the header declares and rate policy is enforced by the manifest
//! loader.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Mono audio: dimensionless amplitudes at nominal full scale ±1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Invalid("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// An acoustic path measurement (mouth position to mic position), labelled
/// by the car it came from.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    pub buffer: AudioBuffer,
    pub source: String,
}

impl ImpulseResponse {
    pub fn new(buffer: AudioBuffer, source: impl Into<String>) -> Result<Self> {
        if buffer.is_empty() {
            return Err(Error::Invalid("impulse response must be nonempty".into()));
        }
        Ok(ImpulseResponse {
            buffer,
            source: source.into(),
        })
    }
}

/// On-disk sample encodings supported by `write_wav`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

/// Byte cursor that errors (instead of panicking) on truncated input.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        if end > self.bytes.len() {
            return None;
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Some(s)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

/// Read a RIFF/WAVE file into a mono buffer.
///
/// 16-bit PCM samples are scaled to [-1, 1) by dividing by 32768; 32-bit
/// float samples pass through. Multichannel files keep channel 0 only (the
/// render chain models a single measurement mic) and log a warning.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes).map_err(|reason| Error::wav(path, reason))
}

fn parse_wav(bytes: &[u8]) -> std::result::Result<AudioBuffer, String> {
    let mut cur = Cursor::new(bytes);
    let riff = cur.take(4).ok_or("file shorter than RIFF header")?;
    if riff != b"RIFF" {
        return Err("missing RIFF magic".into());
    }
    let _riff_size = cur.u32().ok_or("truncated RIFF size")?;
    let wave = cur.take(4).ok_or("truncated RIFF form type")?;
    if wave != b"WAVE" {
        return Err("RIFF form type is not WAVE".into());
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;

    while cur.remaining() > 0 {
        let id = cur.take(4).ok_or("truncated chunk id")?;
        let size = cur.u32().ok_or("truncated chunk size")? as usize;
        let payload = cur
            .take(size)
            .ok_or_else(|| format!("chunk {:?} truncated", String::from_utf8_lossy(id)))?;
        // chunks are word-aligned; a pad byte follows odd sizes
        if size % 2 == 1 && cur.remaining() > 0 {
            cur.take(1);
        }
        match id {
            b"fmt " => {
                let mut f = Cursor::new(payload);
                let format = f.u16().ok_or("fmt chunk too short")?;
                let channels = f.u16().ok_or("fmt chunk too short")?;
                let sample_rate = f.u32().ok_or("fmt chunk too short")?;
                let _byte_rate = f.u32().ok_or("fmt chunk too short")?;
                let _block_align = f.u16().ok_or("fmt chunk too short")?;
                let bits_per_sample = f.u16().ok_or("fmt chunk too short")?;
                fmt = Some(FmtChunk {
                    format,
                    channels,
                    sample_rate,
                    bits_per_sample,
                });
            }
            b"data" => {
                data = Some(payload);
                break;
            }
            _ => {} // skip fact, LIST, cue, ...
        }
    }

    let fmt = fmt.ok_or("no fmt chunk before data")?;
    let data = data.ok_or("no data chunk")?;
    if fmt.channels == 0 {
        return Err("zero channels".into());
    }
    if fmt.sample_rate == 0 {
        return Err("zero sample rate".into());
    }
    if data.is_empty() {
        return Err("zero-length data chunk".into());
    }

    let bytes_per_sample = match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (f, b) => {
            return Err(format!(
                "unsupported codec: format tag {f}, {b} bits per sample \
                 (supported: PCM 16-bit, IEEE float 32-bit)"
            ))
        }
    };

    let channels = fmt.channels as usize;
    let frame_bytes = bytes_per_sample * channels;
    if data.len() % frame_bytes != 0 {
        return Err(format!(
            "data chunk length {} is not a whole number of {}-byte frames",
            data.len(),
            frame_bytes
        ));
    }
    if channels > 1 {
        log::warn!(
            "multichannel wav ({} channels): keeping channel 0 only",
            channels
        );
    }

    let frames = data.len() / frame_bytes;
    let mut samples = Vec::with_capacity(frames);
    for i in 0..frames {
        let off = i * frame_bytes; // channel 0 of each frame
        let s = match bytes_per_sample {
            2 => i16::from_le_bytes([data[off], data[off + 1]]) as f64 / 32768.0,
            _ => f32::from_le_bytes([
                data[off],
                data[off + 1],
                data[off + 2],
                data[off + 3],
            ]) as f64,
        };
        if !s.is_finite() {
            return Err(format!("non-finite sample at frame {i}"));
        }
        samples.push(s);
    }

    Ok(AudioBuffer {
        samples,
        sample_rate: fmt.sample_rate,
    })
}

/// Write a mono buffer as RIFF/WAVE.
///
/// `Pcm16` rounds to nearest and saturates at full scale; samples beyond
/// ±1.0 log a warning but are not an error. `Float32` stores `f32`
/// narrowings of the samples.
pub fn write_wav(
    path: impl AsRef<Path>,
    buffer: &AudioBuffer,
    format: SampleFormat,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(i) = buffer.samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::Invalid(format!(
            "refusing to write non-finite sample at index {i}"
        )));
    }
    let bytes = encode_wav(buffer, format);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_wav(buffer: &AudioBuffer, format: SampleFormat) -> Vec<u8> {
    let n = buffer.samples.len();
    let (fmt_tag, bits, fmt_body_len): (u16, u16, usize) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 16, 16),
        // non-PCM gets the cbSize field and a fact chunk
        SampleFormat::Float32 => (FORMAT_IEEE_FLOAT, 32, 18),
    };
    let bytes_per_sample = (bits / 8) as usize;
    let data_len = n * bytes_per_sample;
    let fact_len = if format == SampleFormat::Float32 { 12 } else { 0 };
    let riff_len = 4 + (8 + fmt_body_len) + fact_len + (8 + data_len) + data_len % 2;

    let mut out = Vec::with_capacity(8 + riff_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(riff_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");

    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&(fmt_body_len as u32).to_le_bytes());
    out.extend_from_slice(&fmt_tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    let byte_rate = buffer.sample_rate * bytes_per_sample as u32;
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    if fmt_body_len == 18 {
        out.extend_from_slice(&0u16.to_le_bytes()); // cbSize
    }

    if format == SampleFormat::Float32 {
        out.extend_from_slice(b"fact");
        out.extend_from_slice(&4u32.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }

    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    match format {
        SampleFormat::Pcm16 => {
            let mut clipped = 0usize;
            for &s in &buffer.samples {
                if s.abs() > 1.0 {
                    clipped += 1;
                }
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            if clipped > 0 {
                log::warn!("pcm16 write saturated {clipped} samples beyond full scale");
            }
        }
        SampleFormat::Float32 => {
            for &s in &buffer.samples {
                out.extend_from_slice(&(s as f32).to_le_bytes());
            }
        }
    }
    if data_len % 2 == 1 {
        out.push(0);
    }
    out
}
