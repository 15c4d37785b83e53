//! Minimal RIFF/WAVE reader and writer for 16-bit PCM mono audio.
//!
//! Only the `fmt ` and `data` chunks are interpreted; every other chunk is
//! skipped. `WAVE_FORMAT_EXTENSIBLE` is accepted when its sub-format GUID is
//! plain PCM.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::AudioBuffer;
use crate::error::{Error, Module, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;
const MIN_SAMPLE_RATE: u32 = 8000;

/// Header facts needed without decoding samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub sample_rate_hz: u32,
    pub num_samples: usize,
}

impl WavInfo {
    pub fn duration_s(&self) -> f64 {
        self.num_samples as f64 / f64::from(self.sample_rate_hz)
    }
}

fn defect(path: &Path, message: impl Into<String>) -> Error {
    Error::invalid(Module::Dsp, "read_wav", path.display().to_string(), message)
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Locates the PCM payload in a WAVE byte image, checking format constraints.
fn parse(path: &Path, bytes: &[u8]) -> Result<(WavInfo, std::ops::Range<usize>)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(defect(path, "not a RIFF/WAVE file"));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + size > bytes.len() {
                    return Err(defect(path, "truncated fmt chunk"));
                }
                let mut tag = u16_at(bytes, body);
                if tag == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(defect(path, "truncated WAVE_FORMAT_EXTENSIBLE header"));
                    }
                    tag = u16_at(bytes, body + 24);
                }
                fmt = Some((
                    tag,
                    u16_at(bytes, body + 2),
                    u32_at(bytes, body + 4),
                    u16_at(bytes, body + 14),
                ));
            }
            b"data" => {
                let (tag, channels, rate, bits) =
                    fmt.ok_or_else(|| defect(path, "data chunk before fmt chunk"))?;
                if tag != FORMAT_PCM {
                    return Err(defect(path, format!("non-PCM format tag {tag}")));
                }
                if channels != 1 {
                    return Err(defect(path, format!("{channels} channels, expected mono")));
                }
                if bits != 16 {
                    return Err(defect(path, format!("{bits}-bit samples, expected 16-bit")));
                }
                if rate < MIN_SAMPLE_RATE {
                    return Err(defect(path, format!("sample rate {rate} Hz below {MIN_SAMPLE_RATE} Hz")));
                }
                if body + size > bytes.len() {
                    return Err(defect(
                        path,
                        format!("truncated data chunk: header says {size} bytes, {} present", bytes.len() - body),
                    ));
                }
                if size % 2 != 0 {
                    return Err(defect(path, "odd data chunk length for 16-bit samples"));
                }
                if size == 0 {
                    return Err(defect(path, "empty data chunk"));
                }
                let info = WavInfo {
                    sample_rate_hz: rate,
                    num_samples: size / 2,
                };
                return Ok((info, body..body + size));
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body + size + (size & 1);
    }
    Err(defect(path, if fmt.is_some() { "missing data chunk" } else { "missing fmt chunk" }))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(Module::Dsp, "read_wav", path, e))
}

/// Reads only the header of a WAV file.
pub fn read_wav_info(path: impl AsRef<Path>) -> Result<WavInfo> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    parse(path, &bytes).map(|(info, _)| info)
}

/// Decodes a 16-bit PCM mono WAV file, scaling samples by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let (info, range) = parse(path, &bytes)?;
    let samples = bytes[range]
        .chunks_exact(2)
        .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
        .collect();
    AudioBuffer::new(samples, info.sample_rate_hz)
}

/// Quantizes to 16-bit PCM; values outside [-1, 1) are clipped.
pub fn encode_wav(samples: &[f64], sample_rate_hz: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(samples, sample_rate_hz);
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(Module::Dsp, "write_wav", path, e))
}
