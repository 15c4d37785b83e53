//! Audio primitives: WAV I/O, framing, FFT, energy-based speech detection
//! and SNR estimation.

mod fft;
mod vad;
mod wav;

pub use fft::fft_real;
pub(crate) use fft::{autocorrelation, power_spectrum};
pub(crate) use vad::percentile_sorted;
pub use vad::{detect_speech, detect_speech_with, estimate_snr, SegmentSet, VadConfig, SNR_CAP_DB};
pub use wav::{encode_wav, read_wav, read_wav_info, write_wav, WavInfo};

use crate::error::{Error, Module, Result};

/// Mono audio normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(Module::Dsp, "AudioBuffer::new", "samples", "audio is empty"));
        }
        if sample_rate_hz == 0 {
            return Err(Error::invalid(Module::Dsp, "AudioBuffer::new", "sample_rate_hz", "sample rate is zero"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(
                Module::Dsp,
                "AudioBuffer::new",
                format!("sample {i}"),
                "non-finite sample",
            ));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        AudioBuffer::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate_hz)
    }

    /// Sample index for a time in seconds, clamped to the buffer.
    pub fn index_at(&self, t_s: f64) -> usize {
        ((t_s * f64::from(self.sample_rate_hz)).round().max(0.0) as usize).min(self.samples.len())
    }
}

/// Overlapping analysis frames cut from a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub frame_len_s: f64,
    pub hop_s: f64,
    /// Sample offset of each frame's first sample in the source signal.
    pub offsets: Vec<usize>,
}

/// Frame length and hop in samples for the given rate, each at least 1.
pub fn frame_geometry(sample_rate_hz: u32, frame_len_s: f64, hop_s: f64) -> (usize, usize) {
    let sr = f64::from(sample_rate_hz);
    let len = ((frame_len_s * sr).round() as usize).max(1);
    let hop = ((hop_s * sr).round() as usize).max(1);
    (len, hop)
}

/// Number of complete frames: `1 + ⌊(n − len)/hop⌋` when `n ≥ len`, else 0.
pub fn num_frames(n: usize, len: usize, hop: usize) -> usize {
    if n < len {
        0
    } else {
        1 + (n - len) / hop
    }
}

/// Cuts `samples` into complete frames; trailing samples that do not fill a
/// frame are dropped.
pub fn frame_signal(samples: &[f64], sample_rate_hz: u32, frame_len_s: f64, hop_s: f64) -> FrameSequence {
    let (len, hop) = frame_geometry(sample_rate_hz, frame_len_s, hop_s);
    let count = num_frames(samples.len(), len, hop);
    let offsets: Vec<usize> = (0..count).map(|i| i * hop).collect();
    let frames = offsets.iter().map(|&o| samples[o..o + len].to_vec()).collect();
    FrameSequence {
        frames,
        frame_len_s,
        hop_s,
        offsets,
    }
}
