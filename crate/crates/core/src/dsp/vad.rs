//! Energy-threshold voice activity detection.
//!
//! Frames whose energy exceeds the recording's noise floor (a low percentile
//! of frame energies) by a fixed margin are speech. Runs of speech frames
//! become segments whose edges are then refined to 1 ms blocks, short gaps
//! are bridged and very short segments dropped.

use serde::{Deserialize, Serialize};

use super::{frame_geometry, num_frames, AudioBuffer};

/// Magnitude of the SNR clamp used when either power is zero.
pub const SNR_CAP_DB: f64 = 120.0;

/// Energy assigned to digitally silent frames.
const SILENCE_DB: f64 = -120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VadConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    /// Margin above the noise floor, in dB.
    pub threshold_db: f64,
    /// Percentile (0–100) of frame energies taken as the noise floor.
    pub floor_percentile: f64,
    pub bridge_gap_s: f64,
    pub min_segment_s: f64,
    /// Absolute level (dBFS) separating speech from silence when the
    /// recording's energy spread is below `threshold_db`.
    pub flat_signal_floor_db: f64,
    pub refine_block_s: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            frame_len_s: 0.025,
            hop_s: 0.010,
            threshold_db: 10.0,
            floor_percentile: 10.0,
            bridge_gap_s: 0.2,
            min_segment_s: 0.1,
            flat_signal_floor_db: -60.0,
            refine_block_s: 0.001,
        }
    }
}

/// Sorted, disjoint speech intervals in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub speech: Vec<(f64, f64)>,
}

impl SegmentSet {
    pub fn is_empty(&self) -> bool {
        self.speech.is_empty()
    }

    pub fn total_speech_s(&self) -> f64 {
        self.speech.iter().map(|(a, b)| b - a).sum()
    }

    /// A single segment covering the whole recording.
    pub fn whole(audio: &AudioBuffer) -> Self {
        SegmentSet {
            speech: vec![(0.0, audio.duration_s())],
        }
    }

    /// Sample ranges of each segment.
    pub fn sample_ranges(&self, audio: &AudioBuffer) -> Vec<std::ops::Range<usize>> {
        self.speech
            .iter()
            .map(|&(a, b)| audio.index_at(a)..audio.index_at(b))
            .filter(|r| !r.is_empty())
            .collect()
    }
}

fn energy_db(x: &[f64]) -> f64 {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    if ms > 0.0 {
        (10.0 * ms.log10()).max(SILENCE_DB)
    } else {
        SILENCE_DB
    }
}

/// Linear-interpolated percentile of unsorted data (p in [0, 100]).
pub(crate) fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Speech detection with default settings (25 ms frames, 10 ms hop).
pub fn detect_speech(audio: &AudioBuffer) -> SegmentSet {
    detect_speech_with(audio, &VadConfig::default())
}

pub fn detect_speech_with(audio: &AudioBuffer, cfg: &VadConfig) -> SegmentSet {
    let x = audio.samples();
    let sr = audio.sample_rate_hz();
    let (len, hop) = frame_geometry(sr, cfg.frame_len_s, cfg.hop_s);
    let count = num_frames(x.len(), len, hop);
    if count == 0 {
        return SegmentSet::default();
    }
    let energies: Vec<f64> = (0..count).map(|i| energy_db(&x[i * hop..i * hop + len])).collect();
    let floor = percentile(&energies, cfg.floor_percentile);
    let peak = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = if peak - floor < cfg.threshold_db {
        cfg.flat_signal_floor_db
    } else {
        floor + cfg.threshold_db
    };

    let block = ((cfg.refine_block_s * f64::from(sr)).round() as usize).max(1);
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < count {
        if energies[i] <= threshold {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < count && energies[i + 1] > threshold {
            i += 1;
        }
        let last = i;
        i += 1;

        let head = first * hop;
        let start = (head..head + len)
            .step_by(block)
            .find(|&b| energy_db(&x[b..(b + block).min(head + len)]) > threshold)
            .unwrap_or(head);
        let tail = last * hop;
        let end = (tail..tail + len)
            .step_by(block)
            .rev()
            .find(|&b| energy_db(&x[b..(b + block).min(tail + len)]) > threshold)
            .map(|b| (b + block).min(tail + len))
            .unwrap_or(tail + len);
        if end > start {
            runs.push((start, end));
        }
    }

    let bridge = (cfg.bridge_gap_s * f64::from(sr)).round() as usize;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in runs {
        match merged.last_mut() {
            Some(prev) if s <= prev.1 || s - prev.1 < bridge => prev.1 = prev.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    let min_len = (cfg.min_segment_s * f64::from(sr)).round() as usize;
    let rate = f64::from(sr);
    SegmentSet {
        speech: merged
            .into_iter()
            .filter(|(s, e)| e - s >= min_len)
            .map(|(s, e)| (s as f64 / rate, e.min(x.len()) as f64 / rate))
            .collect(),
    }
}

/// Speech-over-non-speech power ratio in dB, clamped to ±[`SNR_CAP_DB`].
pub fn estimate_snr(audio: &AudioBuffer, segments: &SegmentSet) -> f64 {
    let x = audio.samples();
    let mut in_speech = vec![false; x.len()];
    for r in segments.sample_ranges(audio) {
        in_speech[r].iter_mut().for_each(|m| *m = true);
    }
    let (mut sp, mut ns) = (0.0, 0.0);
    let (mut n_sp, mut n_ns) = (0usize, 0usize);
    for (v, &m) in x.iter().zip(&in_speech) {
        if m {
            sp += v * v;
            n_sp += 1;
        } else {
            ns += v * v;
            n_ns += 1;
        }
    }
    if n_sp == 0 {
        return -SNR_CAP_DB;
    }
    if n_ns == 0 || ns == 0.0 {
        return SNR_CAP_DB;
    }
    let p_speech = sp / n_sp as f64;
    let p_noise = ns / n_ns as f64;
    if p_speech == 0.0 {
        return -SNR_CAP_DB;
    }
    (10.0 * (p_speech / p_noise).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB)
}
