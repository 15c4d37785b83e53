//! Frame-level low-level descriptors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::{autocorrelation, frame_geometry, frame_signal, power_spectrum, AudioBuffer, SegmentSet};
use crate::error::{Error, Module, Result};

pub const NUM_MFCC: usize = 13;
pub const NUM_LLDS: usize = 14 + NUM_MFCC;

/// A named per-frame descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lld {
    F0Hz,
    VoicedFlag,
    RmsEnergy,
    LogEnergyDb,
    Zcr,
    JitterLocal,
    ShimmerLocal,
    HnrDb,
    SpectralCentroidHz,
    SpectralFlux,
    SpectralSlope0To500,
    SpectralSlope500To1500,
    AlphaRatioDb,
    HammarbergIndexDb,
    /// Cepstral coefficient 1..=13.
    Mfcc(u8),
}

const SCALAR_LLDS: [Lld; 14] = [
    Lld::F0Hz,
    Lld::VoicedFlag,
    Lld::RmsEnergy,
    Lld::LogEnergyDb,
    Lld::Zcr,
    Lld::JitterLocal,
    Lld::ShimmerLocal,
    Lld::HnrDb,
    Lld::SpectralCentroidHz,
    Lld::SpectralFlux,
    Lld::SpectralSlope0To500,
    Lld::SpectralSlope500To1500,
    Lld::AlphaRatioDb,
    Lld::HammarbergIndexDb,
];

impl Lld {
    /// All descriptors in column order.
    pub fn all() -> Vec<Lld> {
        SCALAR_LLDS
            .iter()
            .copied()
            .chain((1..=NUM_MFCC as u8).map(Lld::Mfcc))
            .collect()
    }

    pub fn column(self) -> usize {
        match self {
            Lld::Mfcc(k) => 13 + k as usize,
            other => SCALAR_LLDS.iter().position(|&l| l == other).unwrap(),
        }
    }

    /// Pitch-derived descriptors are only meaningful on voiced frames.
    pub fn voiced_only(self) -> bool {
        matches!(self, Lld::F0Hz | Lld::JitterLocal | Lld::ShimmerLocal | Lld::HnrDb)
    }

    pub fn name(self) -> String {
        match self {
            Lld::F0Hz => "f0_hz".into(),
            Lld::VoicedFlag => "voiced_flag".into(),
            Lld::RmsEnergy => "rms_energy".into(),
            Lld::LogEnergyDb => "log_energy_db".into(),
            Lld::Zcr => "zcr".into(),
            Lld::JitterLocal => "jitter_local".into(),
            Lld::ShimmerLocal => "shimmer_local".into(),
            Lld::HnrDb => "hnr_db".into(),
            Lld::SpectralCentroidHz => "spectral_centroid_hz".into(),
            Lld::SpectralFlux => "spectral_flux".into(),
            Lld::SpectralSlope0To500 => "spectral_slope_0_500".into(),
            Lld::SpectralSlope500To1500 => "spectral_slope_500_1500".into(),
            Lld::AlphaRatioDb => "alpha_ratio_db".into(),
            Lld::HammarbergIndexDb => "hammarberg_index_db".into(),
            Lld::Mfcc(k) => format!("mfcc{k}"),
        }
    }
}

impl fmt::Display for Lld {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Lld {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("mfcc").and_then(|k| k.parse::<u8>().ok()) {
            if (1..=NUM_MFCC as u8).contains(&k) {
                return Ok(Lld::Mfcc(k));
            }
        }
        SCALAR_LLDS
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::invalid(Module::Acoustic, "parse_lld", s, "unknown low-level descriptor"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LldConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    pub mel_bands: usize,
}

impl Default for LldConfig {
    fn default() -> Self {
        LldConfig {
            frame_len_s: 0.025,
            hop_s: 0.010,
            f0_min_hz: 55.0,
            f0_max_hz: 600.0,
            voicing_threshold: 0.45,
            mel_bands: 26,
        }
    }
}

/// Per-frame descriptor table, one row per analysis frame of speech.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LldMatrix {
    columns: Vec<Vec<f64>>,
    /// Index of the speech segment each row came from.
    segment: Vec<usize>,
    /// RMS over the hop-length window at each frame's centre; the shimmer amplitude.
    amplitude: Vec<f64>,
}

impl LldMatrix {
    pub fn empty() -> Self {
        LldMatrix {
            columns: vec![Vec::new(); NUM_LLDS],
            segment: Vec::new(),
            amplitude: Vec::new(),
        }
    }

    /// Builds a matrix from rows of `NUM_LLDS` values.
    pub fn from_rows(rows: &[Vec<f64>], segment: Vec<usize>) -> Result<Self> {
        if rows.len() != segment.len() {
            return Err(Error::invalid(Module::Acoustic, "LldMatrix::from_rows", "segment", "length mismatch"));
        }
        let mut m = LldMatrix::empty();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != NUM_LLDS || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    Module::Acoustic,
                    "LldMatrix::from_rows",
                    format!("row {i}"),
                    format!("expected {NUM_LLDS} finite values"),
                ));
            }
            for (c, v) in row.iter().enumerate() {
                m.columns[c].push(*v);
            }
        }
        m.segment = segment;
        m.amplitude = m.columns[Lld::RmsEnergy.column()].clone();
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segment.is_empty()
    }

    pub fn column(&self, lld: Lld) -> &[f64] {
        &self.columns[lld.column()]
    }

    pub fn segments(&self) -> &[usize] {
        &self.segment
    }

    pub fn voiced_rows(&self) -> impl Iterator<Item = usize> + '_ {
        let flags = self.column(Lld::VoicedFlag);
        (0..self.len()).filter(move |&i| flags[i] == 1.0)
    }

    /// Median F0 over voiced frames, or `None` if nothing is voiced.
    pub fn median_f0(&self) -> Option<f64> {
        let f0 = self.column(Lld::F0Hz);
        let mut voiced: Vec<f64> = self.voiced_rows().map(|i| f0[i]).collect();
        if voiced.is_empty() {
            return None;
        }
        voiced.sort_by(f64::total_cmp);
        Some(crate::dsp::percentile_sorted(&voiced, 50.0))
    }

    fn consecutive_voiced_ratio(&self, values: impl Fn(usize) -> f64) -> f64 {
        let flags = self.column(Lld::VoicedFlag);
        let voiced: Vec<usize> = self.voiced_rows().collect();
        if voiced.is_empty() {
            return 0.0;
        }
        let deltas: Vec<f64> = (1..self.len())
            .filter(|&i| flags[i] == 1.0 && flags[i - 1] == 1.0 && self.segment[i] == self.segment[i - 1])
            .map(|i| (values(i) - values(i - 1)).abs())
            .collect();
        if deltas.is_empty() {
            return 0.0;
        }
        let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let mean = voiced.iter().map(|&i| values(i)).sum::<f64>() / voiced.len() as f64;
        if mean > 0.0 {
            mean_delta / mean
        } else {
            0.0
        }
    }

    /// Recording-level jitter: mean |ΔT| / mean T over consecutive voiced frames.
    pub fn jitter_local(&self) -> f64 {
        let f0 = self.column(Lld::F0Hz);
        self.consecutive_voiced_ratio(|i| 1.0 / f0[i])
    }

    /// Recording-level shimmer: mean |ΔA| / mean A over consecutive voiced frames.
    pub fn shimmer_local(&self) -> f64 {
        let amp = &self.amplitude;
        self.consecutive_voiced_ratio(|i| amp[i])
    }
}

/// Pitch estimate for one frame.
#[derive(Debug, Clone, Copy)]
struct Pitch {
    f0_hz: f64,
    /// Normalized autocorrelation at the chosen lag.
    peak: f64,
    voiced: bool,
}

fn estimate_pitch(x: &[f64], sr: f64, cfg: &LldConfig) -> Pitch {
    let unvoiced = Pitch {
        f0_hz: 0.0,
        peak: 0.0,
        voiced: false,
    };
    let n = x.len();
    let min_lag = ((sr / cfg.f0_max_hz).floor() as usize).max(1);
    let max_lag = ((sr / cfg.f0_min_hz).ceil() as usize).min(n.saturating_sub(2));
    if max_lag <= min_lag + 1 {
        return unvoiced;
    }
    let r = autocorrelation(x);
    // prefix[t] = Σ_{u<t} x[u]²
    let mut prefix = vec![0.0; n + 1];
    for (t, v) in x.iter().enumerate() {
        prefix[t + 1] = prefix[t] + v * v;
    }
    let total = prefix[n];
    if total <= 0.0 {
        return unvoiced;
    }
    let nr = |lag: usize| -> f64 {
        let head = prefix[n - lag];
        let tail = total - prefix[lag];
        let denom = (head * tail).sqrt();
        if denom > 0.0 {
            r[lag] / denom
        } else {
            0.0
        }
    };
    let lo = min_lag.saturating_sub(1).max(1);
    let hi = max_lag + 1;
    let curve: Vec<f64> = (lo..=hi).map(nr).collect();
    let at = |lag: usize| curve[lag - lo];
    let best = (min_lag..=max_lag).map(at).fold(f64::NEG_INFINITY, f64::max);
    if !(best >= cfg.voicing_threshold) {
        return Pitch { peak: best.max(0.0), ..unvoiced };
    }
    // shortest-lag local maximum close to the global one avoids octave errors
    let lag = (min_lag..=max_lag)
        .find(|&l| at(l) >= 0.9 * best && at(l) >= at(l - 1) && at(l) >= at(l + 1))
        .unwrap_or(min_lag);
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let f0 = sr / (lag as f64 + shift);
    if f0 < cfg.f0_min_hz || f0 > cfg.f0_max_hz {
        return Pitch { peak: b, ..unvoiced };
    }
    Pitch {
        f0_hz: f0,
        peak: b,
        voiced: true,
    }
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_inv(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over `nfft/2 + 1` bins; every band gets at least
/// one nonzero weight.
fn mel_filterbank(bands: usize, nfft: usize, sr: f64) -> Vec<Vec<(usize, f64)>> {
    let bins = nfft / 2 + 1;
    let bin_hz = sr / nfft as f64;
    let top = mel(sr / 2.0);
    let edges: Vec<f64> = (0..bands + 2).map(|i| mel_inv(top * i as f64 / (bands + 1) as f64)).collect();
    (0..bands)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut weights: Vec<(usize, f64)> = (0..bins)
                .filter_map(|b| {
                    let f = b as f64 * bin_hz;
                    let w = if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((b, w))
                })
                .collect();
            if weights.is_empty() {
                let nearest = ((mid / bin_hz).round() as usize).min(bins - 1);
                weights.push((nearest, 1.0));
            }
            weights
        })
        .collect()
}

fn log_floor(p: f64) -> f64 {
    p.max(1e-30)
}

fn band_slope_db_per_hz(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = power
        .iter()
        .enumerate()
        .skip(1)
        .map(|(b, &p)| (b as f64 * bin_hz, p))
        .filter(|&(f, _)| f >= lo && f <= hi)
        .map(|(f, p)| (f, 10.0 * log_floor(p).log10()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn band_fold(power: &[f64], bin_hz: f64, lo: f64, hi: f64, init: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    power
        .iter()
        .enumerate()
        .filter(|(b, _)| {
            let hz = *b as f64 * bin_hz;
            hz >= lo && hz <= hi
        })
        .fold(init, |acc, (_, &p)| f(acc, p))
}

fn db_ratio(num: f64, den: f64) -> f64 {
    if num > 0.0 && den > 0.0 {
        10.0 * (num / den).log10()
    } else {
        0.0
    }
}

/// Row of descriptors plus the shimmer amplitude for one frame.
struct FrameDescriptors {
    row: [f64; NUM_LLDS],
    amplitude: f64,
    period_s: f64,
    voiced: bool,
    norm_mag: Vec<f64>,
}

struct Analyzer {
    sr: f64,
    nfft: usize,
    window: Vec<f64>,
    filters: Vec<Vec<(usize, f64)>>,
    hop: usize,
    cfg: LldConfig,
}

impl Analyzer {
    fn new(sr: u32, cfg: &LldConfig) -> Self {
        let (len, hop) = frame_geometry(sr, cfg.frame_len_s, cfg.hop_s);
        let nfft = len.next_power_of_two().max(2);
        let window = (0..len)
            .map(|i| {
                if len == 1 {
                    1.0
                } else {
                    0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos()
                }
            })
            .collect();
        Analyzer {
            sr: f64::from(sr),
            nfft,
            window,
            filters: mel_filterbank(cfg.mel_bands, nfft, f64::from(sr)),
            hop,
            cfg: cfg.clone(),
        }
    }

    fn frame(&self, x: &[f64]) -> FrameDescriptors {
        let n = x.len();
        let mut row = [0.0; NUM_LLDS];
        let ms = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        row[Lld::RmsEnergy.column()] = ms.sqrt();
        row[Lld::LogEnergyDb.column()] = 10.0 * ms.max(1e-12).log10();
        let crossings = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
        row[Lld::Zcr.column()] = if n > 1 { crossings as f64 / (n - 1) as f64 } else { 0.0 };

        let pitch = estimate_pitch(x, self.sr, &self.cfg);
        if pitch.voiced {
            row[Lld::F0Hz.column()] = pitch.f0_hz;
            row[Lld::VoicedFlag.column()] = 1.0;
            let r = pitch.peak.clamp(1e-6, 1.0 - 1e-6);
            row[Lld::HnrDb.column()] = 10.0 * (r / (1.0 - r)).log10();
        }
        let centre = n / 2;
        let half = (self.hop / 2).max(1);
        let core = &x[centre.saturating_sub(half)..(centre + half).min(n)];
        let amplitude = (core.iter().map(|v| v * v).sum::<f64>() / core.len() as f64).sqrt();

        let windowed: Vec<f64> = x.iter().zip(&self.window).map(|(v, w)| v * w).collect();
        let power = power_spectrum(&windowed, self.nfft);
        let bin_hz = self.sr / self.nfft as f64;
        let total: f64 = power.iter().sum();
        if total > 0.0 {
            row[Lld::SpectralCentroidHz.column()] =
                power.iter().enumerate().map(|(b, p)| b as f64 * bin_hz * p).sum::<f64>() / total;
        }
        let mags: Vec<f64> = power.iter().map(|p| p.sqrt()).collect();
        let mag_sum: f64 = mags.iter().sum();
        let norm_mag = if mag_sum > 0.0 {
            mags.iter().map(|m| m / mag_sum).collect()
        } else {
            vec![0.0; mags.len()]
        };
        row[Lld::SpectralSlope0To500.column()] = band_slope_db_per_hz(&power, bin_hz, 0.0, 500.0);
        row[Lld::SpectralSlope500To1500.column()] = band_slope_db_per_hz(&power, bin_hz, 500.0, 1500.0);
        let low = band_fold(&power, bin_hz, 50.0, 1000.0, 0.0, |a, p| a + p);
        let high = band_fold(&power, bin_hz, 1000.0 + bin_hz / 2.0, 5000.0, 0.0, |a, p| a + p);
        row[Lld::AlphaRatioDb.column()] = db_ratio(low, high);
        let low_peak = band_fold(&power, bin_hz, 0.0, 2000.0, 0.0, f64::max);
        let high_peak = band_fold(&power, bin_hz, 2000.0 + bin_hz / 2.0, 5000.0, 0.0, f64::max);
        row[Lld::HammarbergIndexDb.column()] = db_ratio(low_peak, high_peak);

        let log_mel: Vec<f64> = self
            .filters
            .iter()
            .map(|f| log_floor(f.iter().map(|&(b, w)| power[b] * w).sum::<f64>()).ln())
            .collect();
        let bands = log_mel.len() as f64;
        for k in 1..=NUM_MFCC {
            row[Lld::Mfcc(k as u8).column()] = log_mel
                .iter()
                .enumerate()
                .map(|(m, v)| v * (std::f64::consts::PI * k as f64 * (m as f64 + 0.5) / bands).cos())
                .sum();
        }

        FrameDescriptors {
            row,
            amplitude,
            period_s: if pitch.voiced { 1.0 / pitch.f0_hz } else { 0.0 },
            voiced: pitch.voiced,
            norm_mag,
        }
    }
}

/// Descriptors over the speech segments, 25 ms frames with a 10 ms hop.
pub fn extract_llds(audio: &AudioBuffer, segments: &SegmentSet) -> LldMatrix {
    extract_llds_with(audio, segments, &LldConfig::default())
}

pub fn extract_llds_with(audio: &AudioBuffer, segments: &SegmentSet, cfg: &LldConfig) -> LldMatrix {
    let analyzer = Analyzer::new(audio.sample_rate_hz(), cfg);
    let mut out = LldMatrix::empty();
    for (seg_idx, range) in segments.sample_ranges(audio).into_iter().enumerate() {
        let frames = frame_signal(&audio.samples()[range], audio.sample_rate_hz(), cfg.frame_len_s, cfg.hop_s);
        let mut prev: Option<FrameDescriptors> = None;
        for frame in &frames.frames {
            let mut d = analyzer.frame(frame);
            if let Some(p) = &prev {
                d.row[Lld::SpectralFlux.column()] =
                    d.norm_mag.iter().zip(&p.norm_mag).map(|(a, b)| (a - b).powi(2)).sum();
                if d.voiced && p.voiced {
                    d.row[Lld::JitterLocal.column()] =
                        (d.period_s - p.period_s).abs() / (0.5 * (d.period_s + p.period_s));
                    let mean_amp = 0.5 * (d.amplitude + p.amplitude);
                    if mean_amp > 0.0 {
                        d.row[Lld::ShimmerLocal.column()] = (d.amplitude - p.amplitude).abs() / mean_amp;
                    }
                }
            }
            for (c, v) in d.row.iter().enumerate() {
                out.columns[c].push(*v);
            }
            out.amplitude.push(d.amplitude);
            out.segment.push(seg_idx);
            prev = Some(d);
        }
    }
    out
}
