//! Synthetic corpora: harmonic pulse-train "speech" in white noise plus
//! class-skewed transcripts, written in the regular manifest layout.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{write_manifest, Corpus, Diagnosis, Gender, SubjectRecord, Task, TaskRecording};
use crate::dsp::write_wav;
use crate::error::{Error, Module, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_case: usize,
    pub n_control: usize,
    pub seed: u64,
    /// 0 gives identical class distributions; around 3 is easily separable.
    pub acoustic_separation: f64,
    pub linguistic_separation: f64,
    pub snr_db_target: f64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    /// Share of Case subjects labelled Dementia; the rest are MCI.
    pub dementia_fraction: f64,
    pub tasks: Vec<Task>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_case: 10,
            n_control: 10,
            seed: 0,
            acoustic_separation: 0.0,
            linguistic_separation: 0.0,
            snr_db_target: 20.0,
            duration_s: 4.0,
            sample_rate_hz: 16_000,
            dementia_fraction: 0.2,
            tasks: Task::ALL.to_vec(),
        }
    }
}

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SynthSpec =
            toml::from_str(text).map_err(|e| Error::invalid(Module::Synth, "parse_spec", "spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |entity: &str, msg: &str| Err(Error::invalid(Module::Synth, "validate_spec", entity, msg));
        if self.n_case + self.n_control == 0 {
            return fail("n_case+n_control", "no subjects requested");
        }
        if !(self.acoustic_separation >= 0.0 && self.acoustic_separation.is_finite()) {
            return fail("acoustic_separation", "must be a finite value >= 0");
        }
        if !(self.linguistic_separation >= 0.0 && self.linguistic_separation.is_finite()) {
            return fail("linguistic_separation", "must be a finite value >= 0");
        }
        if !self.snr_db_target.is_finite() {
            return fail("snr_db_target", "must be finite");
        }
        if !(self.duration_s >= 1.0) {
            return fail("duration_s", "must be at least 1 s");
        }
        if self.sample_rate_hz < 8000 {
            return fail("sample_rate_hz", "must be at least 8000");
        }
        if !(0.0..=1.0).contains(&self.dementia_fraction) {
            return fail("dementia_fraction", "must lie in [0, 1]");
        }
        if self.tasks.is_empty() {
            return fail("tasks", "no tasks requested");
        }
        Ok(())
    }
}

/// Per-subject voice parameters.
#[derive(Debug, Clone, Copy)]
struct Voice {
    f0_hz: f64,
    jitter: f64,
    shimmer: f64,
    pause_scale: f64,
}

fn voice(rng: &mut impl Rng, is_case: bool, sep: f64) -> Voice {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let dir = if is_case { 1.0 } else { -1.0 };
    let base_f0 = 150.0 + 12.0 * n.sample(rng);
    Voice {
        f0_hz: (base_f0 - dir * 10.0 * sep).clamp(80.0, 300.0),
        jitter: (0.008 + dir * 0.002 * sep + 0.001 * n.sample(rng)).clamp(0.001, 0.05),
        shimmer: (0.04 + dir * 0.01 * sep + 0.005 * n.sample(rng)).clamp(0.005, 0.2),
        pause_scale: (1.0 + dir * 0.15 * sep + 0.05 * n.sample(rng)).max(0.5),
    }
}

/// Clean signal plus a mask of the sample positions inside voiced bursts.
fn voiced_signal(rng: &mut impl Rng, v: Voice, duration_s: f64, sr: u32) -> (Vec<f64>, Vec<bool>) {
    let n = (duration_s * sr as f64).round() as usize;
    let fs = sr as f64;
    let mut x = vec![0.0; n];
    let mut mask = vec![false; n];
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n_harm = ((0.45 * fs) / (v.f0_hz * 1.3)).floor().clamp(1.0, 30.0) as usize;
    let ramp = (0.02 * fs) as usize;

    let mut pos = (rng.gen_range(0.25..0.45) * v.pause_scale * fs) as usize;
    while pos < n {
        let burst_len = (rng.gen_range(0.5..1.2) * fs) as usize;
        let end = (pos + burst_len).min(n.saturating_sub((0.3 * fs) as usize));
        if end < pos + (0.3 * fs) as usize {
            break;
        }
        let mut t = pos;
        while t < end {
            let rel = (t - pos) as f64 / fs;
            let f0 = v.f0_hz * (1.0 + 0.05 * (2.0 * PI * 0.7 * rel).sin());
            let period = (fs / f0) * (1.0 + v.jitter * normal.sample(rng));
            let len = period.round().max(2.0) as usize;
            let amp = 1.0 + v.shimmer * normal.sample(rng);
            for i in 0..len.min(end - t) {
                let phase = 2.0 * PI * i as f64 / period;
                let s: f64 = (1..=n_harm).map(|k| (k as f64 * phase).sin() / k as f64).sum();
                let j = t + i;
                let env = ((j - pos).min(end - 1 - j) as f64 / ramp as f64).min(1.0);
                x[j] = amp * env * s;
                mask[j] = true;
            }
            t += len;
        }
        pos = end + (rng.gen_range(0.3..0.6) * v.pause_scale * fs) as usize;
    }
    (x, mask)
}

fn render_audio(rng: &mut impl Rng, v: Voice, spec: &SynthSpec) -> Vec<f64> {
    let (mut x, mask) = voiced_signal(rng, v, spec.duration_s, spec.sample_rate_hz);
    let voiced: Vec<f64> = x.iter().zip(&mask).filter(|(_, &m)| m).map(|(s, _)| s * s).collect();
    let p_speech = if voiced.is_empty() {
        1.0
    } else {
        voiced.iter().sum::<f64>() / voiced.len() as f64
    };
    let noise_std = (p_speech / 10f64.powf(spec.snr_db_target / 10.0)).sqrt();
    let noise = Normal::new(0.0, noise_std).expect("finite noise level");
    for s in x.iter_mut() {
        *s += noise.sample(rng);
    }
    let peak = x.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let g = 0.5 / peak;
        x.iter_mut().for_each(|s| *s *= g);
    }
    x
}

const CASE_WORDS: [&str; 12] = [
    "um", "uh", "er", "thing", "something", "forget", "cannot", "remember", "maybe", "stuff", "what", "well",
];
const CONTROL_WORDS: [&str; 12] = [
    "specifically",
    "exactly",
    "clearly",
    "recall",
    "detailed",
    "particular",
    "precisely",
    "certainly",
    "indeed",
    "definitely",
    "carefully",
    "vividly",
];

fn task_words(task: Task) -> &'static [&'static str] {
    match task {
        Task::ShortTerm => &[
            "i", "had", "toast", "tea", "for", "breakfast", "this", "morning", "and", "then", "walked", "the", "dog",
            "to", "shop", "bought", "milk", "bread", "saw", "neighbour", "yesterday", "watched", "news",
        ],
        Task::LongTerm => &[
            "when", "i", "was", "young", "we", "lived", "near", "the", "sea", "my", "father", "worked", "at", "a",
            "mill", "school", "was", "small", "friends", "played", "in", "fields", "summer", "holidays",
        ],
        Task::SemanticFluency => &[
            "dog", "cat", "horse", "cow", "sheep", "pig", "lion", "tiger", "elephant", "giraffe", "zebra", "monkey",
            "bear", "wolf", "fox", "rabbit", "mouse", "deer", "goat", "camel", "kangaroo", "otter", "badger", "owl",
        ],
        Task::PictureDescription => &[
            "the", "boy", "is", "on", "stool", "taking", "cookies", "from", "jar", "falling", "girl", "wants", "one",
            "mother", "washing", "dishes", "sink", "overflowing", "water", "floor", "window", "curtains", "kitchen",
        ],
    }
}

fn transcript(rng: &mut impl Rng, task: Task, is_case: bool, sep: f64, duration_s: f64) -> String {
    let base = task_words(task);
    let dir = if is_case { 1.0 } else { -1.0 };
    let mut words: Vec<&str> = base.to_vec();
    let mut weights = vec![1.0; base.len()];
    for w in CASE_WORDS {
        words.push(w);
        weights.push(0.3 * (dir * sep).exp());
    }
    for w in CONTROL_WORDS {
        words.push(w);
        weights.push(0.3 * (-dir * sep).exp());
    }
    let dist = WeightedIndex::new(&weights).expect("positive weights");
    let rate = 2.0 / (1.0 + 0.1 * dir * sep).max(0.5);
    let count = ((duration_s * rate) * rng.gen_range(0.8..1.2)).round().max(3.0) as usize;
    (0..count).map(|_| words[dist.sample(rng)]).collect::<Vec<_>>().join(" ")
}

/// Writes audio, transcripts and the manifest under `out_dir` and returns
/// the manifest directory. Output is a pure function of `spec`.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_case + spec.n_control;
    let width = n.to_string().len().max(3);
    let mut is_case: Vec<bool> = (0..n).map(|i| i < spec.n_case).collect();
    is_case.shuffle(&mut rng);
    let n_dementia = (spec.n_case as f64 * spec.dementia_fraction).round() as usize;

    for sub in ["audio", "transcripts"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(Module::Synth, "generate", &d, e))?;
    }

    let mut subjects = Vec::with_capacity(n);
    let mut recordings = Vec::new();
    let mut cases_seen = 0;
    for (i, &case) in is_case.iter().enumerate() {
        let id = format!("S{:0width$}", i + 1);
        let diagnosis = if !case {
            Diagnosis::Hc
        } else {
            cases_seen += 1;
            if cases_seen <= n_dementia {
                Diagnosis::Dementia
            } else {
                Diagnosis::Mci
            }
        };
        let gender = match rng.gen_range(0..20) {
            0 => Gender::Undisclosed,
            k if k % 2 == 0 => Gender::F,
            _ => Gender::M,
        };
        subjects.push(SubjectRecord {
            subject_id: id.clone(),
            age: Some(rng.gen_range(60..=88)),
            gender,
            ethnicity: ["White", "Asian", "Black", "Mixed"].choose(&mut rng).map(|s| s.to_string()),
            diagnosis,
            questionnaire_scores: Default::default(),
        });
        let v = voice(&mut rng, case, spec.acoustic_separation);
        for &task in &spec.tasks {
            let mut file_rng = ChaCha8Rng::seed_from_u64(rng.gen());
            let audio = render_audio(&mut file_rng, v, spec);
            let text = transcript(&mut file_rng, task, case, spec.linguistic_separation, spec.duration_s);
            let audio_rel = PathBuf::from("audio").join(format!("{id}_{task}.wav"));
            let text_rel = PathBuf::from("transcripts").join(format!("{id}_{task}.txt"));
            write_wav(out_dir.join(&audio_rel), &audio, spec.sample_rate_hz)?;
            let text_abs = out_dir.join(&text_rel);
            fs::write(&text_abs, format!("{text}\n")).map_err(|e| Error::io(Module::Synth, "generate", &text_abs, e))?;
            recordings.push(TaskRecording {
                subject_id: id.clone(),
                task,
                audio_path: audio_rel,
                transcript_path: Some(text_rel),
                transcript: Some(text),
                duration_s: audio.len() as f64 / spec.sample_rate_hz as f64,
                sample_rate_hz: spec.sample_rate_hz,
            });
        }
    }
    let corpus = Corpus::new(subjects, recordings)?;
    write_manifest(&corpus, out_dir)?;
    Ok(out_dir.to_path_buf())
}
