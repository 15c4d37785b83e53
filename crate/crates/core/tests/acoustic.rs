use std::f64::consts::PI;

use cognopipe::acoustic::{
    apply_functionals, compare_like, egemaps_like, extract_llds, CompareConfig, FeatureGrid, FeatureSetId, Functional,
    Lld, LldMatrix, EGEMAPS_DIM, NUM_LLDS,
};
use cognopipe::dsp::{detect_speech, AudioBuffer, SegmentSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SR: u32 = 16000;

fn sawtooth(hz: f64, seconds: f64, amp: f64) -> Vec<f64> {
    let n = (seconds * f64::from(SR)) as usize;
    (0..n)
        .map(|t| {
            let phase = (hz * t as f64 / f64::from(SR)).fract();
            amp * (2.0 * phase - 1.0)
        })
        .collect()
}

/// A voice-like harmonic tone: fundamental plus decaying harmonics.
fn harmonic_tone(hz: f64, seconds: f64, amp: f64) -> Vec<f64> {
    let n = (seconds * f64::from(SR)) as usize;
    (0..n)
        .map(|t| {
            let x = 2.0 * PI * hz * t as f64 / f64::from(SR);
            amp * (1..=8).map(|h| (h as f64 * x).sin() / h as f64).sum::<f64>() / 2.0
        })
        .collect()
}

fn audio(x: Vec<f64>) -> AudioBuffer {
    AudioBuffer::new(x, SR).unwrap()
}

fn llds_of(a: &AudioBuffer) -> LldMatrix {
    extract_llds(a, &detect_speech(a))
}

#[test]
fn sawtooth_pitch_and_jitter() {
    let a = audio(sawtooth(200.0, 1.0, 0.5));
    let m = llds_of(&a);
    assert!(m.len() > 90);
    let f0 = m.median_f0().expect("voiced frames");
    assert!((f0 - 200.0).abs() <= 5.0, "median f0 {f0}");
    assert!(m.jitter_local() < 0.01, "jitter {}", m.jitter_local());
    let voiced = m.voiced_rows().count() as f64 / m.len() as f64;
    assert!(voiced > 0.95, "voiced fraction {voiced}");
}

#[test]
fn alternating_amplitude_gives_expected_shimmer() {
    // frame i's centre hop window is [160 i + 120, 160 i + 280); the
    // envelope alternates 1.0 / 0.8 on exactly those windows.
    let n = SR as usize;
    let x: Vec<f64> = (0..n)
        .map(|t| {
            let env = if ((t + 40) / 160) % 2 == 0 { 0.5 } else { 0.4 };
            env * (2.0 * PI * 200.0 * t as f64 / f64::from(SR)).sin()
        })
        .collect();
    let expected = (0.5 - 0.4) / 0.45;
    let m = extract_llds(&audio(x.clone()), &SegmentSet::whole(&audio(x)));
    let shimmer = m.shimmer_local();
    assert!((shimmer - expected).abs() < 0.01, "shimmer {shimmer} vs analytic {expected}");
    assert!((shimmer - 0.2).abs() <= 0.05, "shimmer {shimmer}");
}

#[test]
fn white_noise_is_mostly_unvoiced() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<f64> = (0..3 * SR as usize).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let a = audio(x);
    let m = extract_llds(&a, &SegmentSet::whole(&a));
    let voiced = m.voiced_rows().count() as f64 / m.len() as f64;
    assert!(voiced <= 0.10, "voiced fraction {voiced}");
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn gain_covariance_on_tones() {
    for (hz, gen) in [(140.0, 0), (220.0, 1)] {
        let x = if gen == 0 { harmonic_tone(hz, 1.5, 0.4) } else { sawtooth(hz, 1.5, 0.4) };
        let base = audio(x);
        let m0 = llds_of(&base);
        for c in [0.25, 0.5, 2.0] {
            let m1 = llds_of(&base.scaled(c).unwrap());
            assert_eq!(m0.len(), m1.len());
            let invariant = [Lld::F0Hz, Lld::VoicedFlag, Lld::JitterLocal, Lld::ShimmerLocal, Lld::Zcr, Lld::HnrDb]
                .into_iter()
                .chain((1..=13).map(Lld::Mfcc))
                .chain([Lld::SpectralCentroidHz, Lld::SpectralSlope0To500, Lld::AlphaRatioDb]);
            for lld in invariant {
                for (a, b) in m0.column(lld).iter().zip(m1.column(lld)) {
                    assert!(close(*a, *b, 1e-6), "{lld} at gain {c}: {a} vs {b}");
                }
            }
            for (a, b) in m0.column(Lld::RmsEnergy).iter().zip(m1.column(Lld::RmsEnergy)) {
                assert!(close(a * c, *b, 1e-6), "rms at gain {c}: {a} vs {b}");
            }
            assert!(close(m0.jitter_local(), m1.jitter_local(), 1e-6));
            assert!(close(m0.shimmer_local(), m1.shimmer_local(), 1e-6));
        }
    }
}

#[test]
fn egemaps_like_dimension_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise: Vec<f64> = (0..SR as usize).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let inputs = [
        harmonic_tone(120.0, 1.0, 0.3),
        sawtooth(310.0, 0.7, 0.8),
        noise,
        vec![0.0; 100],
        vec![0.01; 50],
    ];
    for x in inputs {
        let a = audio(x);
        let segs = detect_speech(&a);
        let v = egemaps_like(&a, &segs);
        assert_eq!(v.dim(), EGEMAPS_DIM);
        assert_eq!(v.feature_set_id, FeatureSetId::EgemapsLike88);
        assert!(v.values.iter().all(|x| x.is_finite()));
        let again = egemaps_like(&a, &segs);
        assert_eq!(
            v.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            again.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn silence_gives_flagged_zero_vector() {
    let a = audio(vec![0.0; SR as usize]);
    let v = egemaps_like(&a, &detect_speech(&a));
    assert!(v.empty_speech);
    assert_eq!(v.values, vec![0.0; 88]);
}

#[test]
fn compare_like_dimensions() {
    let a = audio(harmonic_tone(150.0, 1.0, 0.3));
    let segs = detect_speech(&a);
    assert_eq!(compare_like(&a, &segs, &CompareConfig::default()).unwrap().dim(), 450);
    let tiny = CompareConfig {
        llds: vec!["f0_hz".into()],
        functionals: vec!["mean".into()],
        deltas: false,
        ..CompareConfig::default()
    };
    let v = compare_like(&a, &segs, &tiny).unwrap();
    assert_eq!(v.dim(), 1);
    assert!((v.values[0] - 150.0).abs() < 3.0);
    let empty = CompareConfig {
        llds: vec![],
        ..CompareConfig::default()
    };
    assert!(compare_like(&a, &segs, &empty).is_err());
    let bogus = CompareConfig {
        llds: vec!["formant1".into()],
        ..CompareConfig::default()
    };
    assert!(compare_like(&a, &segs, &bogus).is_err());
}

#[test]
fn distinct_recordings_give_distinct_vectors() {
    let a = audio(harmonic_tone(130.0, 1.0, 0.3));
    let b = audio(harmonic_tone(190.0, 1.0, 0.3));
    let cfg = CompareConfig::default();
    let va = compare_like(&a, &detect_speech(&a), &cfg).unwrap();
    let vb = compare_like(&b, &detect_speech(&b), &cfg).unwrap();
    assert!(va.values.iter().zip(&vb.values).any(|(x, y)| x != y));
}

#[test]
fn leading_silence_does_not_change_egemaps() {
    let tone = harmonic_tone(160.0, 3.0, 0.4);
    let mut shifted = vec![0.0; SR as usize / 2];
    shifted.extend(&tone);
    let a = audio(tone);
    let b = audio(shifted);
    let va = egemaps_like(&a, &detect_speech(&a));
    let vb = egemaps_like(&b, &detect_speech(&b));
    for (i, (x, y)) in va.values.iter().zip(&vb.values).enumerate() {
        assert!((x - y).abs() <= 1e-3 * x.abs().max(y.abs()) + 1e-9, "coordinate {i}: {x} vs {y}");
    }
}

#[test]
fn egemaps_manifest_is_lld_major() {
    let grid = FeatureGrid::egemaps_like();
    assert_eq!(grid.dim(), 88);
    let cols: Vec<usize> = grid.entries().iter().map(|e| e.lld.column()).collect();
    assert!(cols.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(grid.names()[0], "f0_hz__mean");
}

#[test]
fn manifest_dim_mismatch_is_rejected() {
    let text = r#"
feature_set_id = "EgemapsLike88"
version = 1
dim = 3
[[group]]
llds = ["f0_hz"]
functionals = ["mean", "std"]
"#;
    assert!(FeatureGrid::from_manifest(text).is_err());
}

// ---- independent functional oracle ----

fn oracle_functional(f: Functional, v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let pct = |p: f64| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = p * (s.len() - 1) as f64;
        let i = pos.floor() as usize;
        if i + 1 < s.len() {
            s[i] * (1.0 - (pos - i as f64)) + s[i + 1] * (pos - i as f64)
        } else {
            s[i]
        }
    };
    match f {
        Functional::Mean => mean,
        Functional::Std => (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt(),
        Functional::Percentile20 => pct(0.2),
        Functional::Percentile50 => pct(0.5),
        Functional::Percentile80 => pct(0.8),
        Functional::Range => {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        }
        Functional::Slope => {
            if v.len() < 2 {
                return 0.0;
            }
            // normal equations for y = a + b x
            let (sx, sy, sxx, sxy) = v.iter().enumerate().fold((0.0, 0.0, 0.0, 0.0), |acc, (i, y)| {
                let x = i as f64;
                (acc.0 + x, acc.1 + y, acc.2 + x * x, acc.3 + x * y)
            });
            (n * sxy - sx * sy) / (n * sxx - sx * sx)
        }
        Functional::RiseRate => {
            let d: Vec<f64> = (1..v.len()).map(|i| v[i] - v[i - 1]).filter(|d| *d > 0.0).collect();
            if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 }
        }
        Functional::FallRate => {
            let d: Vec<f64> = (1..v.len()).map(|i| v[i - 1] - v[i]).filter(|d| *d > 0.0).collect();
            if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 }
        }
    }
}

fn oracle_track(rows: &[Vec<f64>], segs: &[usize], lld: Lld, delta: bool) -> Vec<f64> {
    let c = lld.column();
    let voiced_c = Lld::VoicedFlag.column();
    let picked: Vec<(usize, f64)> = rows
        .iter()
        .zip(segs)
        .filter(|(r, _)| !lld.voiced_only() || r[voiced_c] == 1.0)
        .map(|(r, &s)| (s, r[c]))
        .collect();
    if !delta {
        return picked.iter().map(|p| p.1).collect();
    }
    let mut out = Vec::new();
    for i in 0..picked.len() {
        let same = |j: usize| picked[j].0 == picked[i].0;
        let prev = i > 0 && same(i - 1);
        let next = i + 1 < picked.len() && same(i + 1);
        out.push(match (prev, next) {
            (true, true) => (picked[i + 1].1 - picked[i - 1].1) / 2.0,
            (false, true) => picked[i + 1].1 - picked[i].1,
            (true, false) => picked[i].1 - picked[i - 1].1,
            (false, false) => 0.0,
        });
    }
    out
}

#[test]
fn functionals_match_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let all_llds: Vec<String> = Lld::all().iter().map(|l| l.name()).collect();
    let grid = FeatureGrid::compare_like(&CompareConfig {
        llds: all_llds,
        ..CompareConfig::default()
    })
    .unwrap();
    for _ in 0..20 {
        let n = rng.gen_range(1..60);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r: Vec<f64> = (0..NUM_LLDS).map(|_| rng.gen_range(-50.0..50.0)).collect();
                r[Lld::VoicedFlag.column()] = f64::from(rng.gen_bool(0.6) as u8);
                r
            })
            .collect();
        let mut segs: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        segs.sort();
        let m = LldMatrix::from_rows(&rows, segs.clone()).unwrap();
        let v = apply_functionals(&m, &grid);
        for (e, got) in grid.entries().iter().zip(&v.values) {
            let want = oracle_functional(e.functional, &oracle_track(&rows, &segs, e.lld, e.delta));
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "{}: {got} vs {want}",
                e.name()
            );
        }
    }
}
