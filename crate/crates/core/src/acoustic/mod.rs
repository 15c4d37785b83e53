//! Acoustic features: frame-level descriptors summarized by functionals into
//! fixed-length vectors.
//!
//! Two grids are provided. The eGeMAPS-like set is frozen in
//! `data/egemaps_like_v1.toml` and always has 88 dimensions. The
//! ComParE-like set is built from a [`CompareConfig`]; its dimension is
//! `|llds| × |functionals| × (2 if deltas else 1)`.

mod functionals;
mod lld;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use functionals::Functional;
pub use lld::{extract_llds, extract_llds_with, Lld, LldConfig, LldMatrix, NUM_LLDS, NUM_MFCC};
pub use store::{read_feature_matrix, write_feature_matrix, FeatureMatrix, FeatureRow};

use crate::dsp::{AudioBuffer, SegmentSet};
use crate::error::{Error, Module, Result};

const EGEMAPS_MANIFEST: &str = include_str!("../../data/egemaps_like_v1.toml");

pub const EGEMAPS_DIM: usize = 88;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSetId {
    EgemapsLike88,
    CompareLike,
    NgramTfidf,
    Lexical,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 4] = [
        FeatureSetId::EgemapsLike88,
        FeatureSetId::CompareLike,
        FeatureSetId::NgramTfidf,
        FeatureSetId::Lexical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSetId::EgemapsLike88 => "EgemapsLike88",
            FeatureSetId::CompareLike => "CompareLike",
            FeatureSetId::NgramTfidf => "NgramTfidf",
            FeatureSetId::Lexical => "Lexical",
        }
    }

    pub fn is_acoustic(self) -> bool {
        matches!(self, FeatureSetId::EgemapsLike88 | FeatureSetId::CompareLike)
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "egemapslike88" | "egemaps" | "egemaps-like" => Ok(FeatureSetId::EgemapsLike88),
            "comparelike" | "compare" | "compare-like" => Ok(FeatureSetId::CompareLike),
            "ngramtfidf" | "ngram" | "tfidf" => Ok(FeatureSetId::NgramTfidf),
            "lexical" => Ok(FeatureSetId::Lexical),
            _ => Err(Error::invalid(Module::Acoustic, "parse_feature_set", s, "unknown feature set")),
        }
    }
}

/// Fixed-length numeric description of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub feature_set_id: FeatureSetId,
    pub values: Vec<f64>,
    /// Set when the recording had no detected speech and the vector is all zeros.
    pub empty_speech: bool,
}

impl FeatureVector {
    pub fn new(feature_set_id: FeatureSetId, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                Module::Acoustic,
                "FeatureVector::new",
                format!("{feature_set_id}[{i}]"),
                "non-finite feature value",
            ));
        }
        Ok(FeatureVector {
            feature_set_id,
            values,
            empty_speech: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// One output coordinate: a functional of a (possibly delta) descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridEntry {
    pub lld: Lld,
    pub delta: bool,
    pub functional: Functional,
}

impl GridEntry {
    pub fn name(&self) -> String {
        if self.delta {
            format!("{}_delta__{}", self.lld, self.functional)
        } else {
            format!("{}__{}", self.lld, self.functional)
        }
    }

    fn sort_key(&self) -> (bool, usize, usize) {
        let f = Functional::ALL.iter().position(|&f| f == self.functional).unwrap();
        (self.delta, self.lld.column(), f)
    }
}

/// Ordered LLD × functional grid defining a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub feature_set_id: FeatureSetId,
    pub version: u32,
    entries: Vec<GridEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    feature_set_id: FeatureSetId,
    version: u32,
    dim: Option<usize>,
    group: Vec<ManifestGroup>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestGroup {
    llds: Vec<String>,
    functionals: Vec<String>,
    #[serde(default)]
    deltas: bool,
}

impl FeatureGrid {
    fn build(
        feature_set_id: FeatureSetId,
        version: u32,
        mut entries: Vec<GridEntry>,
        op: &'static str,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid(Module::Acoustic, op, feature_set_id.name(), "empty feature grid"));
        }
        entries.sort_by_key(GridEntry::sort_key);
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(Module::Acoustic, op, w[0].name(), "duplicate grid entry"));
        }
        Ok(FeatureGrid {
            feature_set_id,
            version,
            entries,
        })
    }

    /// Parses a TOML feature manifest.
    pub fn from_manifest(text: &str) -> Result<Self> {
        let file: ManifestFile = toml::from_str(text)
            .map_err(|e| Error::invalid(Module::Acoustic, "load_feature_manifest", "manifest", e.to_string()))?;
        let mut entries = Vec::new();
        for g in &file.group {
            let llds = g.llds.iter().map(|s| s.parse::<Lld>()).collect::<Result<Vec<_>>>()?;
            let funcs = g
                .functionals
                .iter()
                .map(|s| s.parse::<Functional>())
                .collect::<Result<Vec<_>>>()?;
            for &lld in &llds {
                for &functional in &funcs {
                    entries.push(GridEntry {
                        lld,
                        delta: false,
                        functional,
                    });
                    if g.deltas {
                        entries.push(GridEntry {
                            lld,
                            delta: true,
                            functional,
                        });
                    }
                }
            }
        }
        let grid = FeatureGrid::build(file.feature_set_id, file.version, entries, "load_feature_manifest")?;
        if let Some(dim) = file.dim {
            if dim != grid.dim() {
                return Err(Error::invalid(
                    Module::Acoustic,
                    "load_feature_manifest",
                    file.feature_set_id.name(),
                    format!("declared dim {dim} but grid expands to {}", grid.dim()),
                ));
            }
        }
        Ok(grid)
    }

    /// The frozen 88-dimension eGeMAPS-like grid.
    pub fn egemaps_like() -> Self {
        FeatureGrid::from_manifest(EGEMAPS_MANIFEST).expect("bundled manifest is valid")
    }

    pub fn compare_like(cfg: &CompareConfig) -> Result<Self> {
        if cfg.llds.is_empty() || cfg.functionals.is_empty() {
            return Err(Error::invalid(
                Module::Acoustic,
                "compare_like",
                "config",
                "ComParE-like config needs at least one LLD and one functional",
            ));
        }
        let llds = cfg.llds.iter().map(|s| s.parse::<Lld>()).collect::<Result<Vec<_>>>()?;
        let funcs = cfg
            .functionals
            .iter()
            .map(|s| s.parse::<Functional>())
            .collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::new();
        for delta in [false, true].into_iter().take(if cfg.deltas { 2 } else { 1 }) {
            for &lld in &llds {
                for &functional in &funcs {
                    entries.push(GridEntry { lld, delta, functional });
                }
            }
        }
        FeatureGrid::build(FeatureSetId::CompareLike, cfg.version, entries, "compare_like")
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[GridEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(GridEntry::name).collect()
    }
}

/// Descriptor and functional subsets for the ComParE-like set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub version: u32,
    pub llds: Vec<String>,
    pub functionals: Vec<String>,
    /// Also summarize the first-difference track of every LLD.
    pub deltas: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        let llds = Lld::all()
            .into_iter()
            .filter(|l| !matches!(l, Lld::VoicedFlag | Lld::LogEnergyDb))
            .map(|l| l.name())
            .collect();
        CompareConfig {
            version: 1,
            llds,
            functionals: Functional::ALL.iter().map(|f| f.name().to_string()).collect(),
            deltas: true,
        }
    }
}

/// Values of one descriptor track as seen by the functionals: voiced rows
/// only for pitch-derived descriptors, optionally differenced within each
/// speech segment.
pub fn track(llds: &LldMatrix, lld: Lld, delta: bool) -> Vec<f64> {
    let column = llds.column(lld);
    let rows: Vec<usize> = if lld.voiced_only() {
        llds.voiced_rows().collect()
    } else {
        (0..llds.len()).collect()
    };
    if !delta {
        return rows.iter().map(|&i| column[i]).collect();
    }
    let segs = llds.segments();
    let mut out = Vec::with_capacity(rows.len());
    let mut start = 0;
    while start < rows.len() {
        let mut end = start + 1;
        while end < rows.len() && segs[rows[end]] == segs[rows[start]] {
            end += 1;
        }
        let v: Vec<f64> = rows[start..end].iter().map(|&i| column[i]).collect();
        out.extend(central_difference(&v));
        start = end;
    }
    out
}

fn central_difference(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| match i {
            0 => v[1] - v[0],
            i if i == n - 1 => v[n - 1] - v[n - 2],
            i => 0.5 * (v[i + 1] - v[i - 1]),
        })
        .collect()
}

/// Summarizes a descriptor matrix with a grid, in grid order.
///
/// An empty matrix yields the all-zero vector of the grid's dimension with
/// `empty_speech` set.
pub fn apply_functionals(llds: &LldMatrix, grid: &FeatureGrid) -> FeatureVector {
    if llds.is_empty() {
        return FeatureVector {
            feature_set_id: grid.feature_set_id,
            values: vec![0.0; grid.dim()],
            empty_speech: true,
        };
    }
    let mut cache: Vec<((Lld, bool), Vec<f64>)> = Vec::new();
    let values = grid
        .entries()
        .iter()
        .map(|e| {
            let key = (e.lld, e.delta);
            let pos = match cache.iter().position(|(k, _)| *k == key) {
                Some(p) => p,
                None => {
                    cache.push((key, track(llds, e.lld, e.delta)));
                    cache.len() - 1
                }
            };
            e.functional.apply(&cache[pos].1)
        })
        .collect();
    FeatureVector {
        feature_set_id: grid.feature_set_id,
        values,
        empty_speech: false,
    }
}

/// The 88-dimension eGeMAPS-like vector with default descriptor settings.
pub fn egemaps_like(audio: &AudioBuffer, segments: &SegmentSet) -> FeatureVector {
    apply_functionals(&extract_llds(audio, segments), &FeatureGrid::egemaps_like())
}

pub fn compare_like(audio: &AudioBuffer, segments: &SegmentSet, cfg: &CompareConfig) -> Result<FeatureVector> {
    let grid = FeatureGrid::compare_like(cfg)?;
    Ok(apply_functionals(&extract_llds(audio, segments), &grid))
}
