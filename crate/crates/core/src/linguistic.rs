//! Transcript features: word n-gram TF-IDF vectors and lexical statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acoustic::{FeatureSetId, FeatureVector};
use crate::error::{Error, Module, Result};
use crate::fit::FitTag;

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Space-joined n-grams for every n in `n_min..=n_max`.
pub fn ngrams(tokens: &[String], n_min: usize, n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in n_min.max(1)..=n_max {
        out.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgramConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub min_doc_freq: usize,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            n_min: 1,
            n_max: 2,
            min_doc_freq: 2,
        }
    }
}

/// Fitted n-gram index with smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
    idf: Vec<f64>,
    pub n_range: (usize, usize),
    pub min_doc_freq: usize,
    pub num_docs: usize,
    pub fitted_on: FitTag,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn idf(&self, ngram: &str) -> Option<f64> {
        self.index_of(ngram).map(|i| self.idf[i])
    }

    /// N-grams in index order.
    pub fn ngrams(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn with_fit_tag(mut self, tag: FitTag) -> Self {
        self.fitted_on = tag;
        self
    }
}

/// Fits a vocabulary on training documents.
///
/// Indices follow lexicographic n-gram order; `idf = ln((1+N)/(1+df)) + 1`.
pub fn fit_vocabulary<S: AsRef<str>>(train: &[S], cfg: &NgramConfig) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::invalid(Module::Linguistic, "fit_vocabulary", "train", "empty training set"));
    }
    if cfg.n_min == 0 || cfg.n_min > cfg.n_max {
        return Err(Error::invalid(
            Module::Linguistic,
            "fit_vocabulary",
            format!("n_range=({},{})", cfg.n_min, cfg.n_max),
            "invalid n-gram range",
        ));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in train {
        let grams: BTreeSet<String> = ngrams(&tokenize(doc.as_ref()), cfg.n_min, cfg.n_max).into_iter().collect();
        for g in grams {
            *df.entry(g).or_default() += 1;
        }
    }
    let n = train.len() as f64;
    let kept: Vec<(String, usize)> = df.into_iter().filter(|(_, d)| *d >= cfg.min_doc_freq).collect();
    let idf = kept.iter().map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0).collect();
    let index = kept.into_iter().enumerate().map(|(i, (g, _))| (g, i)).collect();
    Ok(Vocabulary {
        index,
        idf,
        n_range: (cfg.n_min, cfg.n_max),
        min_doc_freq: cfg.min_doc_freq,
        num_docs: train.len(),
        fitted_on: FitTag::default(),
    })
}

/// Raw-count TF times IDF, L2-normalized unless all zero. Out-of-vocabulary
/// n-grams are ignored.
pub fn vectorize_tfidf(text: &str, vocab: &Vocabulary) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for g in ngrams(&tokenize(text), vocab.n_range.0, vocab.n_range.1) {
        if let Some(i) = vocab.index_of(&g) {
            values[i] += 1.0;
        }
    }
    for (v, idf) in values.iter_mut().zip(&vocab.idf) {
        *v *= idf;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    FeatureVector {
        feature_set_id: FeatureSetId::NgramTfidf,
        values,
        empty_speech: false,
    }
}

/// Like [`vectorize_tfidf`] for a held-out subject's document; refuses a
/// vocabulary whose fit included that subject.
pub fn vectorize_heldout(text: &str, subject_id: &str, vocab: &Vocabulary) -> Result<FeatureVector> {
    vocab.fitted_on.ensure_disjoint("vocabulary", [subject_id])?;
    Ok(vectorize_tfidf(text, vocab))
}

const VOCAB_MAGIC: &str = "# cognopipe-vocabulary v1";

pub fn write_vocabulary(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(VOCAB_MAGIC);
    out.push('\n');
    out.push_str(&format!("n_range\t{}\t{}\n", vocab.n_range.0, vocab.n_range.1));
    out.push_str(&format!("min_doc_freq\t{}\n", vocab.min_doc_freq));
    out.push_str(&format!("num_docs\t{}\n", vocab.num_docs));
    out.push_str(&format!("fitted_on\t{}\n", vocab.fitted_on.label));
    let subjects: Vec<&str> = vocab.fitted_on.subjects.iter().map(String::as_str).collect();
    out.push_str(&format!("subjects\t{}\n", subjects.join("\t")));
    for (g, &i) in &vocab.index {
        out.push_str(&format!("{g}\t{i}\t{}\n", vocab.idf[i]));
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(Module::Linguistic, "write_vocabulary", path, e))
}

pub fn read_vocabulary(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(Module::Linguistic, "read_vocabulary", path, e))?;
    let bad = |m: String| Error::invalid(Module::Linguistic, "read_vocabulary", path.display().to_string(), m);
    let mut lines = text.lines();
    if lines.next() != Some(VOCAB_MAGIC) {
        return Err(bad("missing vocabulary header".into()));
    }
    let mut field = |name: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(format!("missing {name}")))?;
        let mut parts = line.split('\t');
        if parts.next() != Some(name) {
            return Err(bad(format!("expected {name} line")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |v: Option<&String>| -> Result<usize> {
        v.and_then(|s| s.parse().ok()).ok_or_else(|| bad("invalid integer field".into()))
    };
    let n_range = field("n_range")?;
    let n_range = (num(n_range.first())?, num(n_range.get(1))?);
    let min_doc_freq = num(field("min_doc_freq")?.first())?;
    let num_docs = num(field("num_docs")?.first())?;
    let label = field("fitted_on")?.join("\t");
    let subjects: BTreeSet<String> = field("subjects")?.into_iter().filter(|s| !s.is_empty()).collect();
    let mut entries: Vec<(usize, String, f64)> = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(bad(format!("malformed entry '{line}'")));
        }
        let i = parts[1].parse().map_err(|_| bad(format!("bad index in '{line}'")))?;
        let idf = parts[2].parse().map_err(|_| bad(format!("bad idf in '{line}'")))?;
        entries.push((i, parts[0].to_string(), idf));
    }
    entries.sort_by_key(|e| e.0);
    if entries.iter().enumerate().any(|(k, e)| e.0 != k) {
        return Err(bad("indices are not dense".into()));
    }
    Ok(Vocabulary {
        idf: entries.iter().map(|e| e.2).collect(),
        index: entries.into_iter().map(|(i, g, _)| (g, i)).collect(),
        n_range,
        min_doc_freq,
        num_docs,
        fitted_on: FitTag { label, subjects },
    })
}

/// Filler expressions as token sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillerLexicon {
    entries: Vec<Vec<String>>,
}

impl Default for FillerLexicon {
    fn default() -> Self {
        FillerLexicon::parse("um\nuh\ner\nerm\nlike\nyou know\n")
    }
}

impl FillerLexicon {
    /// One entry per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        FillerLexicon {
            entries: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(tokenize)
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map(|t| FillerLexicon::parse(&t))
            .map_err(|e| Error::io(Module::Linguistic, "load_filler_lexicon", path, e))
    }

    /// Occurrences of any entry in a token stream.
    pub fn count(&self, tokens: &[String]) -> usize {
        (0..tokens.len())
            .map(|i| {
                self.entries
                    .iter()
                    .filter(|e| tokens[i..].starts_with(e))
                    .count()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalStats {
    pub word_count: usize,
    pub type_token_ratio: f64,
    pub mean_word_length_chars: f64,
    /// Absent when no positive duration was supplied.
    pub words_per_second: Option<f64>,
    /// Fillers per 100 words.
    pub filler_rate: f64,
}

impl LexicalStats {
    pub const DIM: usize = 5;

    pub fn to_feature_vector(&self) -> FeatureVector {
        FeatureVector {
            feature_set_id: FeatureSetId::Lexical,
            values: vec![
                self.word_count as f64,
                self.type_token_ratio,
                self.mean_word_length_chars,
                self.words_per_second.unwrap_or(0.0),
                self.filler_rate,
            ],
            empty_speech: false,
        }
    }

    pub fn feature_names() -> Vec<String> {
        ["word_count", "type_token_ratio", "mean_word_length_chars", "words_per_second", "filler_rate"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

pub fn lexical_stats(text: &str, duration_s: f64) -> LexicalStats {
    lexical_stats_with(text, duration_s, &FillerLexicon::default())
}

pub fn lexical_stats_with(text: &str, duration_s: f64, fillers: &FillerLexicon) -> LexicalStats {
    let tokens = tokenize(text);
    let n = tokens.len();
    let types: BTreeSet<&String> = tokens.iter().collect();
    let (ttr, mean_len, filler_rate) = if n == 0 {
        (0.0, 0.0, 0.0)
    } else {
        (
            types.len() as f64 / n as f64,
            tokens.iter().map(|t| t.chars().count()).sum::<usize>() as f64 / n as f64,
            100.0 * fillers.count(&tokens) as f64 / n as f64,
        )
    };
    LexicalStats {
        word_count: n,
        type_token_ratio: ttr,
        mean_word_length_chars: mean_len,
        words_per_second: (duration_s > 0.0).then(|| n as f64 / duration_s),
        filler_rate,
    }
}
