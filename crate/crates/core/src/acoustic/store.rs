//! Delimited on-disk feature matrices.
//!
//! ```text
//! # cognopipe-features feature_set_id=EgemapsLike88 version=1 dim=88
//! subject_id,task,empty_speech,f0_hz__mean,...
//! S001,ShortTerm,0,121.5,...
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::FeatureSetId;
use crate::corpus::Task;
use crate::error::{Error, Module, Result};

const MAGIC: &str = "# cognopipe-features";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub subject_id: String,
    pub task: Task,
    pub empty_speech: bool,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_set_id: FeatureSetId,
    pub version: u32,
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn dim(&self) -> usize {
        self.names.len()
    }
}

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::invalid(Module::Acoustic, "read_feature_matrix", path.display().to_string(), message)
}

pub fn write_feature_matrix(path: impl AsRef<Path>, m: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::io(Module::Acoustic, "write_feature_matrix", path, e);
    if let Some(row) = m.rows.iter().find(|r| r.values.len() != m.dim()) {
        return Err(Error::invalid(
            Module::Acoustic,
            "write_feature_matrix",
            format!("{}/{}", row.subject_id, row.task),
            format!("row has {} values, header declares {}", row.values.len(), m.dim()),
        ));
    }
    let mut out = fs::File::create(path).map_err(io)?;
    writeln!(
        out,
        "{MAGIC} feature_set_id={} version={} dim={}",
        m.feature_set_id,
        m.version,
        m.dim()
    )
    .map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let map_csv = |e: csv::Error| Error::invalid(Module::Acoustic, "write_feature_matrix", path.display().to_string(), e.to_string());
    let header: Vec<&str> = ["subject_id", "task", "empty_speech"]
        .into_iter()
        .chain(m.names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(map_csv)?;
    for r in &m.rows {
        let mut rec = vec![
            r.subject_id.clone(),
            r.task.to_string(),
            u8::from(r.empty_speech).to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(map_csv)?;
    }
    w.flush().map_err(io)
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(Module::Acoustic, "read_feature_matrix", path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| Error::io(Module::Acoustic, "read_feature_matrix", path, e))?;
    let meta = first
        .trim_end()
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad(path, "missing feature-matrix header line"))?;
    let (mut id, mut version, mut dim) = (None, None, None);
    for kv in meta.split_whitespace() {
        match kv.split_once('=') {
            Some(("feature_set_id", v)) => id = Some(v.parse::<FeatureSetId>()?),
            Some(("version", v)) => version = v.parse::<u32>().ok(),
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            _ => return Err(bad(path, format!("unexpected header field '{kv}'"))),
        }
    }
    let (id, version, dim) = match (id, version, dim) {
        (Some(i), Some(v), Some(d)) => (i, v, d),
        _ => return Err(bad(path, "header needs feature_set_id, version and dim")),
    };
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers().map_err(|e| bad(path, e.to_string()))?.clone();
    if headers.len() != dim + 3 {
        return Err(bad(path, format!("header declares dim {dim} but has {} feature columns", headers.len().saturating_sub(3))));
    }
    let names = headers.iter().skip(3).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let rec = rec.map_err(|e| bad(path, e.to_string()))?;
        let parse_err = |m: String| bad(path, format!("row {}: {m}", i + 1));
        let values = rec
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|e| parse_err(format!("{v}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            subject_id: rec[0].to_string(),
            task: rec[1].parse::<Task>()?,
            empty_speech: &rec[2] == "1",
            values,
        });
    }
    Ok(FeatureMatrix {
        feature_set_id: id,
        version,
        names,
        rows,
    })
}
