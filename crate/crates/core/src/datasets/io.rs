//! CSV formats.
//!
//! Features: one node per row, comma-separated decimal floats; lines starting
//! with `#` are skipped. Labels (truth or seeds): header `node,class`, then
//! 0-based node index and class id per row.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::{DatasetError, LabeledDataset, Result};
use crate::graph::FeatureMatrix;

pub fn load_features_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    read_features(File::open(path)?)
}

pub(crate) fn read_features<R: Read>(input: R) -> Result<FeatureMatrix> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(input);
    let mut values = Vec::new();
    let mut d = None;
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        if d.is_some_and(|d| d != record.len()) {
            return Err(DatasetError::Parse {
                line,
                message: format!("expected {} columns, found {}", d.unwrap_or(0), record.len()),
            });
        }
        d = Some(record.len());
        for field in record.iter() {
            let x: f64 = field.parse().map_err(|_| DatasetError::Parse {
                line,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !x.is_finite() {
                return Err(DatasetError::NonFiniteValue { line });
            }
            values.push(x);
        }
        n += 1;
    }
    Ok(FeatureMatrix::new(n, d.unwrap_or(0), values)?)
}

/// Writes features with 17 significant digits so that re-reading is exact.
pub fn write_features_csv(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..features.d()).map(|j| format!("x{j}")).collect();
    writeln!(w, "# {}", header.join(","))?;
    for i in 0..features.n() {
        let row: Vec<String> = features.row(i).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a ground-truth file covering every node exactly once and returns
/// the class of each node in node order.
pub fn load_labels_csv(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let pairs = read_label_pairs(File::open(path)?)?;
    let n = pairs.len();
    let mut truth = vec![usize::MAX; n];
    for &(line, node, class) in &pairs {
        if node >= n {
            return Err(DatasetError::Parse {
                line,
                message: format!("node {node} out of range for {n} rows"),
            });
        }
        truth[node] = class;
    }
    Ok(truth)
}

/// Reads a partial labeling (seeds) as `(node, class)` pairs.
pub fn load_seed_labels_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    Ok(read_label_pairs(File::open(path)?)?
        .into_iter()
        .map(|(_, node, class)| (node, class))
        .collect())
}

pub(crate) fn read_label_pairs<R: Read>(input: R) -> Result<Vec<(u64, usize, usize)>> {
    let mut reader = ReaderBuilder::new().has_headers(true).trim(Trim::All).from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["node", "class"] {
        return Err(DatasetError::Parse {
            line: 1,
            message: format!("expected header \"node,class\", found {:?}", headers.as_slice()),
        });
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        let field = |idx: usize, name: &str| -> Result<usize> {
            record[idx].parse().map_err(|_| DatasetError::Parse {
                line,
                message: format!("{name} {:?} is not a non-negative integer", &record[idx]),
            })
        };
        let node = field(0, "node")?;
        let class = field(1, "class")?;
        if !seen.insert(node) {
            return Err(DatasetError::Parse {
                line,
                message: format!("node {node} listed twice"),
            });
        }
        out.push((line, node, class));
    }
    Ok(out)
}

pub fn write_labels_csv(path: impl AsRef<Path>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node,class")?;
    for (node, class) in pairs {
        writeln!(w, "{node},{class}")?;
    }
    w.flush()?;
    Ok(())
}

/// Features plus truth, with matching row counts.
pub fn load_dataset(features: impl AsRef<Path>, truth: impl AsRef<Path>) -> Result<LabeledDataset> {
    let name = features.as_ref().display().to_string();
    let f = load_features_csv(features)?;
    let t = load_labels_csv(truth)?;
    LabeledDataset::new(name, f, t)
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => DatasetError::Parse {
            line,
            message: format!("expected {expected_len} columns, found {len}"),
        },
        other => DatasetError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}
