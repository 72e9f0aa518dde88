//! Dataset ingestion, feature normalization, and assignment of data indices
//! to leaf workers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One instance vector, stored as a column.
#[derive(Clone, Debug)]
pub enum Column {
    Dense(Vec<f64>),
    /// 0-based (row, value) pairs, sorted by row.
    Sparse(Vec<(u32, f64)>),
}

impl Column {
    pub fn dot(&self, w: &[f64]) -> f64 {
        match self {
            Column::Dense(v) => v.iter().zip(w).map(|(a, b)| a * b).sum(),
            Column::Sparse(e) => e.iter().map(|&(i, v)| v * w[i as usize]).sum(),
        }
    }

    /// `w += s * x`
    pub fn axpy(&self, s: f64, w: &mut [f64]) {
        match self {
            Column::Dense(v) => {
                for (wi, xi) in w.iter_mut().zip(v) {
                    *wi += s * xi;
                }
            }
            Column::Sparse(e) => {
                for &(i, v) in e {
                    w[i as usize] += s * v;
                }
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Column::Dense(v) => v.iter().map(|a| a * a).sum(),
            Column::Sparse(e) => e.iter().map(|&(_, v)| v * v).sum(),
        }
    }

    fn scale(&mut self, s: f64) {
        match self {
            Column::Dense(v) => v.iter_mut().for_each(|a| *a *= s),
            Column::Sparse(e) => e.iter_mut().for_each(|(_, v)| *v *= s),
        }
    }
}

/// Column-wise feature matrix plus labels. Column `i` is the unscaled
/// instance `x_i`; the `1/(lambda m)` scaling of the dual data matrix is
/// applied inside the engine operations.
#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<Column>,
    labels: Vec<f64>,
    dim: usize,
    norms_sq: Vec<f64>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if columns.is_empty() || dim == 0 {
            return Err(Error::Config("dataset must have m >= 1 and d >= 1".into()));
        }
        if columns.len() != labels.len() {
            return Err(Error::Config(format!(
                "labels length {} != number of instances {}",
                labels.len(),
                columns.len()
            )));
        }
        let norms_sq = columns.iter().map(Column::norm_sq).collect();
        Ok(Dataset {
            columns,
            labels,
            dim,
            norms_sq,
        })
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn d(&self) -> usize {
        self.dim
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn dot(&self, i: usize, w: &[f64]) -> f64 {
        self.columns[i].dot(w)
    }

    /// `w += s * x_i`
    pub fn axpy(&self, i: usize, s: f64, w: &mut [f64]) {
        self.columns[i].axpy(s, w);
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms_sq[i]
    }

    pub fn max_column_norm(&self) -> f64 {
        self.norms_sq.iter().cloned().fold(0.0, f64::max).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Scale every nonzero column to unit norm.
    PerInstanceUnit,
    /// Scale only columns with norm > 1 down to unit norm.
    CapAtOne,
}

/// Rescale columns so that `||x_i||_2 <= 1` for all i. Zero columns are left
/// unchanged.
pub fn normalize(mut ds: Dataset, mode: NormalizeMode) -> Dataset {
    for (col, nsq) in ds.columns.iter_mut().zip(ds.norms_sq.iter_mut()) {
        let n = nsq.sqrt();
        let rescale = match mode {
            NormalizeMode::PerInstanceUnit => n > 0.0 && (n - 1.0).abs() > 0.0,
            NormalizeMode::CapAtOne => n > 1.0,
        };
        if rescale {
            col.scale(1.0 / n);
            *nsq = col.norm_sq();
        }
    }
    ds
}

/// Load a delimited dense file: one instance per row, `label_column` 0-based.
pub fn load_dense<P: AsRef<Path>>(
    path: P,
    delimiter: char,
    label_column: usize,
    has_header: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let file = File::open(path)?;
    let reader = BufReader::new(file);

    let mut columns = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 && has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delimiter).collect();
        match width {
            None => width = Some(fields.len()),
            Some(wd) if wd != fields.len() => {
                return Err(Error::Parse {
                    path: pstr,
                    line: lineno + 1,
                    msg: format!("ragged row: expected {wd} fields, got {}", fields.len()),
                })
            }
            _ => {}
        }
        if label_column >= fields.len() {
            return Err(Error::Parse {
                path: pstr,
                line: lineno + 1,
                msg: format!(
                    "label column {label_column} out of range for {} fields",
                    fields.len()
                ),
            });
        }
        let mut feats = Vec::with_capacity(fields.len() - 1);
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                path: pstr.clone(),
                line: lineno + 1,
                msg: format!("malformed number {f:?}"),
            })?;
            if j == label_column {
                labels.push(v);
            } else {
                feats.push(v);
            }
        }
        columns.push(Column::Dense(feats));
    }
    let dim = match width {
        None | Some(0) | Some(1) => {
            return Err(Error::Parse {
                path: pstr,
                line: 0,
                msg: "file has no feature data".into(),
            })
        }
        Some(wd) => wd - 1,
    };
    Dataset::new(columns, labels, dim)
}

/// Load a sparse "label idx:val idx:val ..." file with 1-based feature
/// indices. Raw label tokens are remapped to {-1, +1} via `label_map`.
pub fn load_libsvm<P: AsRef<Path>>(path: P, label_map: &BTreeMap<String, f64>) -> Result<Dataset> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let file = File::open(path)?;
    let reader = BufReader::new(file);

    let mut columns = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let raw_label = parts.next().unwrap();
        let y = *label_map
            .get(raw_label)
            .ok_or_else(|| Error::LabelMap(raw_label.to_string()))?;
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for tok in parts {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                path: pstr.clone(),
                line: lineno + 1,
                msg: format!("expected idx:val, got {tok:?}"),
            })?;
            let idx: u32 = idx.parse().map_err(|_| Error::Parse {
                path: pstr.clone(),
                line: lineno + 1,
                msg: format!("malformed feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    path: pstr.clone(),
                    line: lineno + 1,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                path: pstr.clone(),
                line: lineno + 1,
                msg: format!("malformed feature value {val:?}"),
            })?;
            if entries.iter().any(|&(i, _)| i == idx - 1) {
                return Err(Error::Parse {
                    path: pstr.clone(),
                    line: lineno + 1,
                    msg: format!("duplicate feature index {idx}"),
                });
            }
            entries.push((idx - 1, val));
            dim = dim.max(idx as usize);
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        columns.push(Column::Sparse(entries));
        labels.push(y);
    }
    Dataset::new(columns, labels, dim)
}

/// Assignment of data indices to leaf nodes: the index sets `[Q;k]`.
#[derive(Clone, Debug, Default)]
pub struct Partition {
    pub assignment: BTreeMap<usize, Vec<usize>>,
}

impl Partition {
    pub fn leaf_indices(&self, leaf: usize) -> Option<&[usize]> {
        self.assignment.get(&leaf).map(Vec::as_slice)
    }

    pub fn total(&self) -> usize {
        self.assignment.values().map(Vec::len).sum()
    }
}

/// Shuffle `0..m` with a seeded RNG, then split contiguously. Every leaf but
/// the last gets `floor(fraction * m)` indices; the last absorbs the
/// remainder. Each leaf's list is sorted.
pub fn partition_by_fractions(
    m: usize,
    fractions: &[f64],
    leaf_ids: &[usize],
    seed: u64,
) -> Result<Partition> {
    if fractions.is_empty() || fractions.len() != leaf_ids.len() {
        return Err(Error::Config(format!(
            "need one fraction per leaf: {} fractions, {} leaves",
            fractions.len(),
            leaf_ids.len()
        )));
    }
    if fractions.iter().any(|&f| f <= 0.0) {
        return Err(Error::Config("fractions must be positive".into()));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("fractions must sum to 1, got {sum}")));
    }
    if m < fractions.len() {
        return Err(Error::Config(format!(
            "cannot split {m} points across {} leaves",
            fractions.len()
        )));
    }

    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut assignment = BTreeMap::new();
    let mut start = 0usize;
    for (k, (&f, &leaf)) in fractions.iter().zip(leaf_ids).enumerate() {
        let size = if k + 1 == fractions.len() {
            m - start
        } else {
            (f * m as f64).floor() as usize
        };
        let mut idx: Vec<usize> = order[start..start + size].to_vec();
        idx.sort_unstable();
        assignment.insert(leaf, idx);
        start += size;
    }
    Ok(Partition { assignment })
}
