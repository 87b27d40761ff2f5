//! LibSVM text ingestion, canonical serialization and seeded splits.

use crate::error::{Error, Result};
use crate::objectives::LogisticL2;
use crate::rng::RngStream;
use rand::seq::SliceRandom;
use std::io::{BufRead, Write};

/// Dense binary-classification data with labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    /// Row-major `n × d`.
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(n: usize, d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        Ok(Self { n, d, features, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// Pads every row with zero columns up to `d`. Never shrinks.
    pub fn with_dim(self, d: usize) -> Self {
        if d <= self.d {
            return self;
        }
        let mut features = Vec::with_capacity(self.n * d);
        for i in 0..self.n {
            features.extend_from_slice(self.row(i));
            features.resize((i + 1) * d, 0.0);
        }
        Self {
            n: self.n,
            d,
            features,
            labels: self.labels,
        }
    }

    /// Rows `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            n: indices.len(),
            d: self.d,
            features,
            labels,
        }
    }

    /// Largest absolute value of each column; 1 for all-zero columns.
    pub fn column_max_abs(&self) -> Vec<f64> {
        let mut scale = vec![0.0f64; self.d];
        for i in 0..self.n {
            for (s, v) in scale.iter_mut().zip(self.row(i)) {
                *s = s.max(v.abs());
            }
        }
        scale.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect()
    }

    /// Divides each column by `scale`, e.g. training-set statistics.
    pub fn scaled_columns(&self, scale: &[f64]) -> Result<Self> {
        if scale.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: scale.len(),
            });
        }
        let mut features = self.features.clone();
        for row in features.chunks_mut(self.d.max(1)) {
            for (v, s) in row.iter_mut().zip(scale) {
                *v /= s;
            }
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }

    pub fn to_logistic(&self, lambda: f64) -> Result<LogisticL2> {
        LogisticL2::new(self.n, self.d, self.features.clone(), self.labels.clone(), lambda)
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_label(token: &str, line: usize) -> Result<f64> {
    let value: f64 = token
        .parse()
        .map_err(|_| parse_error(line, format!("label '{token}' is not a number")))?;
    if value == 1.0 {
        Ok(1.0)
    } else if value == -1.0 || value == 0.0 {
        Ok(-1.0)
    } else {
        Err(parse_error(line, format!("label '{token}' is not binary")))
    }
}

/// Parses LibSVM text (`label idx:val …`, 1-based strictly increasing
/// indices). `#` starts a comment; blank lines are skipped; labels `0` map
/// to `−1`. The dimension is the largest index seen, or `min_dim` if larger.
pub fn parse_libsvm_with_dim<R: BufRead>(reader: R, min_dim: usize) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut d = min_dim;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        labels.push(parse_label(label, line_no)?);
        let mut row = Vec::new();
        let mut last = 0usize;
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| parse_error(line_no, format!("token '{token}' is not index:value")))?;
            let idx: i64 = idx
                .parse()
                .map_err(|_| parse_error(line_no, format!("index '{idx}' is not an integer")))?;
            if idx <= 0 {
                return Err(parse_error(line_no, format!("index {idx} must be positive")));
            }
            let idx = idx as usize;
            if idx <= last {
                return Err(parse_error(line_no, format!("index {idx} does not increase")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(line_no, format!("value '{val}' is not a number")))?;
            if !val.is_finite() {
                return Err(parse_error(line_no, format!("value '{val}' is not finite")));
            }
            last = idx;
            row.push((idx, val));
        }
        d = d.max(last);
        rows.push(row);
    }
    let n = rows.len();
    let mut features = vec![0.0; n * d];
    for (i, row) in rows.iter().enumerate() {
        for &(idx, val) in row {
            features[i * d + idx - 1] = val;
        }
    }
    Dataset::new(n, d, features, labels)
}

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    parse_libsvm_with_dim(reader, 0)
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

pub fn load_libsvm(path: &std::path::Path, min_dim: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_libsvm_with_dim(std::io::BufReader::new(file), min_dim)
}

/// Canonical form: `+1`/`-1` labels and the nonzero entries as `i:v`.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for i in 0..ds.n {
        out.write_all(if ds.labels[i] > 0.0 { b"+1" } else { b"-1" })?;
        for (j, v) in ds.row(i).iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_libsvm_string(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    write_libsvm(ds, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Seeded shuffle, then the first `floor(n·fraction)` rows train.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = RngStream::new(seed);
    order.shuffle(rng.inner_mut());
    let exact = n as f64 * train_fraction;
    // absorb representation error such as 0.7 * 10 = 6.999…
    let n_train = ((exact + 1e-9 * exact.max(1.0)).floor() as usize).min(n);
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n, train_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}
