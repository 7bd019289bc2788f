//! LIBSVM text datasets.
//!
//! ```text
//! +1 3:1.5 7:2   # comment
//! -1 1:0.25
//! ```
//!
//! File indices are 1-based and strictly increasing; they are stored 0-based.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::SparseVector;
use crate::oracle::trial_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: SparseVector,
    /// Always -1 or +1.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Sample>,
    dimension: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Sample>, dimension: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, s) in rows.iter().enumerate() {
            if s.y != 1.0 && s.y != -1.0 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("label {} is not +-1", s.y),
                });
            }
            if s.x.min_dim() > dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: s.x.min_dim(),
                });
            }
        }
        Ok(Dataset { rows, dimension })
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn with_dimension(mut self, dimension: usize) -> Result<Self> {
        let needed = self.rows.iter().map(|s| s.x.min_dim()).max().unwrap_or(0);
        if dimension < needed {
            return Err(Error::DimensionMismatch {
                expected: needed,
                found: dimension,
            });
        }
        self.dimension = dimension;
        Ok(self)
    }

    pub fn stats(&self) -> DatasetStats {
        let nnz: usize = self.rows.iter().map(|s| s.x.nnz()).sum();
        let positives = self.rows.iter().filter(|s| s.y > 0.0).count();
        let max_norm = self
            .rows
            .iter()
            .map(|s| s.x.norm_sq().sqrt())
            .fold(0.0, f64::max);
        DatasetStats {
            m: self.len(),
            dimension: self.dimension,
            nnz,
            positives,
            max_row_norm: max_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DatasetStats {
    pub m: usize,
    pub dimension: usize,
    pub nnz: usize,
    pub positives: usize,
    pub max_row_norm: f64,
}

/// How raw labels map to {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelMap {
    /// Values `<= 0` (or equal to `negative`) become -1, everything else +1.
    Sign { negative: Option<f64> },
    /// `positive` becomes +1, every other value -1.
    OneVsRest { positive: f64 },
}

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap::Sign { negative: None }
    }
}

impl LabelMap {
    /// Binarization used for the multi-class covtype data: class 2 vs rest.
    pub const COVTYPE: LabelMap = LabelMap::OneVsRest { positive: 2.0 };

    pub fn apply(&self, raw: f64) -> f64 {
        match *self {
            LabelMap::Sign { negative } => {
                if raw <= 0.0 || negative == Some(raw) {
                    -1.0
                } else {
                    1.0
                }
            }
            LabelMap::OneVsRest { positive } => {
                if raw == positive {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParseOptions {
    pub labels: LabelMap,
    /// Pins the dimension instead of using `max index + 1`.
    pub dimension: Option<usize>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_line(text: &str, line: usize, labels: &LabelMap) -> Result<Option<Sample>> {
    let body = text.split('#').next().unwrap_or("");
    let mut tokens = body.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let raw: f64 = label_tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad label {label_tok:?}")))?;
    if !raw.is_finite() {
        return Err(parse_err(line, format!("bad label {label_tok:?}")));
    }
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(line, format!("malformed pair {tok:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_err(line, format!("bad index in {tok:?}")))?;
        if idx == 0 {
            return Err(parse_err(line, "indices are 1-based"));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| parse_err(line, format!("non-numeric value in {tok:?}")))?;
        if !val.is_finite() {
            return Err(parse_err(line, format!("non-finite value in {tok:?}")));
        }
        if indices.last().is_some_and(|&last| idx - 1 <= last) {
            return Err(parse_err(line, format!("index {idx} is not increasing")));
        }
        indices.push(idx - 1);
        values.push(val);
    }
    let x = SparseVector::new(indices, values).map_err(|e| parse_err(line, e.to_string()))?;
    Ok(Some(Sample {
        x,
        y: labels.apply(raw),
    }))
}

pub fn parse_libsvm<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Dataset> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(sample) = parse_line(&line, i + 1, &opts.labels)? {
            rows.push(sample);
        }
    }
    let needed = rows.iter().map(|s| s.x.min_dim()).max().unwrap_or(0);
    let ds = Dataset::new(rows, needed)?;
    match opts.dimension {
        Some(d) => ds.with_dimension(d),
        None => Ok(ds),
    }
}

/// Reads a LIBSVM file; a `.gz` extension selects gzip decoding.
pub fn load_libsvm(path: &Path, opts: &ParseOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_libsvm(BufReader::new(reader), opts)
}

pub fn write_libsvm<W: Write>(ds: &Dataset, mut out: W) -> io::Result<()> {
    for s in ds.rows() {
        write!(out, "{}", if s.y > 0.0 { "+1" } else { "-1" })?;
        for (i, v) in s.x.iter() {
            write!(out, " {}:{}", i + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `k` rows drawn uniformly without replacement, kept in file order.
pub fn subsample(ds: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 || k > ds.len() {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: "must lie in [1, m]",
        });
    }
    let mut rng = trial_rng(seed);
    let mut picked = index::sample(&mut rng, ds.len(), k).into_vec();
    picked.sort_unstable();
    let rows = picked.into_iter().map(|i| ds.rows[i].clone()).collect();
    Dataset::new(rows, ds.dimension)
}

/// Group sizes of the binarized Adult attributes (14 groups, 123 features).
pub const A9A_GROUPS: [usize; 14] = [5, 8, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 41];

/// Positive fraction of the A9A training set.
pub const A9A_POSITIVE_FRACTION: f64 = 0.24;

/// Synthetic one-hot dataset: every row activates exactly one binary feature
/// per group, category frequencies are skewed, and labels come from a planted
/// linear score thresholded at the `1 - positive_fraction` quantile, with 10%
/// of labels flipped.
pub fn onehot_surrogate(
    groups: &[usize],
    m: usize,
    positive_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    if m == 0 || groups.is_empty() || groups.contains(&0) {
        return Err(Error::EmptyDataset);
    }
    let mut rng = trial_rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let dimension: usize = groups.iter().sum();
    let planted: Vec<f64> = (0..dimension).map(|_| normal.sample(&mut rng)).collect();

    // Cumulative category weights per group, heavy-tailed so some features are rare.
    let mut offsets = Vec::with_capacity(groups.len());
    let mut cdfs = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for &size in groups {
        let weights: Vec<f64> = (0..size)
            .map(|_| (1.5 * normal.sample(&mut rng)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        cdfs.push(cdf);
        offsets.push(offset);
        offset += size;
    }

    let mut features = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    for _ in 0..m {
        let mut idx = Vec::with_capacity(groups.len());
        for (cdf, &off) in cdfs.iter().zip(&offsets) {
            let u: f64 = rng.random();
            let k = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
            idx.push(off + k);
        }
        let score: f64 =
            idx.iter().map(|&j| planted[j]).sum::<f64>() + 0.5 * normal.sample(&mut rng);
        features.push(idx);
        scores.push(score);
    }
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let cut = ((1.0 - positive_fraction) * m as f64).floor() as usize;
    let threshold = sorted[cut.min(m - 1)];

    let rows = features
        .into_iter()
        .zip(scores)
        .map(|(idx, score)| {
            let mut y = if score >= threshold { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.1 {
                y = -y;
            }
            let values = vec![1.0; idx.len()];
            Ok(Sample {
                x: SparseVector::new(idx, values)?,
                y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(rows, dimension)
}

/// A9A-shaped surrogate: 123 binary features in 14 one-hot groups.
pub fn a9a_surrogate(m: usize, seed: u64) -> Result<Dataset> {
    onehot_surrogate(&A9A_GROUPS, m, A9A_POSITIVE_FRACTION, seed)
}
