//! LibSVM-format classification datasets.
//!
//! Files are line oriented: `<label> <idx>:<val> ...` with 1-based, strictly
//! increasing feature indices. Internally indices are 0-based and labels are
//! always `+1.0` or `-1.0`. Blank lines and lines starting with `#` are
//! skipped.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SscnError};

/// Environment variable naming the directory that holds dataset files.
pub const DATA_DIR_ENV: &str = "SSCN_DATA_DIR";
const DEFAULT_DATA_DIR: &str = "./data";

/// Row-sparse design matrix with ±1 labels.
///
/// A column-major copy is kept alongside the rows so coordinate-restricted
/// derivatives only touch the columns they need.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    n_features: usize,
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
}

/// Summary counts of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub n_features: usize,
    pub n_samples: usize,
    pub nnz: usize,
    /// Fraction of `+1` labels.
    pub label_balance: f64,
}

impl SparseDataset {
    /// Builds a dataset after checking every structural invariant.
    pub fn new(n_features: usize, rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SscnError::EmptyDataset);
        }
        if n_features == 0 {
            return Err(SscnError::InvalidParameter("n_features must be at least 1".into()));
        }
        if rows.len() != labels.len() {
            return Err(SscnError::DimensionMismatch { expected: rows.len(), got: labels.len() });
        }
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(j, v) in row {
                if j >= n_features {
                    return Err(SscnError::Format {
                        line: i + 1,
                        detail: format!("index {} exceeds n_features {}", j + 1, n_features),
                    });
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(SscnError::Format { line: i + 1, detail: format!("index {} repeated or out of order", j + 1) });
                }
                if !v.is_finite() {
                    return Err(SscnError::Parse { line: i + 1, token: format!("{}:{}", j + 1, v) });
                }
                prev = Some(j);
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if y != 1.0 && y != -1.0 {
                return Err(SscnError::Label { line: i + 1, label: y.to_string() });
            }
        }
        let mut columns = vec![Vec::new(); n_features];
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                columns[j].push((i, v));
            }
        }
        Ok(Self { n_features, rows, labels, columns })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Nonzeros of feature column `j` as `(sample, value)` pairs, sample-ordered.
    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn stats(&self) -> DatasetStats {
        let positives = self.labels.iter().filter(|&&y| y > 0.0).count();
        DatasetStats {
            n_features: self.n_features,
            n_samples: self.n_samples(),
            nnz: self.nnz(),
            label_balance: positives as f64 / self.n_samples() as f64,
        }
    }

    /// Serializes back to LibSVM text with 1-based indices and `+1`/`-1` labels.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            out.push_str(if y > 0.0 { "+1" } else { "-1" });
            for &(j, v) in row {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
            out.push('\n');
        }
        out
    }

    /// Random dense-ish binary classification problem used by tests and configs.
    ///
    /// Features are standard normal with probability `density`, labels come from
    /// a hidden linear separator with 10% label noise.
    pub fn synthetic(n_samples: usize, n_features: usize, density: f64, seed: u64) -> Result<Self> {
        if n_samples == 0 || n_features == 0 {
            return Err(SscnError::InvalidParameter("synthetic dataset needs samples and features".into()));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(SscnError::InvalidParameter(format!("density {density} not in (0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<f64> = (0..n_features).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut rows = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let mut row = Vec::new();
            for j in 0..n_features {
                if density >= 1.0 || rng.random::<f64>() < density {
                    row.push((j, rng.sample::<f64, _>(StandardNormal) / (n_features as f64 * density).sqrt()));
                }
            }
            let margin: f64 = row.iter().map(|&(j, v)| v * truth[j]).sum();
            let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.1 {
                y = -y;
            }
            rows.push(row);
            labels.push(y);
        }
        Self::new(n_features, rows, labels)
    }
}

/// Parses LibSVM text. `n_features_hint` widens the feature dimension when the
/// file's largest index is smaller than the known dataset dimension.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features_hint: Option<usize>) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    let mut remapped_zero = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| SscnError::Parse { line: line_no, token: label_tok.to_string() })?;
        let y = if label == 1.0 {
            1.0
        } else if label == -1.0 {
            -1.0
        } else if label == 0.0 {
            remapped_zero = true;
            -1.0
        } else {
            return Err(SscnError::Label { line: line_no, label: label_tok.to_string() });
        };

        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| SscnError::Parse { line: line_no, token: tok.to_string() })?;
            let idx: usize = idx.parse().map_err(|_| SscnError::Parse { line: line_no, token: tok.to_string() })?;
            let val: f64 = val.parse().map_err(|_| SscnError::Parse { line: line_no, token: tok.to_string() })?;
            if !val.is_finite() {
                return Err(SscnError::Parse { line: line_no, token: tok.to_string() });
            }
            if idx == 0 {
                return Err(SscnError::Format { line: line_no, detail: "index 0 in a 1-based file".into() });
            }
            if idx <= prev {
                return Err(SscnError::Format { line: line_no, detail: format!("index {idx} after {prev}") });
            }
            prev = idx;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(y);
    }

    if remapped_zero {
        log::warn!("label 0 found; remapped to -1");
    }
    let n_features = max_index.max(n_features_hint.unwrap_or(0)).max(1);
    SparseDataset::new(n_features, rows, labels)
}

pub fn parse_libsvm_str(text: &str, n_features_hint: Option<usize>) -> Result<SparseDataset> {
    parse_libsvm(text.as_bytes(), n_features_hint)
}

/// Directory from `SSCN_DATA_DIR`, defaulting to `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

/// Resolves a dataset reference: absolute or existing relative paths are used
/// as is, anything else is looked up under [`data_dir`].
pub fn resolve_dataset_path(name: &str) -> PathBuf {
    let direct = Path::new(name);
    if direct.is_absolute() || direct.exists() {
        direct.to_path_buf()
    } else {
        data_dir().join(name)
    }
}

pub fn load_libsvm(path: &Path, n_features_hint: Option<usize>) -> Result<SparseDataset> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file), n_features_hint)
}
