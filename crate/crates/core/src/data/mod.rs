//! Sparse binary classification data.
//!
//! A [`Dataset`] stores the label-folded design matrix `X̄` whose `i`-th row is
//! `b_i · x_i`, column-major, so every per-feature reduction the screening
//! rule needs is a single pass over one column.

mod csc;
mod precompute;
pub mod svmlight;
pub mod synth;

use std::sync::OnceLock;

pub use csc::{Column, CscMatrix};
pub use precompute::{precompute, FeaturePrecompute, FeatureStats, ZERO_PROJECTION_TOL};
pub use svmlight::{load_svmlight, load_svmlight_with_dim, parse_svmlight, write_svmlight};
pub use synth::{synthesize, SynthSpec};

use crate::error::{Error, Result};

/// Immutable sparse classification data with `±1` labels.
#[derive(Debug)]
pub struct Dataset {
    labels: Vec<f64>,
    xbar: CscMatrix,
    m_plus: usize,
    m_minus: usize,
    dot_b: OnceLock<Vec<f64>>,
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        Dataset {
            labels: self.labels.clone(),
            xbar: self.xbar.clone(),
            m_plus: self.m_plus,
            m_minus: self.m_minus,
            dot_b: OnceLock::new(),
        }
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.xbar == other.xbar
    }
}

impl Dataset {
    /// Builds a dataset from labels and the raw (unfolded) design matrix.
    pub fn new(labels: Vec<f64>, raw: CscMatrix) -> Result<Self> {
        if labels.len() != raw.nrows() {
            return Err(Error::DimensionMismatch {
                expected: raw.nrows(),
                got: labels.len(),
            });
        }
        let mut xbar = raw;
        fold_labels(&labels, &mut xbar);
        Self::from_folded(labels, xbar)
    }

    /// Builds a dataset whose matrix is already label-folded.
    pub fn from_folded(labels: Vec<f64>, xbar: CscMatrix) -> Result<Self> {
        if labels.len() != xbar.nrows() {
            return Err(Error::DimensionMismatch {
                expected: xbar.nrows(),
                got: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} is not +1 or -1"
            )));
        }
        if xbar.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "design matrix has non-finite entries".into(),
            ));
        }
        let m_plus = labels.iter().filter(|&&b| b > 0.0).count();
        let m_minus = labels.len() - m_plus;
        if m_plus == 0 || m_minus == 0 {
            return Err(Error::SingleClass { m_plus, m_minus });
        }
        Ok(Dataset {
            labels,
            xbar,
            m_plus,
            m_minus,
            dot_b: OnceLock::new(),
        })
    }

    /// Builds from dense rows of the raw matrix. Intended for small fixtures.
    pub fn from_dense(labels: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            triplets.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
        }
        Self::new(labels, CscMatrix::from_triplets(rows.len(), p, &triplets))
    }

    /// Builds from dense columns of the folded matrix `X̄`.
    pub fn from_folded_columns(labels: Vec<f64>, columns: &[Vec<f64>]) -> Result<Self> {
        let m = labels.len();
        let mut triplets = Vec::new();
        for (j, col) in columns.iter().enumerate() {
            if col.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: col.len(),
                });
            }
            triplets.extend(col.iter().enumerate().map(|(i, &v)| (i, j, v)));
        }
        Self::from_folded(
            labels,
            CscMatrix::from_triplets(m, columns.len(), &triplets),
        )
    }

    /// Returns a copy with one more folded column appended.
    pub fn with_folded_column(&self, column: &[f64]) -> Result<Self> {
        let m = self.m();
        if column.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: column.len(),
            });
        }
        let p = self.p();
        let mut triplets: Vec<(usize, usize, f64)> = (0..p)
            .flat_map(|j| self.column(j).iter().map(move |(i, v)| (i, j, v)))
            .collect();
        triplets.extend(column.iter().enumerate().map(|(i, &v)| (i, p, v)));
        Self::from_folded(
            self.labels.clone(),
            CscMatrix::from_triplets(m, p + 1, &triplets),
        )
    }

    /// Sample count.
    pub fn m(&self) -> usize {
        self.labels.len()
    }

    /// Feature count.
    pub fn p(&self) -> usize {
        self.xbar.ncols()
    }

    /// Labels `b` as `±1.0`.
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn m_plus(&self) -> usize {
        self.m_plus
    }

    pub fn m_minus(&self) -> usize {
        self.m_minus
    }

    pub fn nnz(&self) -> usize {
        self.xbar.nnz()
    }

    /// The folded matrix `X̄`.
    pub fn xbar(&self) -> &CscMatrix {
        &self.xbar
    }

    /// Column `x̄^j` of the folded matrix.
    #[inline]
    pub fn column(&self, j: usize) -> Column<'_> {
        self.xbar.col(j)
    }

    /// `X̄ᵀ v`.
    pub fn xbar_t_dot(&self, v: &[f64]) -> Vec<f64> {
        self.xbar.t_dot(v)
    }

    /// `⟨x̄^j, b⟩` for every feature, computed once and cached.
    pub fn column_dot_b(&self) -> &[f64] {
        self.dot_b.get_or_init(|| self.xbar.t_dot(&self.labels))
    }

    /// Keeps the listed samples. Fails if a class disappears.
    pub fn select_rows(&self, keep: &[usize]) -> Result<Self> {
        let labels = keep.iter().map(|&i| self.labels[i]).collect();
        Self::from_folded(labels, self.xbar.select_rows(keep))
    }

    /// The raw (unfolded) matrix `X`.
    pub fn raw_matrix(&self) -> CscMatrix {
        let mut raw = self.xbar.clone();
        fold_labels(&self.labels, &mut raw);
        raw
    }
}

/// Multiplies row `i` by `b_i`; an involution since `b_i² = 1`.
fn fold_labels(labels: &[f64], matrix: &mut CscMatrix) {
    let rows = matrix.row_indices().to_vec();
    for (v, i) in matrix.values_mut().iter_mut().zip(rows) {
        *v *= labels[i];
    }
}
