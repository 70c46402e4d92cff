//! Compressed sparse column storage.

/// Column-major sparse matrix. Row indices within a column are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Borrowed view of one sparse column.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub rows: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> Column<'a> {
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.rows.iter().copied().zip(self.values.iter().copied())
    }

    /// Inner product with a dense vector.
    #[inline]
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(self.values)
            .map(|(&i, &v)| v * dense[i])
            .sum()
    }

    /// `out += alpha * column`.
    #[inline]
    pub fn axpy(&self, alpha: f64, out: &mut [f64]) {
        for (&i, &v) in self.rows.iter().zip(self.values) {
            out[i] += alpha * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self, nrows: usize) -> Vec<f64> {
        let mut out = vec![0.0; nrows];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

impl CscMatrix {
    /// Builds from raw parts. Panics if the structure is inconsistent; callers
    /// inside the crate construct these from validated input.
    pub(crate) fn from_parts(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(col_ptr.len(), ncols + 1);
        assert_eq!(row_idx.len(), values.len());
        assert_eq!(*col_ptr.last().unwrap(), values.len());
        debug_assert!(row_idx.iter().all(|&i| i < nrows));
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Builds from `(row, col, value)` triplets. Explicit zeros are dropped;
    /// duplicate coordinates are the caller's responsibility to reject.
    pub(crate) fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(_, j, v) in triplets {
            if v != 0.0 {
                counts[j + 1] += 1;
            }
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let nnz = col_ptr[ncols];
        let mut next = counts;
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        for &(i, j, v) in triplets {
            if v != 0.0 {
                let k = next[j];
                row_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        // triplets may arrive in any row order
        for j in 0..ncols {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if row_idx[lo..hi].windows(2).any(|w| w[0] > w[1]) {
                let mut pairs: Vec<(usize, f64)> = row_idx[lo..hi]
                    .iter()
                    .copied()
                    .zip(values[lo..hi].iter().copied())
                    .collect();
                pairs.sort_by_key(|&(i, _)| i);
                for (k, (i, v)) in pairs.into_iter().enumerate() {
                    row_idx[lo + k] = i;
                    values[lo + k] = v;
                }
            }
        }
        CscMatrix::from_parts(nrows, ncols, col_ptr, row_idx, values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn col(&self, j: usize) -> Column<'_> {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        Column {
            rows: &self.row_idx[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    /// `Aᵀ v` for a dense `v` of length `nrows`.
    pub fn t_dot(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.nrows);
        (0..self.ncols).map(|j| self.col(j).dot(v)).collect()
    }

    /// Row-major listing `rows[i] = [(col, value), ...]` with ascending columns.
    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.nrows];
        for j in 0..self.ncols {
            for (i, v) in self.col(j).iter() {
                rows[i].push((j, v));
            }
        }
        rows
    }

    /// Keeps the listed rows, renumbered in the given order.
    pub(crate) fn select_rows(&self, keep: &[usize]) -> CscMatrix {
        let mut new_index = vec![usize::MAX; self.nrows];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut triplets = Vec::new();
        for j in 0..self.ncols {
            for (i, v) in self.col(j).iter() {
                if new_index[i] != usize::MAX {
                    triplets.push((new_index[i], j, v));
                }
            }
        }
        CscMatrix::from_triplets(keep.len(), self.ncols, &triplets)
    }
}
