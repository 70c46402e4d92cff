//! Per-feature statistics gathered in one pass over the columns.

use super::Dataset;
use crate::dual::DualPoint;
use crate::error::{Error, Result};

/// A column whose projection norm is at most this fraction of its own norm is
/// treated as a multiple of `b`.
pub const ZERO_PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureStats {
    /// `⟨x̄^j, b⟩`
    pub dot_b: f64,
    /// `‖x̄^j‖²`
    pub norm_sq: f64,
    /// `‖P x̄^j‖`
    pub proj_norm: f64,
    /// `⟨θ0, x̄^j⟩`
    pub dot_theta0: f64,
    /// `⟨P x̄^j, P x̄*⟩`
    pub dot_proj_xstar: f64,
    /// `‖P x̄^j‖²‖P x̄*‖² - ⟨P x̄^j, P x̄*⟩²`, nonnegative.
    pub perp_xstar: f64,
}

impl FeatureStats {
    pub fn is_zero_projection(&self) -> bool {
        self.proj_norm <= ZERO_PROJECTION_TOL * self.norm_sq.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePrecompute {
    pub stats: Vec<FeatureStats>,
    pub xstar_index: usize,
    pub xstar_sign: f64,
    /// `‖P x̄*‖`
    pub proj_xstar_norm: f64,
}

impl FeaturePrecompute {
    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn get(&self, j: usize) -> &FeatureStats {
        &self.stats[j]
    }
}

/// Columns whose squared sine with `P x̄*` falls below this get their
/// `perp_xstar` recomputed from the residual vector.
const NEAR_COLLINEAR: f64 = 1e-4;

/// Computes [`FeatureStats`] for every feature, one column at a time.
///
/// `‖P x̄^j‖²` is accumulated as `Σ (x̄_ij - μ b_i)²` rather than
/// `‖x̄^j‖² - ⟨x̄^j, b⟩²/m`, which cancels badly for columns nearly parallel
/// to `b`. The same cancellation hits `perp_xstar` for columns nearly
/// parallel to `P x̄*`; those few get a dense `O(m)` residual pass.
pub fn precompute(
    ds: &Dataset,
    theta0: &DualPoint,
    xstar_index: usize,
    xstar_sign: f64,
) -> Result<FeaturePrecompute> {
    let m = ds.m();
    if theta0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: theta0.len(),
        });
    }
    if xstar_index >= ds.p() {
        return Err(Error::InvalidParameter(format!(
            "x* index {xstar_index} out of range for {} features",
            ds.p()
        )));
    }
    if xstar_sign != 1.0 && xstar_sign != -1.0 {
        return Err(Error::InvalidParameter(format!(
            "x* sign {xstar_sign} is not ±1"
        )));
    }
    let b = ds.labels();
    let theta = theta0.as_slice();
    let mf = m as f64;

    let mut proj_xstar = ds.column(xstar_index).to_dense(m);
    let mu = proj_xstar.iter().zip(b).map(|(x, b)| x * b).sum::<f64>() / mf;
    for (v, &bi) in proj_xstar.iter_mut().zip(b) {
        *v = xstar_sign * (*v - mu * bi);
    }
    let proj_xstar_norm = proj_xstar.iter().map(|v| v * v).sum::<f64>().sqrt();

    let stats = (0..ds.p())
        .map(|j| {
            let col = ds.column(j);
            let (mut dot_b, mut norm_sq, mut dot_theta0, mut dot_proj_xstar) = (0.0, 0.0, 0.0, 0.0);
            for (i, v) in col.iter() {
                dot_b += v * b[i];
                norm_sq += v * v;
                dot_theta0 += v * theta[i];
                dot_proj_xstar += v * proj_xstar[i];
            }
            let mu = dot_b / mf;
            let mut proj_sq = (m - col.nnz()) as f64 * mu * mu;
            for (i, v) in col.iter() {
                let r = v - mu * b[i];
                proj_sq += r * r;
            }
            let s = proj_xstar_norm * proj_xstar_norm;
            let mut perp_xstar = (proj_sq * s - dot_proj_xstar * dot_proj_xstar).max(0.0);
            if s > 0.0 && perp_xstar <= NEAR_COLLINEAR * proj_sq * s {
                let alpha = dot_proj_xstar / s;
                let mut resid: Vec<f64> = b
                    .iter()
                    .zip(&proj_xstar)
                    .map(|(bi, px)| -mu * bi - alpha * px)
                    .collect();
                for (i, v) in col.iter() {
                    resid[i] += v;
                }
                perp_xstar = s * resid.iter().map(|r| r * r).sum::<f64>();
            }
            FeatureStats {
                dot_b,
                norm_sq,
                proj_norm: proj_sq.sqrt(),
                dot_theta0,
                dot_proj_xstar,
                perp_xstar,
            }
        })
        .collect();

    Ok(FeaturePrecompute {
        stats,
        xstar_index,
        xstar_sign,
        proj_xstar_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half(m: usize) -> DualPoint {
        DualPoint::new(vec![0.5; m]).unwrap()
    }

    #[test]
    fn column_equal_to_b_projects_to_zero() {
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let ds = Dataset::from_folded_columns(b.clone(), &[b.clone(), vec![1.0, 0.0, 0.0, 0.0]])
            .unwrap();
        let pre = precompute(&ds, &half(4), 1, 1.0).unwrap();
        assert_eq!(pre.get(0).proj_norm, 0.0);
        assert!(pre.get(0).is_zero_projection());
        assert!(!pre.get(1).is_zero_projection());
    }

    #[test]
    fn column_orthogonal_to_b_is_unchanged() {
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let ds = Dataset::from_folded_columns(b, &[vec![1.0; 4]]).unwrap();
        let pre = precompute(&ds, &half(4), 0, 1.0).unwrap();
        assert_eq!(pre.get(0).dot_b, 0.0);
        assert_eq!(pre.get(0).proj_norm, 2.0);
        assert_eq!(pre.proj_xstar_norm, 2.0);
        assert_eq!(pre.get(0).dot_proj_xstar, 4.0);
        assert_eq!(pre.get(0).dot_theta0, 2.0);
    }

    #[test]
    fn dimension_checks() {
        let ds = Dataset::from_folded_columns(vec![1.0, -1.0], &[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            precompute(&ds, &half(3), 0, 1.0),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
        assert!(precompute(&ds, &half(2), 1, 1.0).is_err());
        assert!(precompute(&ds, &half(2), 0, 0.5).is_err());
    }
}
