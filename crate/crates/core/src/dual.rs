//! Dual problem quantities: objective `g`, its gradient, `λ_max`, the
//! projection `P` onto `b⊥`, the ball radius, and the frozen screening
//! geometry at a reference `λ0`.
//!
//! The dual is
//!
//! ```text
//! min g(θ) = (1/m) Σ f(θ_i),   f(y) = y ln y + (1-y) ln(1-y)
//! s.t. ‖X̄ᵀθ‖∞ ≤ mλ,  ⟨θ, b⟩ = 0,  θ ∈ (0, 1)^m
//! ```

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Relative tolerance for membership in the active set `I_{λ0}`.
pub const ACTIVE_SET_TOL: f64 = 1e-7;

/// A point with every coordinate strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DualPoint {
    theta: Vec<f64>,
}

impl DualPoint {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = theta
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0 && v < 1.0))
        {
            return Err(Error::InfeasibleDual(format!(
                "theta[{i}] = {v} is outside the open interval (0, 1)"
            )));
        }
        Ok(DualPoint { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.theta
    }
}

impl TryFrom<Vec<f64>> for DualPoint {
    type Error = Error;

    fn try_from(theta: Vec<f64>) -> Result<Self> {
        DualPoint::new(theta)
    }
}

impl From<DualPoint> for Vec<f64> {
    fn from(p: DualPoint) -> Vec<f64> {
        p.theta
    }
}

/// `f(y) = y ln y + (1-y) ln(1-y)`.
#[inline]
pub(crate) fn neg_entropy(y: f64) -> f64 {
    y * y.ln() + (1.0 - y) * (-y).ln_1p()
}

/// `f'(y) = ln(y / (1-y))`.
#[inline]
pub(crate) fn logit(y: f64) -> f64 {
    y.ln() - (-y).ln_1p()
}

/// `g` on a raw slice; entries must lie in `(0, 1)`.
pub(crate) fn objective(theta: &[f64]) -> f64 {
    theta.iter().map(|&y| neg_entropy(y)).sum::<f64>() / theta.len() as f64
}

/// `g(θ)`, which lies in `[-ln 2, 0)`.
pub fn dual_objective(theta: &DualPoint) -> f64 {
    objective(theta.as_slice())
}

/// `∇g(θ)_i = (1/m) ln(θ_i / (1 - θ_i))`.
pub fn dual_gradient(theta: &DualPoint) -> Vec<f64> {
    let m = theta.len() as f64;
    theta.as_slice().iter().map(|&y| logit(y) / m).collect()
}

/// `P v = v - (⟨v, b⟩ / m) b`.
pub fn project_complement_b(v: &[f64], ds: &Dataset) -> Vec<f64> {
    let b = ds.labels();
    assert_eq!(
        v.len(),
        b.len(),
        "vector length must equal the sample count"
    );
    let mu = v.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / b.len() as f64;
    v.iter().zip(b).map(|(x, y)| x - mu * y).collect()
}

/// Closed-form solution at `λ_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMax {
    pub lambda_max: f64,
    pub theta_max: DualPoint,
    /// Smallest feature index attaining `max_j |⟨θ_max, x̄^j⟩|`.
    pub j0: usize,
    pub sign0: f64,
}

/// `θ_max` has `m⁻/m` on positives and `m⁺/m` on negatives, and
/// `λ_max = ‖X̄ᵀθ_max‖∞ / m`.
pub fn lambda_max(ds: &Dataset) -> Result<LambdaMax> {
    let m = ds.m() as f64;
    let (pos, neg) = (ds.m_minus() as f64 / m, ds.m_plus() as f64 / m);
    let theta: Vec<f64> = ds
        .labels()
        .iter()
        .map(|&b| if b > 0.0 { pos } else { neg })
        .collect();
    let theta_max = DualPoint::new(theta)?;
    let dots = ds.xbar_t_dot(theta_max.as_slice());
    let mut j0 = 0;
    let mut best = 0.0;
    for (j, d) in dots.iter().enumerate() {
        if d.abs() > best {
            best = d.abs();
            j0 = j;
        }
    }
    if best == 0.0 {
        return Err(Error::Degenerate(
            "every column is orthogonal to theta_max, so lambda_max = 0".into(),
        ));
    }
    Ok(LambdaMax {
        lambda_max: best / m,
        theta_max,
        j0,
        sign0: dots[j0].signum(),
    })
}

/// Everything that stays fixed while screening at any `λ < λ0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningGeometry {
    pub lambda0: f64,
    pub theta0: DualPoint,
    pub lambda_max: f64,
    /// Index `j0` of the column defining `x̄* = sign · x̄^{j0}`.
    pub xstar_index: usize,
    pub xstar_sign: f64,
    /// `‖P x̄*‖`
    pub proj_xstar_norm: f64,
    /// `⟨θ0, x̄*⟩`, equal to `mλ0` up to the active-set tolerance.
    pub theta0_dot_xstar: f64,
    pub g_theta0: f64,
    /// `⟨∇g(θ0), θ0⟩`
    pub grad_dot_theta0: f64,
    pub m: usize,
}

impl ScreeningGeometry {
    /// Radius of the ball around `θ0` known to contain `θ*_λ`.
    pub fn radius(&self, lambda: f64) -> Result<f64> {
        radius(lambda, self)
    }
}

/// `r(λ) = sqrt((m/2) [g(sθ0) - g(θ0) + (1-s) ⟨∇g(θ0), θ0⟩])` with
/// `s = λ/λ0`.
///
/// The bracket is summed per coordinate as a Bregman divergence of `f`,
/// and clamped at zero.
pub fn radius(lambda: f64, geom: &ScreeningGeometry) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= geom.lambda0) {
        return Err(Error::InvalidParameter(format!(
            "radius needs 0 < lambda <= lambda0, got lambda = {lambda:e}, lambda0 = {:e}",
            geom.lambda0
        )));
    }
    if lambda == geom.lambda0 {
        return Ok(0.0);
    }
    let s = lambda / geom.lambda0;
    let m = geom.m as f64;
    let bracket = geom
        .theta0
        .as_slice()
        .iter()
        .map(|&t| neg_entropy(s * t) - neg_entropy(t) + (1.0 - s) * t * logit(t))
        .sum::<f64>()
        / m;
    Ok((0.5 * m * bracket.max(0.0)).sqrt())
}

/// Builds the geometry at `λ0` from a dual optimum `θ0`.
///
/// Fails with [`Error::InfeasibleDual`] if `θ0` violates the constraints of
/// the dual at `λ0`, [`Error::EmptyActiveSet`] if no column reaches the bound,
/// and [`Error::Degenerate`] if the chosen `x̄*` is a multiple of `b`.
pub fn build_geometry(ds: &Dataset, lambda0: f64, theta0: DualPoint) -> Result<ScreeningGeometry> {
    let lm = lambda_max(ds)?;
    build_geometry_with(ds, lambda0, theta0, lm.lambda_max)
}

/// Like [`build_geometry`] with `λ_max` already known.
pub fn build_geometry_with(
    ds: &Dataset,
    lambda0: f64,
    theta0: DualPoint,
    lambda_max: f64,
) -> Result<ScreeningGeometry> {
    let m = ds.m();
    let mf = m as f64;
    if theta0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: theta0.len(),
        });
    }
    if !(lambda0 > 0.0 && lambda0 <= lambda_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "lambda0 = {lambda0:e} must lie in (0, lambda_max = {lambda_max:e}]"
        )));
    }
    let theta = theta0.as_slice();
    let b = ds.labels();
    let dot_b: f64 = theta.iter().zip(b).map(|(t, b)| t * b).sum();
    if dot_b.abs() > 1e-9 * mf {
        return Err(Error::InfeasibleDual(format!("<theta0, b> = {dot_b:e}")));
    }
    let bound = mf * lambda0;
    let dots = ds.xbar_t_dot(theta);
    let max_dot = dots.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    if max_dot > bound * (1.0 + ACTIVE_SET_TOL) {
        return Err(Error::InfeasibleDual(format!(
            "max |<theta0, x_j>| = {max_dot:e} exceeds m*lambda0 = {bound:e}"
        )));
    }
    let threshold = bound * (1.0 - ACTIVE_SET_TOL);
    let j0 = dots
        .iter()
        .position(|d| d.abs() >= threshold)
        .ok_or(Error::EmptyActiveSet { lambda0 })?;
    let xstar_sign = dots[j0].signum();

    let proj = project_complement_b(&ds.column(j0).to_dense(m), ds);
    let proj_xstar_norm = proj.iter().map(|v| v * v).sum::<f64>().sqrt();
    if proj_xstar_norm <= crate::data::ZERO_PROJECTION_TOL * ds.column(j0).norm_sq().sqrt() {
        return Err(Error::Degenerate(format!(
            "x* (feature {j0}) is a multiple of the label vector"
        )));
    }

    let g_theta0 = objective(theta);
    let grad_dot_theta0 = theta.iter().map(|&t| t * logit(t)).sum::<f64>() / mf;
    Ok(ScreeningGeometry {
        lambda0,
        lambda_max,
        xstar_index: j0,
        xstar_sign,
        proj_xstar_norm,
        theta0_dot_xstar: dots[j0].abs(),
        g_theta0,
        grad_dot_theta0,
        m,
        theta0,
    })
}

/// Geometry at `λ0 = λ_max` with the closed-form `θ_max`.
pub fn geometry_at_lambda_max(ds: &Dataset) -> Result<ScreeningGeometry> {
    let lm = lambda_max(ds)?;
    build_geometry_with(ds, lm.lambda_max, lm.theta_max, lm.lambda_max)
}
