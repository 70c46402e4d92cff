//! Accelerated proximal gradient solver for
//!
//! ```text
//! min (1/m) Σ log(1 + exp(-⟨β, x̄_i⟩ - b_i c)) + λ ‖β‖₁
//! ```
//!
//! with an unpenalized intercept `c`, plus dual recovery, duality-gap
//! certification and KKT checks.
//!
//! The iteration is FISTA in the diagonal metric `D_j = ‖x̄^j‖²/m` (`D_c = 1`)
//! with backtracking on a global constant `L`, function-value and gradient
//! restarts, and a gap check every few iterations.

use serde::Serialize;

use crate::data::Dataset;
use crate::dual::{self, DualPoint};
use crate::error::{Error, Result};

pub const DEFAULT_TOL_GAP: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Recovered dual coordinates are clipped to `[DUAL_CLIP, 1 - DUAL_CLIP]`.
pub const DUAL_CLIP: f64 = 1e-12;
/// Relative slack on KKT intervals.
pub const KKT_DELTA: f64 = 1e-5;

/// `|β_j| ≤ 1e-8 · max(1, ‖β‖∞)` counts as zero.
pub fn zero_threshold(beta: &[f64]) -> f64 {
    1e-8 * beta.iter().fold(1.0f64, |a, b| a.max(b.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Iterations between duality-gap evaluations.
    pub check_every: usize,
    /// Return the last iterate instead of [`Error::NotConverged`] when the
    /// cap is reached. Its `gap` then exceeds `tol_gap`.
    pub allow_truncation: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol_gap: DEFAULT_TOL_GAP,
            max_iter: DEFAULT_MAX_ITER,
            check_every: 10,
            allow_truncation: false,
        }
    }
}

impl FitOptions {
    pub fn with_tol(tol_gap: f64) -> Self {
        FitOptions {
            tol_gap,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    /// Length `p`; features outside the kept set are exactly zero.
    pub beta: Vec<f64>,
    pub c: f64,
    pub lambda: f64,
    pub objective: f64,
    /// Certified gap against `theta`.
    pub gap: f64,
    pub iterations: usize,
    /// Dual-feasible point used for the gap.
    pub theta: DualPoint,
    /// Clipped logistic residuals `1/(1 + exp(⟨β, x̄_i⟩ + b_i c))`.
    pub theta_raw: DualPoint,
    /// Final line-search constant, reused by warm starts.
    pub step_constant: f64,
}

impl PrimalSolution {
    pub fn n_zero(&self) -> usize {
        let tau = zero_threshold(&self.beta);
        self.beta.iter().filter(|b| b.abs() <= tau).count()
    }

    pub fn support(&self) -> Vec<usize> {
        let tau = zero_threshold(&self.beta);
        (0..self.beta.len())
            .filter(|&j| self.beta[j].abs() > tau)
            .collect()
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(z))` without overflow.
#[inline]
pub(crate) fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

#[inline]
fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// `z_i = ⟨β, x̄_i⟩ + b_i c`.
pub fn margins(ds: &Dataset, beta: &[f64], c: f64) -> Vec<f64> {
    let mut z: Vec<f64> = ds.labels().iter().map(|b| b * c).collect();
    for (j, &w) in beta.iter().enumerate() {
        if w != 0.0 {
            ds.column(j).axpy(w, &mut z);
        }
    }
    z
}

fn smooth_loss(z: &[f64]) -> f64 {
    z.iter().map(|&zi| softplus(-zi)).sum::<f64>() / z.len() as f64
}

/// Value of the penalized primal objective at `(β, c)`.
pub fn primal_objective(ds: &Dataset, beta: &[f64], c: f64, lambda: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    smooth_loss(&margins(ds, beta, c)) + lambda * l1
}

/// Clipped logistic residuals at `(β, c)`.
pub fn raw_dual(ds: &Dataset, beta: &[f64], c: f64) -> Vec<f64> {
    margins(ds, beta, c)
        .into_iter()
        .map(|z| sigmoid_neg(z).clamp(DUAL_CLIP, 1.0 - DUAL_CLIP))
        .collect()
}

/// Makes a clipped residual vector dual feasible for the problem restricted
/// to `cols`.
///
/// First `⟨θ, b⟩ = 0` is restored by a shift along `b`; if that would leave
/// `(0, 1)` the larger class is scaled down instead. Then `θ` is scaled by
/// `min(1, mλ / ‖X̄_Rᵀθ‖∞)`, which keeps both the equality and the box.
fn repair_dual(
    ds: &Dataset,
    cols: &[usize],
    dot_b: &[f64],
    mut theta: Vec<f64>,
    mut dots: Vec<f64>,
    lambda: f64,
) -> Result<Vec<f64>> {
    let b = ds.labels();
    let m = b.len() as f64;
    let sum_b: f64 = theta.iter().zip(b).map(|(t, b)| t * b).sum();
    let shift = -sum_b / m;
    let fits = theta.iter().zip(b).all(|(&t, &bi)| {
        let v = t + shift * bi;
        v > 0.0 && v < 1.0
    });
    if fits {
        for (t, &bi) in theta.iter_mut().zip(b) {
            *t += shift * bi;
        }
        for (d, &db) in dots.iter_mut().zip(dot_b) {
            *d += shift * db;
        }
    } else {
        let (mut pos, mut neg) = (0.0, 0.0);
        for (&t, &bi) in theta.iter().zip(b) {
            if bi > 0.0 {
                pos += t;
            } else {
                neg += t;
            }
        }
        let (scale, class) = if pos > neg {
            (neg / pos, 1.0)
        } else {
            (pos / neg, -1.0)
        };
        for (t, &bi) in theta.iter_mut().zip(b) {
            if bi == class {
                *t *= scale;
            }
        }
        for (d, &j) in dots.iter_mut().zip(cols) {
            *d = ds.column(j).dot(&theta);
        }
    }
    let max_dot = dots.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let bound = m * lambda;
    if max_dot > bound {
        let s = bound / max_dot;
        for t in theta.iter_mut() {
            *t *= s;
        }
    }
    if theta.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::InfeasibleDual(
            "dual repair left the open unit box".into(),
        ));
    }
    Ok(theta)
}

/// The restricted problem over a list of columns.
struct Problem<'a> {
    ds: &'a Dataset,
    cols: Vec<usize>,
    metric: Vec<f64>,
    dot_b: Vec<f64>,
    lambda: f64,
}

struct Iterate {
    w: Vec<f64>,
    c: f64,
    z: Vec<f64>,
}

impl Problem<'_> {
    fn m(&self) -> f64 {
        self.ds.m() as f64
    }

    fn recompute_margins(&self, w: &[f64], c: f64) -> Vec<f64> {
        let mut z: Vec<f64> = self.ds.labels().iter().map(|b| b * c).collect();
        for (&j, &wj) in self.cols.iter().zip(w) {
            if wj != 0.0 {
                self.ds.column(j).axpy(wj, &mut z);
            }
        }
        z
    }

    fn l1(&self, w: &[f64]) -> f64 {
        w.iter().map(|v| v.abs()).sum()
    }

    /// Gap certificate at a point with margins `z`.
    fn certify(&self, w: &[f64], z: &[f64]) -> Result<Certificate> {
        let objective = smooth_loss(z) + self.lambda * self.l1(w);
        let raw: Vec<f64> = z
            .iter()
            .map(|&zi| sigmoid_neg(zi).clamp(DUAL_CLIP, 1.0 - DUAL_CLIP))
            .collect();
        let dots: Vec<f64> = self
            .cols
            .iter()
            .map(|&j| self.ds.column(j).dot(&raw))
            .collect();
        let feasible = repair_dual(
            self.ds,
            &self.cols,
            &self.dot_b,
            raw.clone(),
            dots,
            self.lambda,
        )?;
        let gap = objective + dual::objective(&feasible);
        Ok(Certificate {
            objective,
            gap,
            feasible,
            raw,
        })
    }

    fn solution(
        &self,
        x: &Iterate,
        cert: Certificate,
        iterations: usize,
        step_constant: f64,
    ) -> Result<PrimalSolution> {
        if cert.gap < -1e-10 {
            log::warn!(
                "negative duality gap {:e} at lambda {:e}",
                cert.gap,
                self.lambda
            );
        }
        let mut beta = vec![0.0; self.ds.p()];
        for (&j, &wj) in self.cols.iter().zip(&x.w) {
            beta[j] = wj;
        }
        Ok(PrimalSolution {
            beta,
            c: x.c,
            lambda: self.lambda,
            objective: cert.objective,
            gap: cert.gap,
            iterations,
            theta: DualPoint::new(cert.feasible)?,
            theta_raw: DualPoint::new(cert.raw)?,
            step_constant,
        })
    }
}

struct Certificate {
    objective: f64,
    gap: f64,
    feasible: Vec<f64>,
    raw: Vec<f64>,
}

/// Solves the problem at `λ`, optionally restricted to `kept` (ascending
/// indices) and warm-started from a previous solution.
///
/// A cold start begins at the closed-form solution for `λ ≥ λ_max`:
/// `β = 0`, `c = ln(m⁺/m⁻)`.
pub fn fit(
    ds: &Dataset,
    lambda: f64,
    kept: Option<&[usize]>,
    warm: Option<&PrimalSolution>,
    opts: &FitOptions,
) -> Result<PrimalSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda:e} must be positive"
        )));
    }
    if !(opts.tol_gap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol_gap = {:e} must be positive",
            opts.tol_gap
        )));
    }
    let p = ds.p();
    let cols: Vec<usize> = match kept {
        Some(k) => {
            if let Some(&bad) = k.iter().find(|&&j| j >= p) {
                return Err(Error::InvalidParameter(format!(
                    "kept index {bad} >= p = {p}"
                )));
            }
            k.to_vec()
        }
        None => (0..p).collect(),
    };
    if let Some(w) = warm {
        if w.beta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: w.beta.len(),
            });
        }
    }
    let m = ds.m() as f64;
    let all_dot_b = ds.column_dot_b();
    let prob = Problem {
        ds,
        metric: cols.iter().map(|&j| ds.column(j).norm_sq() / m).collect(),
        dot_b: cols.iter().map(|&j| all_dot_b[j]).collect(),
        cols,
        lambda,
    };

    let (w0, c0, l0) = match warm {
        Some(s) => (
            prob.cols.iter().map(|&j| s.beta[j]).collect(),
            s.c,
            s.step_constant,
        ),
        None => (
            vec![0.0; prob.cols.len()],
            (ds.m_plus() as f64 / ds.m_minus() as f64).ln(),
            0.25,
        ),
    };
    let w0: Vec<f64> = w0
        .iter()
        .zip(&prob.metric)
        .map(|(&w, &d)| if d > 0.0 { w } else { 0.0 })
        .collect();
    run_fista(&prob, w0, c0, l0.max(1e-12), opts)
}

fn run_fista(
    prob: &Problem<'_>,
    w0: Vec<f64>,
    c0: f64,
    l0: f64,
    opts: &FitOptions,
) -> Result<PrimalSolution> {
    let ds = prob.ds;
    let b = ds.labels();
    let m = prob.m();
    let k = prob.cols.len();
    let lambda = prob.lambda;
    let check_every = opts.check_every.max(1);

    let z0 = prob.recompute_margins(&w0, c0);
    let mut x = Iterate {
        w: w0,
        c: c0,
        z: z0,
    };
    let mut big_f = smooth_loss(&x.z) + lambda * prob.l1(&x.w);
    let mut y = Iterate {
        w: x.w.clone(),
        c: x.c,
        z: x.z.clone(),
    };
    let mut y_is_x = true;
    let mut t = 1.0f64;
    let mut l = l0;

    let mut theta_y = vec![0.0; prob.ds.m()];
    let mut grad = vec![0.0; k];
    let mut next = Iterate {
        w: vec![0.0; k],
        c: 0.0,
        z: vec![0.0; prob.ds.m()],
    };
    let mut iterations = 0usize;
    let mut last_gap = f64::INFINITY;

    let mut last_checked = usize::MAX;
    loop {
        if iterations % check_every == 0 && last_checked != iterations {
            last_checked = iterations;
            // fresh margins so rounding drift never reaches the certificate;
            // y must be refreshed too or the momentum step mixes stale and
            // fresh values
            x.z = prob.recompute_margins(&x.w, x.c);
            y.z = prob.recompute_margins(&y.w, y.c);
            let cert = prob.certify(&x.w, &x.z)?;
            big_f = cert.objective;
            last_gap = cert.gap;
            if cert.gap <= opts.tol_gap {
                return prob.solution(&x, cert, iterations, l);
            }
        }
        if iterations >= opts.max_iter {
            if opts.allow_truncation {
                x.z = prob.recompute_margins(&x.w, x.c);
                let cert = prob.certify(&x.w, &x.z)?;
                return prob.solution(&x, cert, iterations, l);
            }
            return Err(Error::NotConverged {
                iterations,
                gap: last_gap,
                lambda,
            });
        }

        // gradient of the smooth part at y
        let mut f_y = 0.0;
        for (th, &zi) in theta_y.iter_mut().zip(&y.z) {
            *th = sigmoid_neg(zi);
            f_y += softplus(-zi);
        }
        f_y /= m;
        for (g, &j) in grad.iter_mut().zip(&prob.cols) {
            *g = -ds.column(j).dot(&theta_y) / m;
        }
        let grad_c = -theta_y.iter().zip(b).map(|(t, b)| t * b).sum::<f64>() / m;

        // backtracking in the metric diag(D, 1)
        l *= 0.9;
        let f_next = loop {
            next.z.copy_from_slice(&y.z);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for i in 0..k {
                let d = prob.metric[i];
                let wi = if d > 0.0 {
                    let step = 1.0 / (l * d);
                    soft_threshold(y.w[i] - step * grad[i], lambda * step)
                } else {
                    0.0
                };
                next.w[i] = wi;
                let delta = wi - y.w[i];
                if delta != 0.0 {
                    ds.column(prob.cols[i]).axpy(delta, &mut next.z);
                    lin += grad[i] * delta;
                    quad += d * delta * delta;
                }
            }
            next.c = y.c - grad_c / l;
            let dc = next.c - y.c;
            if dc != 0.0 {
                for (zi, &bi) in next.z.iter_mut().zip(b) {
                    *zi += bi * dc;
                }
            }
            lin += grad_c * dc;
            quad += dc * dc;
            let f_next = smooth_loss(&next.z);
            let model = f_y + lin + 0.5 * l * quad;
            if f_next <= model + 1e-14 * f_y.abs().max(1.0) {
                break f_next;
            }
            l *= 2.0;
            if !(l.is_finite() && l < 1e30) {
                return Err(Error::Degenerate(format!(
                    "line search diverged at lambda {lambda:e}"
                )));
            }
        };
        let f_total = f_next + lambda * prob.l1(&next.w);

        if f_total > big_f && !y_is_x {
            // momentum overshot: restart from x with a plain proximal step
            t = 1.0;
            y.w.copy_from_slice(&x.w);
            y.c = x.c;
            y.z.copy_from_slice(&x.z);
            y_is_x = true;
            continue;
        }
        iterations += 1;

        // gradient restart test in the same metric: ⟨y - x⁺, x⁺ - x⟩ > 0
        let mut restart_dot = (y.c - next.c) * (next.c - x.c);
        for i in 0..k {
            restart_dot += prob.metric[i] * (y.w[i] - next.w[i]) * (next.w[i] - x.w[i]);
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = if restart_dot > 0.0 {
            0.0
        } else {
            (t - 1.0) / t_next
        };
        t = if restart_dot > 0.0 { 1.0 } else { t_next };

        // y = x⁺ + mom (x⁺ - x), then x = x⁺
        for i in 0..k {
            y.w[i] = next.w[i] + mom * (next.w[i] - x.w[i]);
        }
        y.c = next.c + mom * (next.c - x.c);
        for i in 0..y.z.len() {
            y.z[i] = next.z[i] + mom * (next.z[i] - x.z[i]);
        }
        y_is_x = mom == 0.0;
        std::mem::swap(&mut x, &mut next);
        big_f = f_total;
    }
}

/// Raw and feasible duals recovered from a primal point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRecovery {
    pub raw: DualPoint,
    pub feasible: DualPoint,
}

/// `θ_i = 1/(1 + exp(⟨β, x̄_i⟩ + b_i c))`, clipped, and its repair into the
/// dual feasible set over all features.
pub fn recover_dual(sol: &PrimalSolution, ds: &Dataset) -> Result<DualRecovery> {
    if sol.beta.len() != ds.p() {
        return Err(Error::DimensionMismatch {
            expected: ds.p(),
            got: sol.beta.len(),
        });
    }
    let raw = raw_dual(ds, &sol.beta, sol.c);
    let cols: Vec<usize> = (0..ds.p()).collect();
    let dots = ds.xbar_t_dot(&raw);
    let feasible = repair_dual(ds, &cols, ds.column_dot_b(), raw.clone(), dots, sol.lambda)?;
    Ok(DualRecovery {
        raw: DualPoint::new(raw)?,
        feasible: DualPoint::new(feasible)?,
    })
}

/// `P(β, c) + g(θ)`, after checking that `θ` is feasible at `λ` to within
/// `1e-7` relative.
pub fn duality_gap(
    sol: &PrimalSolution,
    theta_feasible: &DualPoint,
    ds: &Dataset,
    lambda: f64,
) -> Result<f64> {
    let m = ds.m();
    if theta_feasible.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: theta_feasible.len(),
        });
    }
    let theta = theta_feasible.as_slice();
    let sum_b: f64 = theta.iter().zip(ds.labels()).map(|(t, b)| t * b).sum();
    if sum_b.abs() > 1e-7 * m as f64 {
        return Err(Error::InfeasibleDual(format!("<theta, b> = {sum_b:e}")));
    }
    let bound = m as f64 * lambda;
    let max_dot = ds
        .xbar_t_dot(theta)
        .iter()
        .fold(0.0f64, |a, d| a.max(d.abs()));
    if max_dot > bound * (1.0 + 1e-7) {
        return Err(Error::InfeasibleDual(format!(
            "max |<theta, x_j>| = {max_dot:e} exceeds m*lambda = {bound:e}"
        )));
    }
    Ok(primal_objective(ds, &sol.beta, sol.c, lambda) + dual::objective(theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    /// Distance of `⟨θ, x̄^j⟩` outside its allowed interval, divided by `mλ`.
    pub residuals: Vec<f64>,
    pub max_violation: f64,
    pub violators: Vec<usize>,
}

impl KktReport {
    pub fn is_satisfied(&self) -> bool {
        self.violators.is_empty()
    }
}

/// Checks sign conditions on `⟨θ, x̄^j⟩` against the support of `β` with
/// relative slack [`KKT_DELTA`].
pub fn kkt_check(sol: &PrimalSolution, theta: &DualPoint, ds: &Dataset, lambda: f64) -> KktReport {
    let ml = ds.m() as f64 * lambda;
    let tau = zero_threshold(&sol.beta);
    let (lo, hi) = (ml * (1.0 - KKT_DELTA), ml * (1.0 + KKT_DELTA));
    let residuals: Vec<f64> = (0..ds.p())
        .map(|j| {
            let v = ds.column(j).dot(theta.as_slice());
            let beta = sol.beta[j];
            let outside = if beta > tau {
                (lo - v).max(v - hi).max(0.0)
            } else if beta < -tau {
                (-hi - v).max(v + lo).max(0.0)
            } else {
                (v.abs() - hi).max(0.0)
            };
            outside / ml
        })
        .collect();
    let violators: Vec<usize> = (0..residuals.len())
        .filter(|&j| residuals[j] > 0.0)
        .collect();
    let max_violation = residuals.iter().fold(0.0f64, |a, &r| a.max(r));
    KktReport {
        residuals,
        max_violation,
        violators,
    }
}
