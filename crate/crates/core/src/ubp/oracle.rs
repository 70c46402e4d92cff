//! Dense numerical solution of the bound problem, for cross-checking the
//! closed form on small instances.
//!
//! Writing `θ = θ0 + δ` with `δ ⟂ b`, the maximum of `⟨θ, w⟩` (`w = ξ x̄^j`)
//! is `⟨θ0, w⟩ + max ⟨δ, P w⟩` over `‖δ‖ ≤ r`, `⟨δ, P x̄*⟩ ≤ -h`.
//! When the ball maximizer `r P w / ‖P w‖` satisfies the halfspace it is the
//! answer; otherwise the value is `min_{μ ≥ 0} r ‖P w - μ P x̄*‖ - μ h`,
//! a convex function of one variable minimized here by bisection on its
//! derivative.

use crate::data::Dataset;
use crate::dual::{project_complement_b, ScreeningGeometry};
use crate::error::{Error, Result};

const MU_CAP: f64 = 1e12;

/// Maximum of `⟨θ, ξ x̄^j⟩` over the bound region at `λ`.
pub fn oracle_bound(
    j: usize,
    xi: f64,
    lambda: f64,
    geom: &ScreeningGeometry,
    ds: &Dataset,
) -> Result<f64> {
    let m = ds.m();
    let r = geom.radius(lambda)?;
    if r < 0.0 {
        return Err(Error::Inconsistent(format!("negative radius {r:e}")));
    }
    let theta0 = geom.theta0.as_slice();
    let w: Vec<f64> = ds.column(j).to_dense(m).iter().map(|v| xi * v).collect();
    let xstar: Vec<f64> = ds
        .column(geom.xstar_index)
        .to_dense(m)
        .iter()
        .map(|v| geom.xstar_sign * v)
        .collect();
    let pw = project_complement_b(&w, ds);
    let px = project_complement_b(&xstar, ds);
    let base = dot(theta0, &w);
    let h = dot(theta0, &xstar) - m as f64 * lambda;

    let pw_norm = norm(&pw);
    if pw_norm == 0.0 {
        return Ok(base);
    }
    if r == 0.0 {
        return Ok(base);
    }
    if r * dot(&pw, &px) / pw_norm <= -h {
        return Ok(base + r * pw_norm);
    }

    let value = |mu: f64| {
        let v: Vec<f64> = pw.iter().zip(&px).map(|(a, b)| a - mu * b).collect();
        r * norm(&v) - mu * h
    };
    // right derivative; at the kink where P w = μ P x̄* it is r‖P x̄*‖ - h ≥ 0
    let slope = |mu: f64| {
        let v: Vec<f64> = pw.iter().zip(&px).map(|(a, b)| a - mu * b).collect();
        let nv = norm(&v);
        if nv == 0.0 {
            r * norm(&px) - h
        } else {
            -r * dot(&v, &px) / nv - h
        }
    };

    let (mut lo, mut hi) = (0.0, 1.0);
    while slope(hi) < 0.0 && hi < MU_CAP {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = value(lo).min(value(hi));
    Ok(base + best)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
