//! Upper bound on `|⟨θ*_λ, x̄^j⟩|` over the region
//!
//! ```text
//! A = { θ : ‖θ - θ0‖ ≤ r,  ⟨θ, b⟩ = 0,  ⟨θ, x̄*⟩ ≤ mλ }
//! ```
//!
//! For each sign `ξ` write `x̄ = -ξ x̄^j` and
//! `A = ⟨P x̄, P x̄*⟩`, `N = ‖P x̄‖²`, `S = ‖P x̄*‖²`, `c̄ = A / √(NS)`,
//! `h = ⟨θ0, x̄*⟩ - mλ` and `d = h / (r √S)`. Then
//!
//! * if `c̄ ≥ d` the halfspace is inactive and `T_ξ = r √N - ⟨θ0, x̄⟩`;
//! * otherwise `T_ξ = r ‖P x̄ + u P x̄*‖ - u h - ⟨θ0, x̄⟩` where `u ≥ 0` is the
//!   positive root of `a2 u² + a1 u + a0 = 0` with
//!   `a2 = S²(1-d²)`, `a1 = 2AS(1-d²)`, `a0 = A² - d²NS`.
//!
//! For any `u ≥ 0` the Case-B expression is itself an upper bound (it is the
//! Lagrangian dual of the maximization), so rounding in `u` can only loosen
//! the bound, never make it unsafe.

pub mod oracle;

use serde::Serialize;

use crate::data::{FeaturePrecompute, FeatureStats};
use crate::dual::ScreeningGeometry;
use crate::error::{Error, Result};

pub use oracle::oracle_bound;

/// `d` above `1` by less than this is treated as roundoff and clamped.
pub const D_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundCase {
    ZeroProjection,
    CaseA,
    CaseB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadratic {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub delta: f64,
}

/// `T_ξ` for one sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideBound {
    pub t: f64,
    pub case: BoundCase,
    /// `c̄`; absent for zero projections.
    pub cbar: Option<f64>,
    pub u2_star: Option<f64>,
    pub quad: Option<Quadratic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub feature: usize,
    /// `ξ = +1`
    pub plus: SideBound,
    /// `ξ = -1`
    pub minus: SideBound,
    /// `max(T₊, T₋)`
    pub t: f64,
    pub d: f64,
}

impl BoundResult {
    pub fn t_plus(&self) -> f64 {
        self.plus.t
    }

    pub fn t_minus(&self) -> f64 {
        self.minus.t
    }

    /// The side attaining the maximum.
    pub fn dominant(&self) -> &SideBound {
        if self.plus.t >= self.minus.t {
            &self.plus
        } else {
            &self.minus
        }
    }

    pub fn case(&self) -> BoundCase {
        self.dominant().case
    }

    pub fn u2_star(&self) -> Option<f64> {
        self.dominant().u2_star
    }

    pub fn quad(&self) -> Option<Quadratic> {
        self.dominant().quad
    }
}

/// Quantities shared by every feature at a fixed `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundContext {
    pub lambda: f64,
    pub r: f64,
    /// `h = ⟨θ0, x̄*⟩ - mλ`
    pub h: f64,
    pub d: f64,
    /// `S = ‖P x̄*‖²`
    pub s: f64,
}

impl BoundContext {
    pub fn new(geom: &ScreeningGeometry, lambda: f64) -> Result<Self> {
        if lambda >= geom.lambda0 {
            return Err(Error::InvalidParameter(format!(
                "bounds need lambda < lambda0 (lambda = {lambda:e}, lambda0 = {:e})",
                geom.lambda0
            )));
        }
        let r = geom.radius(lambda)?;
        let h = geom.theta0_dot_xstar - geom.m as f64 * lambda;
        let sqrt_s = geom.proj_xstar_norm;
        if !(r > 0.0) || !(h > 0.0) {
            return Err(Error::Inconsistent(format!(
                "radius {r:e} and halfspace offset {h:e} must both be positive"
            )));
        }
        let mut d = h / (r * sqrt_s);
        if d > 1.0 + D_CLAMP_TOL {
            return Err(Error::Inconsistent(format!("d = {d} exceeds 1")));
        }
        d = d.min(1.0);
        Ok(BoundContext {
            lambda,
            r,
            h,
            d,
            s: sqrt_s * sqrt_s,
        })
    }
}

/// Closed-form bound for feature `j`.
pub fn bound_feature(
    j: usize,
    lambda: f64,
    geom: &ScreeningGeometry,
    pre: &FeaturePrecompute,
) -> Result<BoundResult> {
    if pre.xstar_index != geom.xstar_index || pre.xstar_sign != geom.xstar_sign {
        return Err(Error::InvalidParameter(
            "precompute table was built for a different x*".into(),
        ));
    }
    let ctx = BoundContext::new(geom, lambda)?;
    bound_feature_with(j, &ctx, pre.get(j))
}

/// [`bound_feature`] with the per-`λ` context hoisted out of the loop.
pub fn bound_feature_with(j: usize, ctx: &BoundContext, st: &FeatureStats) -> Result<BoundResult> {
    if st.is_zero_projection() {
        let side = SideBound {
            t: 0.0,
            case: BoundCase::ZeroProjection,
            cbar: None,
            u2_star: None,
            quad: None,
        };
        return Ok(BoundResult {
            feature: j,
            plus: side,
            minus: side,
            t: 0.0,
            d: ctx.d,
        });
    }
    let plus = side_bound(ctx, st, 1.0)?;
    let minus = side_bound(ctx, st, -1.0)?;
    Ok(BoundResult {
        feature: j,
        plus,
        minus,
        t: plus.t.max(minus.t),
        d: ctx.d,
    })
}

fn side_bound(ctx: &BoundContext, st: &FeatureStats, xi: f64) -> Result<SideBound> {
    let (r, d, s, h) = (ctx.r, ctx.d, ctx.s, ctx.h);
    let n = st.proj_norm * st.proj_norm;
    // x̄ = -ξ x̄^j
    let a = -xi * st.dot_proj_xstar;
    let offset = xi * st.dot_theta0;
    let ns = n * s;
    let cbar = (a / ns.sqrt()).clamp(-1.0, 1.0);

    if cbar >= d {
        return Ok(SideBound {
            t: r * n.sqrt() + offset,
            case: BoundCase::CaseA,
            cbar: Some(cbar),
            u2_star: None,
            quad: None,
        });
    }

    let one_minus = 1.0 - d * d;
    let a2 = s * s * one_minus;
    let a1 = 2.0 * a * s * one_minus;
    let a0 = a * a - d * d * ns;
    let perp = st.perp_xstar;
    let delta = 4.0 * d * d * one_minus * s * s * perp;
    let collinear = perp <= 1e-10 * ns;

    let u2 = if a2 > 1e-14 * s * s {
        (-a1 + delta.sqrt()) / (2.0 * a2)
    } else if collinear {
        // c̄ = -1: the root collapses to the point where P x̄ + u P x̄* = 0
        -a / s
    } else {
        return Err(Error::Inconsistent(format!(
            "a2 = {a2:e} vanishes with c̄ = {cbar} > -1"
        )));
    };
    let u2 = u2.max(0.0);
    let shifted = a + u2 * s;
    let norm = ((perp + shifted * shifted) / s).sqrt();
    Ok(SideBound {
        t: r * norm - u2 * h + offset,
        case: BoundCase::CaseB,
        cbar: Some(cbar),
        u2_star: Some(u2),
        quad: Some(Quadratic { a0, a1, a2, delta }),
    })
}
