//! Feature screening rules and the rejection-ratio metric.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{precompute, Dataset, FeaturePrecompute};
use crate::dual::{DualPoint, ScreeningGeometry};
use crate::error::{Error, Result};
use crate::solver::{zero_threshold, PrimalSolution};
use crate::ubp::{bound_feature_with, BoundContext};

/// Relative margin below `mλ` a bound must clear before a feature is dropped.
pub const SCREEN_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    None,
    Slores,
    Strong,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::None => "none",
            Rule::Slores => "slores",
            Rule::Strong => "strong",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Rule::None),
            "slores" => Ok(Rule::Slores),
            "strong" => Ok(Rule::Strong),
            other => Err(Error::InvalidParameter(format!("unknown rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenResult {
    /// Ascending feature indices that enter optimization.
    pub kept: Vec<usize>,
    /// Ascending complement of `kept`.
    pub discarded: Vec<usize>,
    pub rule: Rule,
    pub lambda: f64,
    pub lambda0: f64,
    pub screen_time: Duration,
    /// Features kept only because their bound could not be evaluated.
    pub fallbacks: usize,
}

impl ScreenResult {
    fn from_mask(
        keep: &[bool],
        rule: Rule,
        lambda: f64,
        lambda0: f64,
        start: Instant,
        fallbacks: usize,
    ) -> Self {
        let (mut kept, mut discarded) = (Vec::new(), Vec::new());
        for (j, &k) in keep.iter().enumerate() {
            if k {
                kept.push(j);
            } else {
                discarded.push(j);
            }
        }
        ScreenResult {
            kept,
            discarded,
            rule,
            lambda,
            lambda0,
            screen_time: start.elapsed(),
            fallbacks,
        }
    }

    pub fn n_features(&self) -> usize {
        self.kept.len() + self.discarded.len()
    }
}

/// Slores bound evaluation with the per-feature table computed once and
/// reused across `λ`.
#[derive(Debug, Clone)]
pub struct Slores {
    geom: ScreeningGeometry,
    table: FeaturePrecompute,
    p: usize,
}

impl Slores {
    pub fn new(ds: &Dataset, geom: ScreeningGeometry) -> Result<Self> {
        if geom.m != ds.m() {
            return Err(Error::DimensionMismatch {
                expected: ds.m(),
                got: geom.m,
            });
        }
        let table = precompute(ds, &geom.theta0, geom.xstar_index, geom.xstar_sign)?;
        Ok(Slores {
            geom,
            table,
            p: ds.p(),
        })
    }

    pub fn geometry(&self) -> &ScreeningGeometry {
        &self.geom
    }

    pub fn table(&self) -> &FeaturePrecompute {
        &self.table
    }

    /// Screens at `λ`. Errors if `λ0 < λ < λ_max`, where the geometry says
    /// nothing about `θ*_λ`.
    pub fn screen(&self, lambda: f64) -> Result<ScreenResult> {
        let start = Instant::now();
        let geom = &self.geom;
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda:e} must be positive"
            )));
        }
        if lambda >= geom.lambda_max {
            return Ok(ScreenResult::from_mask(
                &vec![false; self.p],
                Rule::Slores,
                lambda,
                geom.lambda0,
                start,
                0,
            ));
        }
        if lambda > geom.lambda0 {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda:e} lies above lambda0 = {:e}",
                geom.lambda0
            )));
        }
        if lambda == geom.lambda0 {
            return Ok(ScreenResult::from_mask(
                &vec![true; self.p],
                Rule::Slores,
                lambda,
                geom.lambda0,
                start,
                0,
            ));
        }

        let ctx = BoundContext::new(geom, lambda)?;
        let threshold = geom.m as f64 * lambda * (1.0 - SCREEN_MARGIN);
        let mut fallbacks = 0;
        let keep: Vec<bool> = self
            .table
            .stats
            .iter()
            .enumerate()
            .map(|(j, st)| {
                if st.is_zero_projection() {
                    return false;
                }
                match bound_feature_with(j, &ctx, st) {
                    Ok(res) => !(res.t < threshold),
                    Err(e) => {
                        log::debug!("feature {j}: keeping, bound failed: {e}");
                        fallbacks += 1;
                        true
                    }
                }
            })
            .collect();
        Ok(ScreenResult::from_mask(
            &keep,
            Rule::Slores,
            lambda,
            geom.lambda0,
            start,
            fallbacks,
        ))
    }
}

/// One-shot Slores: per-feature precompute plus bounds, timed together.
pub fn slores(ds: &Dataset, lambda: f64, geom: &ScreeningGeometry) -> Result<ScreenResult> {
    let start = Instant::now();
    let mut res = Slores::new(ds, geom.clone())?.screen(lambda)?;
    res.screen_time = start.elapsed();
    Ok(res)
}

/// Basic strong rule: discard `j` iff `|⟨θ0, x̄^j⟩| < m(2λ - λ0)`. Not safe.
pub fn strong_rule(ds: &Dataset, lambda: f64, lambda0: f64, theta0: &DualPoint) -> ScreenResult {
    let start = Instant::now();
    let threshold = ds.m() as f64 * (2.0 * lambda - lambda0);
    let keep: Vec<bool> = if threshold <= 0.0 {
        vec![true; ds.p()]
    } else {
        let theta = theta0.as_slice();
        (0..ds.p())
            .map(|j| !(ds.column(j).dot(theta).abs() < threshold))
            .collect()
    };
    ScreenResult::from_mask(&keep, Rule::Strong, lambda, lambda0, start, 0)
}

/// Keeps every feature.
pub fn no_screening(ds: &Dataset, lambda: f64) -> ScreenResult {
    let start = Instant::now();
    ScreenResult::from_mask(&vec![true; ds.p()], Rule::None, lambda, lambda, start, 0)
}

/// `|discarded| / |{j : β_j = 0}|` with zeros counted under
/// [`zero_threshold`]. `None` when the solution has no zero coefficient.
pub fn rejection_ratio(sr: &ScreenResult, beta: &PrimalSolution) -> Option<f64> {
    let tau = zero_threshold(&beta.beta);
    let zeros = beta.beta.iter().filter(|b| b.abs() <= tau).count();
    if zeros == 0 {
        None
    } else {
        Some(sr.discarded.len() as f64 / zeros as f64)
    }
}
