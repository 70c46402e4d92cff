//! Safe feature screening (Slores) for ℓ1-regularized logistic regression.
//!
//! Before solving at a regularization level `λ`, Slores bounds
//! `|⟨θ*_λ, x̄^j⟩|` for every feature using only a dual optimum at a
//! larger `λ0`. Features whose bound falls below `mλ` are guaranteed to have
//! a zero coefficient and can be removed from the problem.
//!
//! ```no_run
//! use slores::{fit, geometry_at_lambda_max, synthesize, FitOptions, Slores};
//!
//! let ds = synthesize(100, 500, 0.05, 0.3, 42)?;
//! let geom = geometry_at_lambda_max(&ds)?;
//! let lambda = 0.8 * geom.lambda_max;
//! let screen = Slores::new(&ds, geom)?.screen(lambda)?;
//! let sol = fit(&ds, lambda, Some(&screen.kept), None, &FitOptions::default())?;
//! println!("{} features dropped, gap {:e}", screen.discarded.len(), sol.gap);
//! # Ok::<(), slores::Error>(())
//! ```

pub mod data;
pub mod dual;
pub mod error;
pub mod path;
pub mod screening;
pub mod solver;
pub mod ubp;

pub use data::{
    load_svmlight, load_svmlight_with_dim, parse_svmlight, precompute, synthesize, write_svmlight,
    Column, CscMatrix, Dataset, FeaturePrecompute, FeatureStats, SynthSpec,
};
pub use dual::{
    build_geometry, build_geometry_with, dual_gradient, dual_objective, geometry_at_lambda_max,
    lambda_max, project_complement_b, radius, DualPoint, LambdaMax, ScreeningGeometry,
};
pub use error::{Error, ParseErrorKind, Result};
pub use path::{
    emit_report, run_path, run_path_on, sequential_geometry, write_csv, write_json, DataSource,
    Grid, Lambda0Policy, OutputFormat, PathConfig, PathReport, PathRow, CSV_HEADER,
};
pub use screening::{
    no_screening, rejection_ratio, slores, strong_rule, Rule, ScreenResult, Slores,
};
pub use solver::{
    duality_gap, fit, kkt_check, margins, primal_objective, raw_dual, recover_dual, zero_threshold,
    DualRecovery, FitOptions, KktReport, PrimalSolution,
};
pub use ubp::{
    bound_feature, bound_feature_with, oracle_bound, BoundCase, BoundContext, BoundResult,
    SideBound,
};
