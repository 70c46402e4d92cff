//! Regularization-path experiments: sweep a `λ/λ_max` grid, screen with each
//! rule, solve the reduced problem, and audit against the full solution.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{load_svmlight_with_dim, Dataset, SynthSpec};
use crate::dual::{build_geometry_with, lambda_max, DualPoint, ScreeningGeometry};
use crate::error::{Error, Result};
use crate::screening::{no_screening, strong_rule, Rule, ScreenResult, Slores};
use crate::solver::{fit, zero_threshold, FitOptions, PrimalSolution, DEFAULT_TOL_GAP};

/// CSV header of a path report.
pub const CSV_HEADER: [&str; 10] = [
    "lambda_ratio",
    "rule",
    "n_discarded",
    "n_zero",
    "rejection_ratio",
    "screen_ms",
    "solve_ms",
    "solve_ms_unscreened",
    "gap",
    "safety_violations",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Svmlight { path: PathBuf, dim: Option<usize> },
    Synthetic(SynthSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Svmlight { path, dim } => load_svmlight_with_dim(path, *dim),
            DataSource::Synthetic(spec) => spec.generate(),
        }
    }

    /// Parses `m,p,density,corr`.
    pub fn parse_synthetic(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let bad = || {
            Error::InvalidParameter(format!(
                "synthetic problem `{text}` is not m,p,density,corr"
            ))
        };
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(DataSource::Synthetic(SynthSpec {
            m: parts[0].parse().map_err(|_| bad())?,
            p: parts[1].parse().map_err(|_| bad())?,
            density: parts[2].parse().map_err(|_| bad())?,
            correlation: parts[3].parse().map_err(|_| bad())?,
            seed,
        }))
    }
}

/// `count` ratios evenly spaced on `[lo, hi]`, swept from `hi` down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            lo: 0.1,
            hi: 0.95,
            count: 86,
        }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < lo <= hi < 1, got lo = {}, hi = {}",
                self.lo, self.hi
            )));
        }
        if self.count == 0 {
            return Err(Error::InvalidParameter(
                "grid count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Ratios in descending order. A single-point grid is `[hi]`.
    pub fn ratios(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.hi];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .rev()
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / n)
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Parses `lo:hi:count`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid `{s}` is not lo:hi:count"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let grid = Grid {
            lo: parts[0].parse().map_err(|_| bad())?,
            hi: parts[1].parse().map_err(|_| bad())?,
            count: parts[2].parse().map_err(|_| bad())?,
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// How the reference point `(λ0, θ0)` is chosen at each grid value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lambda0Policy {
    /// `λ0 = λ_max` with the closed-form `θ_max`; exact.
    #[default]
    LambdaMax,
    /// `λ0` is the previous grid value and `θ0` the dual recovered from that
    /// solve. Only approximately safe, since `θ0` is not an exact optimum.
    Sequential,
}

impl FromStr for Lambda0Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "lambda_max" => Ok(Lambda0Policy::LambdaMax),
            "sequential" => Ok(Lambda0Policy::Sequential),
            other => Err(Error::InvalidParameter(format!(
                "lambda0 policy `{other}` is not max or sequential"
            ))),
        }
    }
}

impl fmt::Display for Lambda0Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lambda0Policy::LambdaMax => "max",
            Lambda0Policy::Sequential => "sequential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "format `{other}` is not csv or json"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub source: DataSource,
    pub grid: Grid,
    pub rules: Vec<Rule>,
    pub lambda0: Lambda0Policy,
    pub tol_gap: f64,
    /// Seeds the row subsampling of repeated runs.
    pub seed: u64,
    pub repeats: usize,
    /// Fraction of each class kept per repeat; `1.0` uses all samples.
    pub subsample: f64,
    /// When false all timing columns are written as zero, making reports
    /// byte-reproducible.
    pub record_timings: bool,
}

impl PathConfig {
    pub fn new(source: DataSource) -> Self {
        PathConfig {
            source,
            grid: Grid::default(),
            rules: vec![Rule::Slores, Rule::Strong],
            lambda0: Lambda0Policy::default(),
            tol_gap: DEFAULT_TOL_GAP,
            seed: 0,
            repeats: 1,
            subsample: 1.0,
            record_timings: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.rules.is_empty() {
            return Err(Error::InvalidParameter("no screening rule selected".into()));
        }
        if !(self.tol_gap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol {:e} must be positive",
                self.tol_gap
            )));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "subsample {} not in (0, 1]",
                self.subsample
            )));
        }
        Ok(())
    }
}

/// One `(λ, rule)` row. With repeats, counts are rounded means, timings and
/// ratios are means, `gap` is the maximum and `safety_violations` the sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRow {
    pub lambda_ratio: f64,
    pub rule: Rule,
    pub n_discarded: usize,
    pub n_zero: usize,
    pub rejection_ratio: Option<f64>,
    pub screen_ms: f64,
    pub solve_ms: f64,
    pub solve_ms_unscreened: f64,
    pub gap: f64,
    pub safety_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub rows: Vec<PathRow>,
    pub m: usize,
    pub p: usize,
    pub lambda_max: f64,
    /// True when Slores ran from sequential reference points.
    pub approximate_safe: bool,
}

impl PathReport {
    /// Safety violations summed over Slores rows.
    pub fn slores_violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.rule == Rule::Slores)
            .map(|r| r.safety_violations)
            .sum()
    }

    pub fn rows_for(&self, rule: Rule) -> impl Iterator<Item = &PathRow> {
        self.rows.iter().filter(move |r| r.rule == rule)
    }
}

pub fn run_path(cfg: &PathConfig) -> Result<PathReport> {
    cfg.validate()?;
    let ds = cfg.source.load()?;
    run_path_on(&ds, cfg)
}

/// Runs the experiment on an already loaded dataset; `cfg.source` is ignored.
pub fn run_path_on(ds: &Dataset, cfg: &PathConfig) -> Result<PathReport> {
    cfg.validate()?;
    let mut rules = cfg.rules.clone();
    rules.sort();
    rules.dedup();
    let lm = lambda_max(ds)?;

    if cfg.repeats == 1 && cfg.subsample == 1.0 {
        let rows = run_single(ds, cfg, &rules)?;
        return Ok(PathReport {
            rows,
            m: ds.m(),
            p: ds.p(),
            lambda_max: lm.lambda_max,
            approximate_safe: cfg.lambda0 == Lambda0Policy::Sequential,
        });
    }

    let mut runs = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let sub = stratified_subsample(ds, cfg.subsample, cfg.seed.wrapping_add(r as u64))?;
        runs.push(run_single(&sub, cfg, &rules)?);
    }
    Ok(PathReport {
        rows: average_rows(&runs),
        m: ds.m(),
        p: ds.p(),
        lambda_max: lm.lambda_max,
        approximate_safe: cfg.lambda0 == Lambda0Policy::Sequential,
    })
}

/// Keeps `⌈frac · n_c⌉` samples of each class, chosen uniformly.
pub fn stratified_subsample(ds: &Dataset, frac: f64, seed: u64) -> Result<Dataset> {
    if frac >= 1.0 {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for class in [1.0, -1.0] {
        let members: Vec<usize> = (0..ds.m()).filter(|&i| ds.labels()[i] == class).collect();
        let take = ((members.len() as f64 * frac).ceil() as usize).clamp(1, members.len());
        keep.extend(
            index::sample(&mut rng, members.len(), take)
                .into_iter()
                .map(|k| members[k]),
        );
    }
    keep.sort_unstable();
    ds.select_rows(&keep)
}

fn average_rows(runs: &[Vec<PathRow>]) -> Vec<PathRow> {
    let n = runs.len() as f64;
    let mut out = runs[0].clone();
    for (k, row) in out.iter_mut().enumerate() {
        let all: Vec<&PathRow> = runs.iter().map(|r| &r[k]).collect();
        let mean = |f: &dyn Fn(&PathRow) -> f64| all.iter().map(|r| f(r)).sum::<f64>() / n;
        row.n_discarded = mean(&|r| r.n_discarded as f64).round() as usize;
        row.n_zero = mean(&|r| r.n_zero as f64).round() as usize;
        let ratios: Vec<f64> = all.iter().filter_map(|r| r.rejection_ratio).collect();
        row.rejection_ratio = if ratios.is_empty() {
            None
        } else {
            Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
        };
        row.screen_ms = mean(&|r| r.screen_ms);
        row.solve_ms = mean(&|r| r.solve_ms);
        row.solve_ms_unscreened = mean(&|r| r.solve_ms_unscreened);
        row.gap = all.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
        row.safety_violations = all.iter().map(|r| r.safety_violations).sum();
    }
    out
}

/// Screening state carried along the path for one rule.
struct RuleState {
    rule: Rule,
    /// Slores screener at `λ_max`, built lazily.
    fixed: Option<Slores>,
    /// Whether a failed geometry has already been reported.
    geometry_failed: bool,
    prev: Option<PrimalSolution>,
}

fn run_single(ds: &Dataset, cfg: &PathConfig, rules: &[Rule]) -> Result<Vec<PathRow>> {
    let lm = lambda_max(ds)?;
    let opts = FitOptions::with_tol(cfg.tol_gap);
    let ms = |t: Instant| {
        if cfg.record_timings {
            t.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };

    let mut states: Vec<RuleState> = rules
        .iter()
        .map(|&rule| RuleState {
            rule,
            fixed: None,
            geometry_failed: false,
            prev: None,
        })
        .collect();
    let mut prev_full: Option<PrimalSolution> = None;
    let mut prev_lambda = lm.lambda_max;
    let mut rows = Vec::new();

    for ratio in cfg.grid.ratios() {
        let lambda = ratio * lm.lambda_max;
        let step_err = |rule: &str, e: Error| Error::PathStep {
            ratio,
            rule: rule.into(),
            source: Box::new(e),
        };

        let start = Instant::now();
        let full =
            fit(ds, lambda, None, prev_full.as_ref(), &opts).map_err(|e| step_err("full", e))?;
        let full_ms = ms(start);
        let tau = zero_threshold(&full.beta);
        let n_zero = full.beta.iter().filter(|b| b.abs() <= tau).count();

        for st in states.iter_mut() {
            let name = st.rule.name();
            if st.rule == Rule::None {
                rows.push(PathRow {
                    lambda_ratio: ratio,
                    rule: Rule::None,
                    n_discarded: 0,
                    n_zero,
                    rejection_ratio: if n_zero == 0 { None } else { Some(0.0) },
                    screen_ms: 0.0,
                    solve_ms: full_ms,
                    solve_ms_unscreened: full_ms,
                    gap: full.gap,
                    safety_violations: 0,
                });
                continue;
            }

            let start = Instant::now();
            let screen = screen_step(ds, st, cfg.lambda0, lambda, prev_lambda, &lm)
                .map_err(|e| step_err(name, e))?;
            let screen_ms = ms(start);

            let start = Instant::now();
            let sol = fit(ds, lambda, Some(&screen.kept), st.prev.as_ref(), &opts)
                .map_err(|e| step_err(name, e))?;
            let solve_ms = ms(start);

            let violations = screen
                .discarded
                .iter()
                .filter(|&&j| full.beta[j].abs() > tau)
                .count();
            if violations > 0 {
                log::warn!("{name}: {violations} active features discarded at ratio {ratio}");
            }
            rows.push(PathRow {
                lambda_ratio: ratio,
                rule: st.rule,
                n_discarded: screen.discarded.len(),
                n_zero,
                rejection_ratio: if n_zero == 0 {
                    None
                } else {
                    Some(screen.discarded.len() as f64 / n_zero as f64)
                },
                screen_ms,
                solve_ms,
                solve_ms_unscreened: full_ms,
                gap: sol.gap,
                safety_violations: violations,
            });
            st.prev = Some(sol);
        }
        prev_full = Some(full);
        prev_lambda = lambda;
    }
    Ok(rows)
}

fn screen_step(
    ds: &Dataset,
    st: &mut RuleState,
    policy: Lambda0Policy,
    lambda: f64,
    prev_lambda: f64,
    lm: &crate::dual::LambdaMax,
) -> Result<ScreenResult> {
    let sequential = policy == Lambda0Policy::Sequential && st.prev.is_some();
    match st.rule {
        Rule::None => Ok(no_screening(ds, lambda)),
        Rule::Strong => {
            if sequential {
                let prev = st.prev.as_ref().expect("checked above");
                Ok(strong_rule(ds, lambda, prev_lambda, &prev.theta_raw))
            } else {
                Ok(strong_rule(ds, lambda, lm.lambda_max, &lm.theta_max))
            }
        }
        Rule::Slores => {
            if sequential {
                let prev = st.prev.as_ref().expect("checked above");
                let geom = sequential_geometry(ds, prev, lm.lambda_max);
                return match geom.and_then(|g| Slores::new(ds, g)) {
                    Ok(s) => s.screen(lambda),
                    Err(e) => {
                        log::warn!("sequential geometry failed ({e}); keeping all features");
                        Ok(keep_all(ds, lambda, prev_lambda))
                    }
                };
            }
            if st.fixed.is_none() && !st.geometry_failed {
                let built =
                    build_geometry_with(ds, lm.lambda_max, lm.theta_max.clone(), lm.lambda_max)
                        .and_then(|g| Slores::new(ds, g));
                match built {
                    Ok(s) => st.fixed = Some(s),
                    Err(e) => {
                        log::warn!("screening geometry failed ({e}); keeping all features");
                        st.geometry_failed = true;
                    }
                }
            }
            match &st.fixed {
                Some(s) => s.screen(lambda),
                None => Ok(keep_all(ds, lambda, lm.lambda_max)),
            }
        }
    }
}

fn keep_all(ds: &Dataset, lambda: f64, lambda0: f64) -> ScreenResult {
    let mut res = no_screening(ds, lambda);
    res.rule = Rule::Slores;
    res.lambda0 = lambda0;
    res
}

/// Geometry at the previous grid point from its recovered dual.
///
/// The residuals are re-centred so `⟨θ, b⟩ = 0` and scaled so that
/// `‖X̄ᵀθ‖∞ = mλ0` holds exactly over all features, which guarantees a
/// nonempty active set.
pub fn sequential_geometry(
    ds: &Dataset,
    prev: &PrimalSolution,
    lambda_max: f64,
) -> Result<ScreeningGeometry> {
    let lambda0 = prev.lambda;
    let b = ds.labels();
    let m = ds.m() as f64;
    let mut theta = prev.theta_raw.as_slice().to_vec();
    let shift = -theta.iter().zip(b).map(|(t, b)| t * b).sum::<f64>() / m;
    for (t, &bi) in theta.iter_mut().zip(b) {
        *t += shift * bi;
    }
    let max_dot = ds
        .xbar_t_dot(&theta)
        .iter()
        .fold(0.0f64, |a, d| a.max(d.abs()));
    if max_dot == 0.0 {
        return Err(Error::Degenerate(
            "previous dual is orthogonal to every column".into(),
        ));
    }
    let s = m * lambda0 / max_dot;
    for t in theta.iter_mut() {
        *t *= s;
    }
    build_geometry_with(ds, lambda0, DualPoint::new(theta)?, lambda_max)
}

/// Writes the CSV report: fixed header, floats in shortest round-trip
/// scientific notation, absent ratios as empty fields.
pub fn write_csv<W: Write>(rows: &[PathRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.lambda_ratio),
            r.rule.name().to_string(),
            r.n_discarded.to_string(),
            r.n_zero.to_string(),
            r.rejection_ratio
                .map(|v| format!("{v:e}"))
                .unwrap_or_default(),
            format!("{:e}", r.screen_ms),
            format!("{:e}", r.solve_ms),
            format!("{:e}", r.solve_ms_unscreened),
            format!("{:e}", r.gap),
            r.safety_violations.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes the rows as a JSON array of objects with the CSV field names.
pub fn write_json<W: Write>(rows: &[PathRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

/// Writes `path.csv` or `path.json` into `dir`, creating it if needed.
pub fn emit_report(report: &PathReport, format: OutputFormat, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file = dir.join(match format {
        OutputFormat::Csv => "path.csv",
        OutputFormat::Json => "path.json",
    });
    let handle = fs::File::create(&file).map_err(|e| Error::io(&file, e))?;
    let mut buf = std::io::BufWriter::new(handle);
    match format {
        OutputFormat::Csv => write_csv(&report.rows, &mut buf)?,
        OutputFormat::Json => write_json(&report.rows, &mut buf)?,
    }
    buf.flush().map_err(|e| Error::io(&file, e))?;
    Ok(file)
}
