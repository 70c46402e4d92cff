//! `slores` command-line tool: path experiments, single-λ screening and
//! solving, and an invariant audit on a dataset.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slores::{
    bound_feature_with, emit_report, fit, geometry_at_lambda_max, lambda_max, no_screening,
    run_path_on, strong_rule, zero_threshold, BoundContext, DataSource, Dataset, Error, FitOptions,
    Grid, Lambda0Policy, OutputFormat, PathConfig, Rule, ScreenResult, Slores,
};

const EXIT_UNSAFE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "slores",
    version,
    about = "Safe feature screening for l1-regularized logistic regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a lambda/lambda_max grid and write per-(lambda, rule) metrics.
    Path(PathArgs),
    /// Screen at one lambda and print the kept features.
    Screen(PointArgs),
    /// Solve at one lambda, optionally after screening.
    Solve(PointArgs),
    /// Check safety, ball containment, bound soundness and KKT along a grid.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// svmlight/libsvm file.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Synthetic problem `m,p,density,corr`.
    #[arg(long, value_name = "M,P,DENSITY,CORR")]
    synthetic: Option<String>,
}

#[derive(Args, Clone)]
struct DataArgs {
    #[command(flatten)]
    source: Source,
    /// Feature count for svmlight input, if larger than the largest index.
    #[arg(long)]
    dim: Option<usize>,
    /// Seed of the synthetic generator and of subsampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DataArgs {
    fn source(&self) -> slores::Result<DataSource> {
        match (&self.source.data, &self.source.synthetic) {
            (Some(path), _) => Ok(DataSource::Svmlight {
                path: path.clone(),
                dim: self.dim,
            }),
            (None, Some(spec)) => DataSource::parse_synthetic(spec, self.seed),
            (None, None) => Err(Error::InvalidParameter("no data source".into())),
        }
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Grid `lo:hi:count` on the lambda/lambda_max scale.
    #[arg(long, default_value = "0.1:0.95:86", value_parser = parse_grid)]
    grid: Grid,
    /// Comma-separated rules among slores, strong, none.
    #[arg(long, default_value = "slores,strong", value_delimiter = ',')]
    rules: Vec<Rule>,
    /// Reference point: `max` or `sequential`.
    #[arg(long, default_value = "max")]
    lambda0: String,
    /// Duality-gap tolerance of every solve.
    #[arg(long, default_value_t = slores::solver::DEFAULT_TOL_GAP)]
    tol: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// `csv` or `json`.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Number of subsampled repetitions to average.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Fraction of each class kept per repetition.
    #[arg(long, default_value_t = 1.0)]
    subsample: f64,
    /// Write zeros in timing columns so reports are byte-reproducible.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    data: DataArgs,
    /// lambda as a fraction of lambda_max.
    #[arg(long, conflicts_with = "lambda")]
    ratio: Option<f64>,
    /// Absolute lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Screening rule applied first.
    #[arg(long, default_value = "slores")]
    rule: Rule,
    #[arg(long, default_value_t = slores::solver::DEFAULT_TOL_GAP)]
    tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "0.1:0.95:18", value_parser = parse_grid)]
    grid: Grid,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors exit with 1; 2 is reserved for unsafe screening
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Path(a) => cmd_path(a),
        Command::Screen(a) => cmd_screen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_path(a: PathArgs) -> slores::Result<ExitCode> {
    let mut cfg = PathConfig::new(a.data.source()?);
    cfg.grid = a.grid;
    cfg.rules = a.rules;
    cfg.lambda0 = a.lambda0.parse::<Lambda0Policy>()?;
    cfg.tol_gap = a.tol;
    cfg.seed = a.data.seed;
    cfg.repeats = a.repeats;
    cfg.subsample = a.subsample;
    cfg.record_timings = !a.no_timings;
    let format: OutputFormat = a.format.parse()?;
    cfg.validate()?;

    let ds = cfg.source.load()?;
    let report = run_path_on(&ds, &cfg)?;
    let file = emit_report(&report, format, &a.out)?;
    let violations = report.slores_violations();
    eprintln!(
        "{} rows for m = {}, p = {}, lambda_max = {:e}{} -> {}",
        report.rows.len(),
        report.m,
        report.p,
        report.lambda_max,
        if report.approximate_safe {
            " (sequential reference, approximate-safe)"
        } else {
            ""
        },
        file.display()
    );
    if violations > 0 {
        eprintln!("SAFETY VIOLATION: slores discarded {violations} active features");
        return Ok(ExitCode::from(EXIT_UNSAFE));
    }
    Ok(ExitCode::SUCCESS)
}

fn point_lambda(ds: &Dataset, ratio: Option<f64>, lambda: Option<f64>) -> slores::Result<f64> {
    match (ratio, lambda) {
        (_, Some(l)) => Ok(l),
        (Some(r), None) => Ok(r * lambda_max(ds)?.lambda_max),
        (None, None) => Err(Error::InvalidParameter("give --ratio or --lambda".into())),
    }
}

fn screen_at(ds: &Dataset, rule: Rule, lambda: f64) -> slores::Result<ScreenResult> {
    match rule {
        Rule::None => Ok(no_screening(ds, lambda)),
        Rule::Strong => {
            let lm = lambda_max(ds)?;
            Ok(strong_rule(ds, lambda, lm.lambda_max, &lm.theta_max))
        }
        Rule::Slores => Slores::new(ds, geometry_at_lambda_max(ds)?)?.screen(lambda),
    }
}

fn cmd_screen(a: PointArgs) -> slores::Result<ExitCode> {
    let ds = a.data.source()?.load()?;
    let lambda = point_lambda(&ds, a.ratio, a.lambda)?;
    let res = screen_at(&ds, a.rule, lambda)?;
    eprintln!(
        "{}: kept {} of {} features at lambda = {:e} ({:.3} ms)",
        res.rule,
        res.kept.len(),
        res.n_features(),
        lambda,
        res.screen_time.as_secs_f64() * 1e3
    );
    let mut out = std::io::stdout().lock();
    for j in &res.kept {
        writeln!(out, "{j}").map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        })?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(a: PointArgs) -> slores::Result<ExitCode> {
    let ds = a.data.source()?.load()?;
    let lambda = point_lambda(&ds, a.ratio, a.lambda)?;
    let res = screen_at(&ds, a.rule, lambda)?;
    let sol = fit(
        &ds,
        lambda,
        Some(&res.kept),
        None,
        &FitOptions::with_tol(a.tol),
    )?;
    let support = sol.support();
    let mut text = format!(
        "lambda {:e}\nrule {}\nkept {}\nobjective {:e}\ngap {:e}\niterations {}\nintercept {:e}\nnonzeros {}\n",
        lambda,
        res.rule,
        res.kept.len(),
        sol.objective,
        sol.gap,
        sol.iterations,
        sol.c,
        support.len()
    );
    for j in support {
        text.push_str(&format!("{j} {:e}\n", sol.beta[j]));
    }
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> slores::Result<ExitCode> {
    let ds = a.data.source()?.load()?;
    let geom = geometry_at_lambda_max(&ds)?;
    let screener = Slores::new(&ds, geom.clone())?;
    let opts = FitOptions::with_tol(a.tol);
    let m = ds.m() as f64;

    let (mut unsafe_discards, mut ball, mut bound, mut kkt, mut gap) = (0, 0, 0, 0, 0);
    let mut warm = None;
    for ratio in a.grid.ratios() {
        let lambda = ratio * geom.lambda_max;
        let sol = fit(&ds, lambda, None, warm.as_ref(), &opts)?;
        let tau = zero_threshold(&sol.beta);
        let res = screener.screen(lambda)?;
        unsafe_discards += res
            .discarded
            .iter()
            .filter(|&&j| sol.beta[j].abs() > tau)
            .count();

        let r = geom.radius(lambda)?;
        let d2: f64 = sol
            .theta
            .as_slice()
            .iter()
            .zip(geom.theta0.as_slice())
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        if d2 > r * r + 1e-8 {
            ball += 1;
        }
        let ctx = BoundContext::new(&geom, lambda)?;
        let dots = ds.xbar_t_dot(sol.theta.as_slice());
        for (j, st) in screener.table().stats.iter().enumerate() {
            let t = if st.is_zero_projection() {
                0.0
            } else {
                bound_feature_with(j, &ctx, st)?.t
            };
            if dots[j].abs() > t + 1e-7 * m.max(1.0) {
                bound += 1;
            }
        }
        if !slores::kkt_check(&sol, &sol.theta, &ds, lambda).is_satisfied() {
            kkt += 1;
        }
        if sol.gap > a.tol {
            gap += 1;
        }
        warm = Some(sol);
    }
    let n = a.grid.count;
    let line = |name: &str, bad: usize| {
        println!(
            "[{}] {name}: {bad} failures over {n} lambda values",
            if bad == 0 { "ok" } else { "FAIL" }
        );
    };
    line("screening safety", unsafe_discards);
    line("ball containment", ball);
    line("bound soundness", bound);
    line("kkt conditions", kkt);
    line("duality gap", gap);
    if unsafe_discards > 0 {
        return Ok(ExitCode::from(EXIT_UNSAFE));
    }
    if ball + bound + kkt + gap > 0 {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
