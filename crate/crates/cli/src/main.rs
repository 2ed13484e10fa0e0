//! `circex`: simulate random circulant matrices and check their extremal
//! singular values against the limit laws.
//!
//! Exit codes: 0 success or all checks passed, 1 runtime/I-O error or a
//! failed check, 2 usage or validation error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circex::checks::{run_checks, CheckDepth, CheckOptions};
use circex::generators::{DistributionKind, DistributionSpec, DEFAULT_ETA, DEFAULT_STUDENT_DF};
use circex::harness::{
    self, load, persist, DimensionResult, ExperimentConfig, HarnessError, PersistFormat, Suite,
    VerifyOptions,
};
use circex::laws::{power_law_cdfs, PowerLaws};
use circex::stats::{joint_ecdf, quantile_grid, EmpiricalSample};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "circex", version, about = "Extremal singular values of random circulant matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated simulations and write one row per replication.
    Simulate(SimulateArgs),
    /// Compare a rows file against the limit laws.
    Test(TestArgs),
    /// Run the built-in oracle and property checks.
    OracleCheck(OracleArgs),
    /// Emit plotting data (ECDF, QQ, joint heat map) from a rows file.
    PlotData(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Gaussian,
    Rademacher,
    Uniform,
    ExpCentered,
    StudentT,
}

#[derive(Args)]
struct SimulateArgs {
    /// Matrix dimension; repeat for several dimensions.
    #[arg(long = "n", required = true, value_name = "N")]
    dimensions: Vec<usize>,
    /// Entry distribution.
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: Dist,
    /// Lyapunov exponent delta (default 0.5 for student-t, 1 otherwise).
    #[arg(long)]
    delta: Option<f64>,
    /// Degrees of freedom for student-t entries.
    #[arg(long, default_value_t = DEFAULT_STUDENT_DF)]
    df: f64,
    /// Replications per dimension.
    #[arg(long)]
    reps: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rows file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write a per-dimension summary file.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Study C^p instead of C.
    #[arg(long, default_value_t = 1)]
    power: u32,
    /// Exclude k = 0 from the extremal singular values.
    #[arg(long)]
    no_zero_index: bool,
    /// Truncate and recenter entries at level n^(1/(2+delta)).
    #[arg(long)]
    truncate: bool,
    /// Add the vanishing Gaussian perturbation to the entries.
    #[arg(long)]
    smooth: bool,
    /// Smoothing exponent slack eta in (0, 1).
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, env = "CIRCEX_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    /// Rows file written by `simulate`.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Suite to run; repeat for several. One of: marginal_min, marginal_max,
    /// kappa, joint, independence, gaussian_exact, power.
    #[arg(long = "suite", required = true, value_parser = parse_suite)]
    suites: Vec<Suite>,
    /// Threshold override as suite=value; repeatable.
    #[arg(long = "threshold", value_parser = parse_threshold, value_name = "SUITE=VALUE")]
    thresholds: Vec<(Suite, f64)>,
    /// Side of the quantile grid for joint suites.
    #[arg(long, default_value_t = 5)]
    grid: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ten random inputs per transform length and 2e4-point simulations (default).
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// A hundred random inputs per transform length and 1e5-point simulations.
    #[arg(long)]
    full: bool,
    /// Flip the sign of the fast transform to demonstrate the checks fail.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Rows file written by `simulate`.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// One of: ecdf-min, ecdf-max, ecdf-kappa, qq-min, qq-max, qq-kappa, joint-heat.
    #[arg(long)]
    what: String,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Dimension to plot; required when the file holds several.
    #[arg(long = "n")]
    dimension: Option<usize>,
    /// Side of the joint-heat grid.
    #[arg(long, default_value_t = 20)]
    grid: usize,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_threshold(s: &str) -> Result<(Suite, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected SUITE=VALUE, got `{s}`"))?;
    let value: f64 = value
        .parse()
        .map_err(|_| format!("bad threshold value `{value}`"))?;
    if value.is_nan() || value < 0.0 {
        return Err(format!("threshold must be non-negative, got {value}"));
    }
    Ok((name.parse()?, value))
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Test(args) => test(args),
        Command::OracleCheck(args) => oracle_check(args),
        Command::PlotData(args) => plot_data(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn flag_for(field: &str) -> &'static str {
    match field {
        "dimensions" => "--n",
        "replications" => "--reps",
        "power" => "--power",
        "workers" => "--workers",
        "eta" => "--eta",
        _ => "--delta/--df",
    }
}

fn distribution(args: &SimulateArgs) -> Result<DistributionSpec, Failure> {
    let kind = match args.dist {
        Dist::Gaussian => DistributionKind::StandardGaussian,
        Dist::Rademacher => DistributionKind::Rademacher,
        Dist::Uniform => DistributionKind::UniformStandardized,
        Dist::ExpCentered => DistributionKind::ExponentialCentered,
        Dist::StudentT => DistributionKind::StudentTStandardized { df: args.df },
    };
    let delta = args.delta.unwrap_or_else(|| kind.default_delta());
    DistributionSpec::new(kind, delta).map_err(|e| Failure::usage(format!("--delta/--df: {e}")))
}

fn simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let mut config = ExperimentConfig::new(
        args.dimensions.clone(),
        distribution(&args)?,
        args.reps,
        args.seed,
    );
    config.include_zero_index = !args.no_zero_index;
    config.power_p = args.power;
    config.apply_truncation = args.truncate;
    config.apply_smoothing = args.smooth;
    config.eta = args.eta;
    config.workers = args.workers;
    if let Err(HarnessError::InvalidConfig { field, reason }) = config.validate() {
        return Err(Failure::usage(format!("{}: {reason}", flag_for(field))));
    }

    let result = harness::run(&config).map_err(|e| Failure::runtime(e.to_string()))?;
    persist(&result, &args.out, PersistFormat::Rows)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.out.display())))?;
    if let Some(path) = &args.summary {
        persist(&result, path, PersistFormat::Summary)
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    }
    let rows: usize = result.dimensions.iter().map(|d| d.records.len()).sum();
    println!("wrote {rows} rows to {}", args.out.display());
    for d in &result.dimensions {
        println!("n={} replications={} undefined_kappa={}", d.n, d.records.len(), d.undefined_count());
    }
    eprintln!("wall time {:.2?}", result.wall_time);
    Ok(0)
}

fn load_rows(path: &Path) -> Result<harness::ExperimentResult, Failure> {
    load(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn test(args: TestArgs) -> Result<u8, Failure> {
    let result = load_rows(&args.input)?;
    let options = VerifyOptions {
        thresholds: args.thresholds.into_iter().collect::<BTreeMap<_, _>>(),
        grid_size: args.grid,
    };
    // check every requested suite before printing anything
    for &suite in &args.suites {
        harness::check_suite(&result.config, suite).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let mut all_pass = true;
    for &suite in &args.suites {
        let reports = harness::verify(&result, suite, &options).map_err(|e| match e {
            HarnessError::SuiteMismatch { .. } | HarnessError::InvalidConfig { .. } => {
                Failure::usage(e.to_string())
            }
            other => Failure::runtime(other.to_string()),
        })?;
        for report in reports {
            all_pass &= report.pass;
            println!("{report}");
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn oracle_check(args: OracleArgs) -> Result<u8, Failure> {
    let depth = if args.full { CheckDepth::Full } else { CheckDepth::Quick };
    let options = CheckOptions {
        seed: args.seed,
        depth,
        inject_fault: args.inject_fault,
    };
    let report = run_checks(&options);
    print!("{report}");
    match report.first_failure() {
        None => Ok(0),
        Some(failed) => Err(Failure::runtime(format!("oracle check failed: {}", failed.name))),
    }
}

#[derive(Clone, Copy)]
enum Statistic {
    Min,
    Max,
    Kappa,
}

enum Plot {
    Ecdf(Statistic),
    Qq(Statistic),
    JointHeat,
}

fn parse_plot(what: &str) -> Option<Plot> {
    Some(match what {
        "ecdf-min" => Plot::Ecdf(Statistic::Min),
        "ecdf-max" => Plot::Ecdf(Statistic::Max),
        "ecdf-kappa" => Plot::Ecdf(Statistic::Kappa),
        "qq-min" => Plot::Qq(Statistic::Min),
        "qq-max" => Plot::Qq(Statistic::Max),
        "qq-kappa" => Plot::Qq(Statistic::Kappa),
        "joint-heat" => Plot::JointHeat,
        _ => return None,
    })
}

fn statistic_sample(
    dim: &DimensionResult,
    config: &ExperimentConfig,
    stat: Statistic,
) -> EmpiricalSample {
    match stat {
        Statistic::Min => dim.min_sample(config),
        Statistic::Max => dim.max_sample(config),
        Statistic::Kappa => dim.kappa_sample(config),
    }
}

fn law_cdf(laws: &PowerLaws, stat: Statistic, x: f64) -> f64 {
    match stat {
        Statistic::Min => laws.min_cdf(x),
        Statistic::Max => laws.max_cdf(x),
        Statistic::Kappa => laws.kappa_cdf(x),
    }
}

fn law_quantile(laws: &PowerLaws, stat: Statistic, q: f64) -> f64 {
    match stat {
        Statistic::Min => laws.min_quantile(q),
        Statistic::Max => laws.max_quantile(q),
        Statistic::Kappa => laws.kappa_quantile(q),
    }
}

fn plot_data(args: PlotArgs) -> Result<u8, Failure> {
    let plot = parse_plot(&args.what)
        .ok_or_else(|| Failure::runtime(format!("unknown --what `{}`", args.what)))?;
    let result = load_rows(&args.input)?;
    let config = &result.config;
    let dim = match args.dimension {
        Some(n) => result
            .dimension(n)
            .ok_or_else(|| Failure::usage(format!("--n: dimension {n} is not in the file")))?,
        None if result.dimensions.len() == 1 => &result.dimensions[0],
        None => return Err(Failure::usage("--n: the file holds several dimensions; pick one")),
    };
    let laws = power_law_cdfs(config.power_p).map_err(|e| Failure::runtime(e.to_string()))?;

    let mut lines = Vec::new();
    match plot {
        Plot::Ecdf(stat) => {
            let sample = statistic_sample(dim, config, stat);
            let total = sample.len() as f64;
            lines.push("x,empirical,theoretical".to_string());
            for (i, &x) in sample.values().iter().enumerate() {
                let f = (i + 1) as f64 / total;
                lines.push(format!("{x:.16e},{f:.16e},{:.16e}", law_cdf(&laws, stat, x)));
            }
        }
        Plot::Qq(stat) => {
            let sample = statistic_sample(dim, config, stat);
            let total = sample.len() as f64;
            lines.push("theoretical,sample".to_string());
            for (i, &x) in sample.values().iter().enumerate() {
                let q = (i as f64 + 0.5) / total;
                lines.push(format!("{:.16e},{x:.16e}", law_quantile(&laws, stat, q)));
            }
        }
        Plot::JointHeat => {
            if args.grid == 0 {
                return Err(Failure::usage("--grid: must be at least 1"));
            }
            let mins = dim.min_values();
            let maxs = dim.norm_max_values();
            lines.push("x,y,empirical,theoretical".to_string());
            let grid = quantile_grid(
                args.grid,
                |q| laws.min_quantile(q),
                |q| laws.max_quantile(q),
            );
            for (x, y) in grid {
                let e = joint_ecdf(&mins, &maxs, x, y);
                lines.push(format!("{x:.16e},{y:.16e},{e:.16e},{:.16e}", laws.joint_cdf(x, y)));
            }
        }
    }
    write_lines(&args.out, &lines)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.out.display())))?;
    println!("wrote {} rows to {}", lines.len() - 1, args.out.display());
    Ok(0)
}

fn write_lines(path: &Path, lines: &[String]) -> std::io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()
}
