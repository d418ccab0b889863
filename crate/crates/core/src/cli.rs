//! Command-line interface. Exit codes: 0 success, 1 usage or configuration
//! error, 2 invariant failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bounds::estimate_constants;
use crate::check::{check_builtin, check_config, CheckReport};
use crate::engine::run_online;
use crate::error::{Error, Result};
use crate::experiment::{analyze, AnalysisOptions, RunReport};
use crate::oracle::optimal_trajectory;
use crate::problem::{AlgorithmConfig, Case, Mode, NoiseModel};
use crate::report::{bounds_text, write_oracle_csv, write_run_outputs};
use crate::scenarios::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tvopt",
    version,
    about = "Feedback-based online primal-dual tracking of time-varying programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write trajectory, metrics and bounds.
    Run(RunArgs),
    /// Compute the reference trajectory only.
    Oracle(RunArgs),
    /// Estimate constants and write the bounds report.
    Bounds(RunArgs),
    /// Run a grid of step sizes and regularizations.
    Sweep(SweepArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Debug, Args, Clone)]
pub struct ScenarioArgs {
    /// Built-in scenario: quadratic, static, routing or feeder.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measurement noise standard deviation.
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Bound on the measurement noise norm.
    #[arg(long)]
    pub noise_cap: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct AlgoArgs {
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    /// Fixed dual radius instead of `alpha^-kappa`.
    #[arg(long)]
    pub dual_radius: Option<f64>,
    #[arg(long, value_parser = ["feedback", "feed-forward"])]
    pub mode: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Skip the reference trajectory and everything that needs it.
    #[arg(long)]
    pub no_oracle: bool,
    /// Samples for the sampled constants.
    #[arg(long, default_value_t = crate::experiment::CONSTANT_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub kappas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub ps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub ds: Vec<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub no_oracle: bool,
}

#[derive(Debug, Args, Clone)]
pub struct CheckArgs {
    /// Limit the suite to one scenario or configuration.
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
}

/// Parse `args` (including the program name) and execute; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) | Error::OracleDiverged { .. } | Error::ProjectionDiverged { .. } => {
            EXIT_INVARIANT
        }
        Error::RunAborted { source, .. } => exit_code(source),
        _ => EXIT_USAGE,
    }
}

fn load(args: &ScenarioArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.scenario, &args.config) {
        (Some(name), None) => ExperimentConfig::builtin(name)?,
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None) => return Err(Error::InvalidConfig("pass --scenario or --config".into())),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "--scenario and --config are exclusive".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    if args.noise_std.is_some() || args.noise_cap.is_some() {
        let std_dev = args.noise_std.unwrap_or(0.0);
        let cap = args.noise_cap.unwrap_or(10.0 * std_dev * (1.0 + std_dev));
        cfg.scenario.noise = Some(NoiseModel::new(std_dev, cap)?);
    }
    Ok(cfg)
}

/// Apply command-line overrides; positive `p` and `d` select the regularized case.
pub fn apply_overrides(mut a: AlgorithmConfig, o: &AlgoArgs) -> Result<AlgorithmConfig> {
    if let Some(v) = o.steps {
        a.horizon = v;
    }
    if let Some(v) = o.alpha {
        a.alpha = v;
    }
    if let Some(v) = o.kappa {
        a.kappa = v;
    }
    if let Some(v) = o.p {
        a.p = v;
    }
    if let Some(v) = o.d {
        a.d = v;
    }
    if o.p.is_some() || o.d.is_some() {
        a.case = if a.p == 0.0 && a.d == 0.0 {
            Case::Case1
        } else {
            Case::Case2
        };
        if a.case == Case::Case1 {
            a.dual_radius_override = None;
        }
    }
    if let Some(r) = o.dual_radius {
        a.dual_radius_override = Some(r);
    }
    if let Some(m) = &o.mode {
        a.mode = if m == "feed-forward" {
            Mode::FeedForward
        } else {
            Mode::Feedback
        };
    }
    a.validate()?;
    Ok(a)
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(args) => {
            let report = simulate(&args, true)?;
            let files = write_run_outputs(&args.out, &report)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::Oracle(args) => {
            let cfg = load(&args.scenario)?;
            let algo = apply_overrides(cfg.algorithm.clone(), &args.algo)?;
            let (problem, plant) = cfg.scenario.build()?;
            let o = optimal_trajectory(&problem, &plant, &algo, algo.horizon)?;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("oracle.csv");
            write_oracle_csv(std::fs::File::create(&path)?, &o)?;
            println!("{}", path.display());
            Ok(EXIT_OK)
        }
        Command::Bounds(args) => {
            let report = simulate(&args, true)?;
            write_run_outputs(&args.out, &report)?;
            print!("{}", bounds_text(&report));
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => sweep(&args),
        Command::Check(args) => {
            let report = if args.scenario.scenario.is_none() && args.scenario.config.is_none() {
                check_builtin(args.steps)?
            } else {
                check_config(&load(&args.scenario)?, args.steps)?
            };
            print_check(&report);
            Ok(if report.passed() { EXIT_OK } else { EXIT_INVARIANT })
        }
    }
}

fn print_check(report: &CheckReport) {
    for item in &report.items {
        println!("{item}");
    }
    let failed = report.items.iter().filter(|i| !i.passed).count();
    println!("{} checks, {failed} failed", report.items.len());
}

fn simulate(args: &RunArgs, bounds: bool) -> Result<RunReport> {
    let cfg = load(&args.scenario)?;
    let algo = apply_overrides(cfg.algorithm.clone(), &args.algo)?;
    let (problem, plant) = cfg.scenario.build()?;
    let traj = run_online(&problem, &plant, &algo, None, None)?;
    let opts = AnalysisOptions {
        oracle: !args.no_oracle,
        bounds: bounds && !args.no_oracle,
        samples: args.samples,
        ..AnalysisOptions::default()
    };
    analyze(&problem, &plant, traj, &opts)
}

/// One sweep row: the configuration key and the summary numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub kappa: f64,
    pub p: f64,
    pub d: f64,
    pub final_regret: Option<f64>,
    pub final_violation: f64,
    pub final_tracking: Option<f64>,
    pub contraction: Option<f64>,
    pub asymptotic_bound: Option<f64>,
}

fn sweep(args: &SweepArgs) -> Result<i32> {
    let cfg = load(&args.scenario)?;
    let (problem, plant) = cfg.scenario.build()?;
    let base = cfg.algorithm.clone();
    let or_base = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let mut grid = Vec::new();
    for &alpha in &args.alphas {
        for &kappa in &or_base(&args.kappas, base.kappa) {
            for &p in &or_base(&args.ps, base.p) {
                for &d in &or_base(&args.ds, base.d) {
                    grid.push((alpha, kappa, p, d));
                }
            }
        }
    }
    let steps = args.steps.unwrap_or(base.horizon);
    let rows: Vec<Result<SweepRow>> = grid
        .par_iter()
        .map(|&(alpha, kappa, p, d)| {
            let mut a = base.clone();
            a.alpha = alpha;
            a.kappa = kappa;
            a.p = p;
            a.d = d;
            a.horizon = steps;
            a.case = if p == 0.0 && d == 0.0 {
                Case::Case1
            } else {
                Case::Case2
            };
            if a.case == Case::Case1 {
                a.dual_radius_override = None;
            }
            a.validate()?;
            let traj = run_online(&problem, &plant, &a, None, None)?;
            let opts = AnalysisOptions {
                oracle: !args.no_oracle,
                bounds: false,
                ..AnalysisOptions::default()
            };
            let report = analyze(&problem, &plant, traj, &opts)?;
            let consts = estimate_constants(&problem, &plant, &a, steps, 500)?;
            let contraction = crate::bounds::contraction_coeff(&consts, alpha);
            let asymptotic = report.oracle.as_ref().and_then(|o| {
                crate::bounds::asymptotic_bound(
                    &consts,
                    alpha,
                    crate::experiment::effective_e_y(&report.trajectory),
                    o.sigma_bar_max(),
                )
                .ok()
            });
            Ok(SweepRow {
                alpha,
                kappa,
                p,
                d,
                final_regret: report.metrics.regret.last().copied(),
                final_violation: report.metrics.violation_max(report.trajectory.len()),
                final_tracking: report.metrics.tracking.last().copied(),
                contraction: (a.case == Case::Case2).then_some(contraction.value),
                asymptotic_bound: asymptotic.filter(|_| a.case == Case::Case2),
            })
        })
        .collect();
    let rows: Vec<SweepRow> = rows.into_iter().collect::<Result<_>>()?;
    write_sweep(&args.out, &rows)?;
    Ok(EXIT_OK)
}

fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "alpha",
        "kappa",
        "p",
        "d",
        "final_regret",
        "final_violation_max",
        "final_tracking_err",
        "contraction",
        "asymptotic_bound",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.alpha.to_string(),
            r.kappa.to_string(),
            r.p.to_string(),
            r.d.to_string(),
            opt(r.final_regret),
            format!("{:.12e}", r.final_violation),
            opt(r.final_tracking),
            opt(r.contraction),
            opt(r.asymptotic_bound),
        ])?;
    }
    w.flush()?;
    println!("{}", path.display());
    Ok(())
}
