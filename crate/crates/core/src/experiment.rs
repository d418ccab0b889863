//! One-call pipeline: simulate, compute the reference trajectory, the
//! empirical metrics and the bound series.

use crate::bounds::{
    bound_record, certifiable, contraction_coeff, estimate_constants, tracking_recursion, BoundRecord,
    ProblemConstants,
};
use crate::engine::{run_online, Trajectory};
use crate::error::Result;
use crate::metrics::{compute_metrics, MetricsRecord};
use crate::oracle::{optimal_window, OracleTrajectory, ORACLE_TOL};
use crate::problem::{AlgorithmConfig, Case, LinearPlant, Mode, TimeVaryingProblem};
use crate::scenarios::ExperimentConfig;

/// Samples used for the sampled constants.
pub const CONSTANT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub oracle: bool,
    pub oracle_tol: f64,
    pub bounds: bool,
    pub samples: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            oracle: true,
            oracle_tol: ORACLE_TOL,
            bounds: true,
            samples: CONSTANT_SAMPLES,
        }
    }
}

impl AnalysisOptions {
    pub fn trajectory_only() -> Self {
        Self {
            oracle: false,
            bounds: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trajectory: Trajectory,
    pub oracle: Option<OracleTrajectory>,
    pub metrics: MetricsRecord,
    pub constants: Option<ProblemConstants>,
    pub bounds: Option<BoundRecord>,
    /// Per-step tracking bound from the contraction recursion; Case 2 only.
    pub tracking_bound: Vec<f64>,
}

/// Output error level the bounds are evaluated at.
pub fn effective_e_y(traj: &Trajectory) -> f64 {
    match traj.config.mode {
        Mode::FeedForward => 0.0,
        Mode::Feedback => traj.realized_e_y,
    }
}

/// Metrics and bounds for an existing trajectory.
pub fn analyze(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    trajectory: Trajectory,
    opts: &AnalysisOptions,
) -> Result<RunReport> {
    let config = trajectory.config.clone();
    let horizon = trajectory.len().saturating_sub(1);
    let oracle = if opts.oracle {
        Some(optimal_window(
            problem,
            plant,
            &config,
            0..=horizon,
            opts.oracle_tol,
        )?)
    } else {
        None
    };
    let metrics = compute_metrics(problem, plant, &trajectory, oracle.as_ref())?;
    let mut report = RunReport {
        trajectory,
        oracle,
        metrics,
        constants: None,
        bounds: None,
        tracking_bound: Vec::new(),
    };
    if opts.bounds {
        let consts = estimate_constants(problem, plant, &config, horizon, opts.samples)?;
        if let Some(o) = &report.oracle {
            certifiable(&report.trajectory);
            let e_y = effective_e_y(&report.trajectory);
            report.bounds = Some(bound_record(
                &consts,
                config.alpha,
                config.kappa,
                &report.metrics.sigma_cum,
                e_y,
                o.sigma_bar_max(),
            ));
            if config.case == Case::Case2 {
                let c = contraction_coeff(&consts, config.alpha).value;
                let pert: Vec<f64> = report
                    .trajectory
                    .records
                    .iter()
                    .map(|r| r.map_perturbation)
                    .collect();
                let s0 = report.metrics.tracking.first().copied().unwrap_or(0.0);
                report.tracking_bound = tracking_recursion(c, config.alpha, s0, &o.sigma_bar, &pert);
            }
        }
        report.constants = Some(consts);
    }
    Ok(report)
}

/// Simulate `config` and analyze the result.
pub fn run_experiment(config: &ExperimentConfig, opts: &AnalysisOptions) -> Result<RunReport> {
    let (problem, plant) = config.scenario.build()?;
    run_and_analyze(&problem, &plant, &config.algorithm, opts)
}

pub fn run_and_analyze(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    opts: &AnalysisOptions,
) -> Result<RunReport> {
    let trajectory = run_online(problem, plant, config, None, None)?;
    analyze(problem, plant, trajectory, opts)
}
