//! Reference solutions: per-step saddle points, the unregularized comparator,
//! and an independent grid search for small problems.

mod apg;
mod grid;
mod p0;
mod saddle;

use std::ops::RangeInclusive;

use nalgebra::DVector;

pub use grid::{brute_force_grid, GRID_FEASIBILITY_TOL};
pub use p0::{solve_p0, P0Solution, CONTINUATION};
pub use saddle::{solve_saddle_point, SaddleOptions, SaddlePoint};

use crate::engine::stack;
use crate::error::{Error, Result};
use crate::problem::{AlgorithmConfig, Case, LinearPlant, TimeVaryingProblem};

/// Default accuracy of numerically computed reference points.
pub const ORACLE_TOL: f64 = 1e-7;

/// How a reference trajectory was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    /// Closed form supplied by the scenario.
    Analytic,
    /// Unregularized comparator by vanishing regularization.
    Continuation,
    /// Saddle point of the regularized Lagrangian.
    Saddle,
}

/// Reference points for consecutive steps `start ..= start + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub start: usize,
    pub source: Comparator,
    pub x_star: Vec<DVector<f64>>,
    pub lambda_star: Vec<DVector<f64>>,
    /// `sigma[j] = ||x*(start + j + 1) - x*(start + j)||`.
    pub sigma: Vec<f64>,
    /// Same for the stacked `z* = (x*, lambda*)`.
    pub sigma_bar: Vec<f64>,
}

impl OracleTrajectory {
    fn from_points(start: usize, source: Comparator, pts: Vec<(DVector<f64>, DVector<f64>)>) -> Self {
        let (x_star, lambda_star): (Vec<_>, Vec<_>) = pts.into_iter().unzip();
        let sigma = x_star.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
        let sigma_bar = x_star
            .windows(2)
            .zip(lambda_star.windows(2))
            .map(|(x, l)| ((&x[1] - &x[0]).norm_squared() + (&l[1] - &l[0]).norm_squared()).sqrt())
            .collect();
        Self {
            start,
            source,
            x_star,
            lambda_star,
            sigma,
            sigma_bar,
        }
    }

    pub fn len(&self) -> usize {
        self.x_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_star.is_empty()
    }

    pub fn end(&self) -> usize {
        self.start + self.len() - 1
    }

    pub fn covers(&self, k: usize) -> bool {
        k >= self.start && k <= self.end()
    }

    pub fn z_star(&self, k: usize) -> DVector<f64> {
        let j = k - self.start;
        stack(&self.x_star[j], &self.lambda_star[j])
    }

    /// `h^(k)(x*(k))` for every covered step.
    pub fn h_star(&self, problem: &TimeVaryingProblem, plant: &LinearPlant) -> Result<Vec<f64>> {
        self.x_star
            .iter()
            .enumerate()
            .map(|(j, x)| problem.eval_h(plant, x, self.start + j))
            .collect()
    }

    /// Largest recorded `sigma_bar`.
    pub fn sigma_bar_max(&self) -> f64 {
        self.sigma_bar.iter().copied().fold(0.0, f64::max)
    }
}

/// Reference point at one step for the given configuration.
///
/// Case 1 uses the unregularized comparator; Case 2 uses the saddle point of
/// the regularized Lagrangian on the configured dual set.
pub fn reference_point(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    k: usize,
    tol: f64,
    warm: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, DVector<f64>, Comparator)> {
    let model = plant.model_only();
    let (p, d) = match config.case {
        Case::Case1 => (0.0, 0.0),
        Case::Case2 => (config.p, config.d),
    };
    let radius = match config.case {
        Case::Case1 => f64::INFINITY,
        Case::Case2 => config.dual_radius(),
    };
    if let Some(sol) = problem.analytic().and_then(|a| a.solve(k, p, d, radius)) {
        return Ok((sol.0, sol.1, Comparator::Analytic));
    }
    match config.case {
        Case::Case1 => {
            let s = p0::solve_p0_from(problem, &model, k, tol, warm)?;
            Ok((s.x, s.lambda, Comparator::Continuation))
        }
        Case::Case2 => {
            let mut opts = SaddleOptions::new(p, d).radius(radius).tol(tol);
            if let Some(w) = warm {
                opts = opts.warm_start(w.clone());
            }
            let s = solve_saddle_point(problem, &model, k, &opts)?;
            Ok((s.x, s.lambda, Comparator::Saddle))
        }
    }
}

/// Reference trajectory over `steps`, warm-starting each solve from the previous one.
pub fn optimal_window(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    steps: RangeInclusive<usize>,
    tol: f64,
) -> Result<OracleTrajectory> {
    let start = *steps.start();
    if steps.is_empty() {
        return Err(Error::InvalidConfig("empty oracle window".into()));
    }
    let mut pts = Vec::with_capacity(steps.end() - start + 1);
    let mut source = Comparator::Analytic;
    let mut warm: Option<DVector<f64>> = None;
    for k in steps {
        let (x, l, s) = reference_point(problem, plant, config, k, tol, warm.as_ref())?;
        if s != Comparator::Analytic {
            source = s;
        }
        warm = Some(x.clone());
        pts.push((x, l));
    }
    Ok(OracleTrajectory::from_points(start, source, pts))
}

/// Reference trajectory for steps `0 ..= horizon`.
pub fn optimal_trajectory(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    horizon: usize,
) -> Result<OracleTrajectory> {
    optimal_window(problem, plant, config, 0..=horizon, ORACLE_TOL)
}
