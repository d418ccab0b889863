//! The online primal-dual iteration, in feedback or feed-forward form.
//!
//! One step at index `k` reads the measurement of the current iterate and
//! updates primal and dual variables simultaneously:
//!
//! ```text
//! x+ = Proj_X(k) { (1 - a p) x - a (grad f(x) + C' grad f0(y) + (J(y) C)' lambda) }
//! l+ = Proj_D    { (1 - a d) lambda + a g(y) }
//! ```
//!
//! where `y` is the measurement (feedback) or the model output (feed-forward).

use log::warn;
use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::problem::{AlgorithmConfig, Iterate, LinearPlant, Measurement, Mode, TimeVaryingProblem};
use crate::projections::DualSet;

/// Everything recorded about iterate `z^(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    /// Output consumed by the gradient steps at `k`.
    pub y_hat: DVector<f64>,
    /// Model output `C x + D w(k)`.
    pub y_model: DVector<f64>,
    /// `h^(k)(x^(k))` on the model.
    pub h: f64,
    /// `g^(k)` at the model output.
    pub g: DVector<f64>,
    /// `||y_hat - y_model||`; zero in feed-forward mode.
    pub meas_err: f64,
    /// `||phi(z) - phi_used(z)||`, the perturbation of the saddle map caused by
    /// using `y_hat` in place of the model output.
    pub map_perturbation: f64,
}

impl StepRecord {
    pub fn iterate(&self) -> Iterate {
        Iterate::new(self.k, self.x.clone(), self.lambda.clone())
    }

    /// Stacked `(x, lambda)`.
    pub fn z(&self) -> DVector<f64> {
        self.iterate().stacked()
    }
}

/// Output of [`run_online`]: `horizon + 1` records starting at the initial iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: AlgorithmConfig,
    pub records: Vec<StepRecord>,
    /// Running maximum of the measurement error.
    pub realized_e_y: f64,
    /// Steps whose new dual iterate landed on the spherical boundary of `D`.
    pub dual_boundary_hits: usize,
    /// Whether the run started from `lambda = 0`.
    pub zero_initial_dual: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.h).collect()
    }
}

/// `grad f(x) + C' grad f0(y) + (J(y) C)' lambda + p x`.
pub fn assemble_primal_gradient(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    y_used: &DVector<f64>,
    p: f64,
    k: usize,
) -> Result<DVector<f64>> {
    check_dim("x", problem.n(), x.len())?;
    check_dim("lambda", problem.num_constraints(), lambda.len())?;
    check_dim("y_used", problem.m(), y_used.len())?;
    if lambda.iter().any(|&l| l < 0.0) {
        return Err(Error::Invariant(
            "negative multiplier passed to the primal gradient".into(),
        ));
    }
    let mut out_grad = problem.f0_gradient(y_used, k);
    if problem.num_constraints() > 0 {
        out_grad += problem.g_jacobian(y_used, k).tr_mul(lambda);
    }
    let mut grad = problem.f_gradient(x, k) + plant.c().tr_mul(&out_grad);
    if p != 0.0 {
        grad.axpy(p, x, 1.0);
    }
    Ok(grad)
}

/// The regularized saddle map `phi(z) = (grad_x L_pd, -g(y) + d lambda)` with
/// all output-dependent terms evaluated at `y`.
pub fn saddle_map(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    y: &DVector<f64>,
    p: f64,
    d: f64,
    k: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let primal = assemble_primal_gradient(problem, plant, x, lambda, y, p, k)?;
    let mut dual = -problem.g_values(y, k);
    if d != 0.0 {
        dual.axpy(d, lambda, 1.0);
    }
    Ok((primal, dual))
}

/// Model-based saddle map at `z = (x, lambda)`.
pub fn saddle_map_model(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    p: f64,
    d: f64,
    k: usize,
) -> Result<DVector<f64>> {
    let y = plant.model_output(x, k)?;
    let (a, b) = saddle_map(problem, plant, x, lambda, &y, p, d, k)?;
    Ok(stack(&a, &b))
}

pub(crate) fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(a.len() + b.len());
    z.rows_mut(0, a.len()).copy_from(a);
    z.rows_mut(a.len(), b.len()).copy_from(b);
    z
}

/// Primal update from the iterate at step `k`.
pub fn primal_step(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    iterate: &Iterate,
    y_used: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    let grad = assemble_primal_gradient(problem, plant, &iterate.x, &iterate.lambda, y_used, config.p, k)?;
    let target = &iterate.x - grad * config.alpha;
    problem.project(&target, k)
}

/// Dual update from the iterate at step `k`.
pub fn dual_step(
    problem: &TimeVaryingProblem,
    config: &AlgorithmConfig,
    iterate: &Iterate,
    y_used: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    check_dim("lambda", problem.num_constraints(), iterate.lambda.len())?;
    check_dim("y_used", problem.m(), y_used.len())?;
    let g = problem.g_values(y_used, k);
    let target = &iterate.lambda * (1.0 - config.alpha * config.d) + g * config.alpha;
    Ok(config.dual_set().project(&target))
}

struct Advance {
    next: Iterate,
    record: StepRecord,
}

fn advance(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    iterate: &Iterate,
) -> Result<Advance> {
    let k = iterate.k;
    let Measurement { y_hat, y_model, .. } = plant.measure(&iterate.x, k)?;
    let y_used = match config.mode {
        Mode::Feedback => &y_hat,
        Mode::FeedForward => &y_model,
    };
    let x_next = primal_step(problem, plant, config, iterate, y_used, k)?;
    let lambda_next = dual_step(problem, config, iterate, y_used, k)?;

    let map_perturbation = match config.mode {
        Mode::FeedForward => 0.0,
        Mode::Feedback => {
            let (ap, ad) = saddle_map(
                problem,
                plant,
                &iterate.x,
                &iterate.lambda,
                &y_model,
                config.p,
                config.d,
                k,
            )?;
            let (bp, bd) = saddle_map(
                problem,
                plant,
                &iterate.x,
                &iterate.lambda,
                &y_hat,
                config.p,
                config.d,
                k,
            )?;
            ((ap - bp).norm_squared() + (ad - bd).norm_squared()).sqrt()
        }
    };
    let record = StepRecord {
        k,
        h: problem.f_value(&iterate.x, k) + problem.f0_value(&y_model, k),
        g: problem.g_values(&y_model, k),
        meas_err: (y_used - &y_model).norm(),
        map_perturbation,
        x: iterate.x.clone(),
        lambda: iterate.lambda.clone(),
        y_hat: y_used.clone(),
        y_model,
    };
    Ok(Advance {
        next: Iterate::new(k + 1, x_next, lambda_next),
        record,
    })
}

/// One iteration: draw the measurement of `iterate.x` at `iterate.k` and return
/// the iterate for `k + 1`.
pub fn step(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    iterate: &Iterate,
) -> Result<Iterate> {
    Ok(advance(problem, plant, config, iterate)?.next)
}

fn validate_next(
    problem: &TimeVaryingProblem,
    dual: &DualSet,
    next: &Iterate,
    set_step: usize,
) -> Result<()> {
    next.validate(problem, dual, set_step)
}

/// Run `config.horizon` iterations from `(x0, lambda0)`.
///
/// Missing initial values default to `Proj_X(0)(0)` and `0`; given ones are
/// projected first. On failure the error carries the partial trajectory.
pub fn run_online(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    x0: Option<&DVector<f64>>,
    lambda0: Option<&DVector<f64>>,
) -> Result<Trajectory> {
    // a zero horizon is accepted here and yields the initial record only
    config.clone().with_horizon(config.horizon.max(1))?;
    problem.check_plant(plant)?;
    let dual = config.dual_set();
    let x0 = match x0 {
        Some(x) => {
            check_dim("x0", problem.n(), x.len())?;
            problem.project(x, 0)?
        }
        None => problem.project(&DVector::zeros(problem.n()), 0)?,
    };
    let lambda0 = match lambda0 {
        Some(l) => {
            check_dim("lambda0", problem.num_constraints(), l.len())?;
            dual.project(l)
        }
        None => DVector::zeros(problem.num_constraints()),
    };
    let zero_initial_dual = lambda0.iter().all(|&v| v == 0.0);
    let mut traj = Trajectory {
        config: config.clone(),
        records: Vec::with_capacity(config.horizon + 1),
        realized_e_y: 0.0,
        dual_boundary_hits: 0,
        zero_initial_dual,
    };
    let mut current = Iterate::new(0, x0, lambda0);
    for k in 0..=config.horizon {
        let result = advance(problem, plant, config, &current).and_then(|adv| {
            if k < config.horizon {
                validate_next(problem, &dual, &adv.next, k)?;
            }
            Ok(adv)
        });
        let adv = match result {
            Ok(adv) => adv,
            Err(e) => {
                return Err(Error::RunAborted {
                    step: k,
                    source: Box::new(e),
                    partial: Box::new(traj),
                })
            }
        };
        traj.realized_e_y = traj.realized_e_y.max(adv.record.meas_err);
        traj.records.push(adv.record);
        if k == config.horizon {
            break;
        }
        if dual.on_boundary(&adv.next.lambda) {
            if traj.dual_boundary_hits == 0 && config.case == crate::problem::Case::Case2 {
                warn!(
                    "dual iterate reached the dual-set boundary (radius {:.4}) at step {}; \
                     the radius may be too small to contain the optimal multipliers",
                    dual.radius(),
                    k + 1
                );
            }
            traj.dual_boundary_hits += 1;
        }
        current = adv.next;
    }
    Ok(traj)
}
