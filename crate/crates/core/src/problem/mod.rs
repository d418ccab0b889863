//! The sampled time-varying program, its output plant and the algorithm settings.
//!
//! A [`TimeVaryingProblem`] describes, for every step `k`,
//!
//! ```text
//! minimize    f0_k(C x + D w(k)) + sum_i f_i,k(x_i)
//! subject to  x_i in X_i(k),   g_k(C x + D w(k)) <= 0
//! ```
//!
//! The output map itself lives in [`LinearPlant`] so that the same problem can be
//! driven by model outputs (feed-forward) or by measurements (feedback).

mod config;
mod gradcheck;
mod plant;
mod sampling;
mod sets;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::projections::DualSet;

pub use config::{AlgorithmConfig, Case, Mode};
pub use gradcheck::{check_gradients, GradientReport, FD_STEP, FD_TOLERANCE};
pub use plant::{
    ConstantSignal, ExogenousSignal, GaussianSignal, LinearPlant, Measurement, Mismatch, NoiseModel,
    ScheduledSignal,
};
pub use sampling::sample_set;
pub use sets::{FeasibleSet, SetMember, DYKSTRA_MAX_ITER, DYKSTRA_TOL, TAU_PROJ};

/// Cost attached to one primal block `x_i`.
pub trait BlockCost: Send + Sync {
    fn value(&self, x: &[f64], k: usize) -> f64;
    fn gradient(&self, x: &[f64], k: usize, grad: &mut [f64]);
}

/// Cost of the output vector `y`.
pub trait OutputCost: Send + Sync {
    fn value(&self, y: &[f64], k: usize) -> f64;
    fn gradient(&self, y: &[f64], k: usize, grad: &mut [f64]);
}

/// Vector of convex constraint functions of `y`, `g(y) <= 0`.
///
/// The first [`nonlinear_len`](ConstraintMap::nonlinear_len) entries are the
/// nonlinear ones; the rest are affine.
pub trait ConstraintMap: Send + Sync {
    fn len(&self) -> usize;
    fn nonlinear_len(&self) -> usize {
        0
    }
    fn values(&self, y: &[f64], k: usize, out: &mut [f64]);
    /// Fills `jac` (shape `len x m`) with `dg_i / dy_l`.
    fn jacobian(&self, y: &[f64], k: usize, jac: &mut DMatrix<f64>);
}

type ValueFn = dyn Fn(&[f64], usize) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], usize, &mut [f64]) + Send + Sync;
type VecFn = dyn Fn(&[f64], usize, &mut [f64]) + Send + Sync;
type JacFn = dyn Fn(&[f64], usize, &mut DMatrix<f64>) + Send + Sync;

/// Closure-backed cost usable as either a [`BlockCost`] or an [`OutputCost`].
#[derive(Clone)]
pub struct FnCost {
    value: Arc<ValueFn>,
    grad: Arc<GradFn>,
}

impl FnCost {
    pub fn new(
        value: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], usize, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            grad: Arc::new(grad),
        }
    }
}

impl BlockCost for FnCost {
    fn value(&self, x: &[f64], k: usize) -> f64 {
        (self.value)(x, k)
    }
    fn gradient(&self, x: &[f64], k: usize, grad: &mut [f64]) {
        (self.grad)(x, k, grad)
    }
}

impl OutputCost for FnCost {
    fn value(&self, y: &[f64], k: usize) -> f64 {
        (self.value)(y, k)
    }
    fn gradient(&self, y: &[f64], k: usize, grad: &mut [f64]) {
        (self.grad)(y, k, grad)
    }
}

/// Closure-backed [`ConstraintMap`].
#[derive(Clone)]
pub struct FnConstraints {
    len: usize,
    nonlinear: usize,
    values: Arc<VecFn>,
    jac: Arc<JacFn>,
}

impl FnConstraints {
    pub fn new(
        len: usize,
        nonlinear: usize,
        values: impl Fn(&[f64], usize, &mut [f64]) + Send + Sync + 'static,
        jac: impl Fn(&[f64], usize, &mut DMatrix<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self {
            len,
            nonlinear,
            values: Arc::new(values),
            jac: Arc::new(jac),
        }
    }
}

impl ConstraintMap for FnConstraints {
    fn len(&self) -> usize {
        self.len
    }
    fn nonlinear_len(&self) -> usize {
        self.nonlinear
    }
    fn values(&self, y: &[f64], k: usize, out: &mut [f64]) {
        (self.values)(y, k, out)
    }
    fn jacobian(&self, y: &[f64], k: usize, jac: &mut DMatrix<f64>) {
        (self.jac)(y, k, jac)
    }
}

/// Closed-form solution a scenario can supply to bypass the numerical oracle.
pub trait AnalyticSolution: Send + Sync {
    /// Saddle point `(x*, lambda*)` at step `k` for regularization `(p, d)` and
    /// dual radius `radius`, or `None` when no closed form applies.
    fn solve(&self, k: usize, p: f64, d: f64, radius: f64) -> Option<(DVector<f64>, DVector<f64>)>;
}

/// Time-indexed feasible set of one block.
#[derive(Clone)]
pub enum SetSchedule {
    Static(FeasibleSet),
    Varying {
        dim: usize,
        at: Arc<dyn Fn(usize) -> FeasibleSet + Send + Sync>,
    },
}

impl SetSchedule {
    pub fn dim(&self) -> usize {
        match self {
            SetSchedule::Static(s) => s.dim(),
            SetSchedule::Varying { dim, .. } => *dim,
        }
    }

    pub fn at(&self, k: usize) -> FeasibleSet {
        match self {
            SetSchedule::Static(s) => s.clone(),
            SetSchedule::Varying { at, .. } => at(k),
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, SetSchedule::Static(_))
    }
}

impl From<FeasibleSet> for SetSchedule {
    fn from(s: FeasibleSet) -> Self {
        SetSchedule::Static(s)
    }
}

/// Analytic constants a scenario declares about its functions.
///
/// Lipschitz constants are required by the bound calculators; the suprema are
/// optional caps on the sampled estimates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeclaredConstants {
    /// Lipschitz constant of the gradient of `sum_i f_i` (L).
    pub grad_lipschitz: Option<f64>,
    /// Lipschitz constant of the gradient of `f0` in `y` (L0).
    pub output_grad_lipschitz: Option<f64>,
    /// Gradient Lipschitz constants of the nonlinear constraints (L_{g_j}).
    pub constraint_grad_lipschitz: Vec<f64>,
    /// Lipschitz constant of the constraint Jacobian (L_G); defaults to the
    /// root-sum-square of the per-constraint constants.
    pub jacobian_lipschitz: Option<f64>,
    /// Strong convexity modulus of `h` in `x`, when known.
    pub strong_convexity: Option<f64>,
    /// Upper bound on `||grad h||` over the feasible sets (F).
    pub grad_bound: Option<f64>,
    /// Upper bound on `||g||` over the feasible sets.
    pub constraint_bound: Option<f64>,
    /// Upper bound on `||J||_2` over the feasible sets (M_g).
    pub jacobian_bound: Option<f64>,
}

struct Block {
    dim: usize,
    cost: Option<Arc<dyn BlockCost>>,
    set: SetSchedule,
}

/// The sampled program: costs, constraints and feasible sets indexed by step.
#[derive(Clone)]
pub struct TimeVaryingProblem {
    n: usize,
    m: usize,
    blocks: Arc<Vec<Block>>,
    offsets: Vec<usize>,
    output_cost: Option<Arc<dyn OutputCost>>,
    constraints: Option<Arc<dyn ConstraintMap>>,
    declared: DeclaredConstants,
    analytic: Option<Arc<dyn AnalyticSolution>>,
}

impl fmt::Debug for TimeVaryingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeVaryingProblem")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("blocks", &self.block_dims())
            .field("constraints", &self.num_constraints())
            .field("nonlinear", &self.num_nonlinear())
            .finish()
    }
}

/// Builder for [`TimeVaryingProblem`].
pub struct ProblemBuilder {
    m: usize,
    blocks: Vec<Block>,
    output_cost: Option<Arc<dyn OutputCost>>,
    constraints: Option<Arc<dyn ConstraintMap>>,
    declared: DeclaredConstants,
    analytic: Option<Arc<dyn AnalyticSolution>>,
}

impl ProblemBuilder {
    pub fn block(mut self, set: impl Into<SetSchedule>, cost: Option<Arc<dyn BlockCost>>) -> Self {
        let set = set.into();
        self.blocks.push(Block {
            dim: set.dim(),
            cost,
            set,
        });
        self
    }

    pub fn output_cost(mut self, cost: Arc<dyn OutputCost>) -> Self {
        self.output_cost = Some(cost);
        self
    }

    pub fn constraints(mut self, g: Arc<dyn ConstraintMap>) -> Self {
        self.constraints = Some(g);
        self
    }

    pub fn declare(mut self, declared: DeclaredConstants) -> Self {
        self.declared = declared;
        self
    }

    pub fn analytic(mut self, solution: Arc<dyn AnalyticSolution>) -> Self {
        self.analytic = Some(solution);
        self
    }

    pub fn build(self) -> Result<TimeVaryingProblem> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidConfig("problem has no primal blocks".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("output dimension must be positive".into()));
        }
        if let Some(g) = &self.constraints {
            if g.nonlinear_len() > g.len() {
                return Err(Error::InvalidConfig(
                    "more nonlinear constraints than constraints".into(),
                ));
            }
            if !self.declared.constraint_grad_lipschitz.is_empty() {
                check_dim(
                    "constraint_grad_lipschitz",
                    g.nonlinear_len(),
                    self.declared.constraint_grad_lipschitz.len(),
                )?;
            }
        }
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut n = 0;
        for b in &self.blocks {
            if b.dim == 0 {
                return Err(Error::InvalidConfig("empty primal block".into()));
            }
            offsets.push(n);
            n += b.dim;
        }
        Ok(TimeVaryingProblem {
            n,
            m: self.m,
            blocks: Arc::new(self.blocks),
            offsets,
            output_cost: self.output_cost,
            constraints: self.constraints,
            declared: self.declared,
            analytic: self.analytic,
        })
    }
}

impl TimeVaryingProblem {
    /// Start a problem whose constraints and output cost act on `y` of dimension `m`.
    pub fn builder(m: usize) -> ProblemBuilder {
        ProblemBuilder {
            m,
            blocks: Vec::new(),
            output_cost: None,
            constraints: None,
            declared: DeclaredConstants::default(),
            analytic: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of inequality constraints (M).
    pub fn num_constraints(&self) -> usize {
        self.constraints.as_ref().map_or(0, |g| g.len())
    }

    /// Number of nonlinear constraints (M_I).
    pub fn num_nonlinear(&self) -> usize {
        self.constraints.as_ref().map_or(0, |g| g.nonlinear_len())
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    pub fn declared(&self) -> &DeclaredConstants {
        &self.declared
    }

    pub fn analytic(&self) -> Option<&Arc<dyn AnalyticSolution>> {
        self.analytic.as_ref()
    }

    /// Same problem with its declared constants replaced.
    pub fn with_declared(&self, declared: DeclaredConstants) -> Self {
        let mut p = self.clone();
        p.declared = declared;
        p
    }

    /// Same problem without its closed-form solution, forcing numerical oracles.
    pub fn without_analytic(&self) -> Self {
        let mut p = self.clone();
        p.analytic = None;
        p
    }

    pub fn has_output_cost(&self) -> bool {
        self.output_cost.is_some()
    }

    pub fn sets_static(&self) -> bool {
        self.blocks.iter().all(|b| b.set.is_static())
    }

    /// `X(k)` as a list of per-block sets.
    pub fn sets_at(&self, k: usize) -> Vec<FeasibleSet> {
        self.blocks.iter().map(|b| b.set.at(k)).collect()
    }

    pub fn project(&self, x: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
        crate::projections::project_product(x, &self.sets_at(k))
    }

    /// Largest per-block violation of `x in X(k)`, together with the tolerance
    /// it should be compared against.
    pub fn set_violation(&self, x: &DVector<f64>, k: usize) -> (f64, f64) {
        let mut worst = 0.0_f64;
        let mut tol = 0.0_f64;
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            let set = b.set.at(k);
            let block = x.rows(off, b.dim).into_owned();
            worst = worst.max(set.violation(&block));
            tol = tol.max(set.tolerance());
        }
        (worst, tol)
    }

    pub fn contains(&self, x: &DVector<f64>, k: usize) -> bool {
        if x.len() != self.n {
            return false;
        }
        let (v, tol) = self.set_violation(x, k);
        v <= tol
    }

    /// `f(x) = sum_i f_i(x_i)`.
    pub fn f_value(&self, x: &DVector<f64>, k: usize) -> f64 {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .filter_map(|(b, &off)| {
                b.cost
                    .as_ref()
                    .map(|c| c.value(&x.as_slice()[off..off + b.dim], k))
            })
            .sum()
    }

    pub fn f_gradient(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        let mut grad = DVector::zeros(self.n);
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            if let Some(c) = &b.cost {
                c.gradient(
                    &x.as_slice()[off..off + b.dim],
                    k,
                    &mut grad.as_mut_slice()[off..off + b.dim],
                );
            }
        }
        grad
    }

    pub fn f0_value(&self, y: &DVector<f64>, k: usize) -> f64 {
        self.output_cost
            .as_ref()
            .map_or(0.0, |c| c.value(y.as_slice(), k))
    }

    pub fn f0_gradient(&self, y: &DVector<f64>, k: usize) -> DVector<f64> {
        let mut grad = DVector::zeros(self.m);
        if let Some(c) = &self.output_cost {
            c.gradient(y.as_slice(), k, grad.as_mut_slice());
        }
        grad
    }

    pub fn g_values(&self, y: &DVector<f64>, k: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_constraints());
        if let Some(g) = &self.constraints {
            g.values(y.as_slice(), k, out.as_mut_slice());
        }
        out
    }

    /// Constraint Jacobian in `y`, shape `M x m`.
    pub fn g_jacobian(&self, y: &DVector<f64>, k: usize) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.num_constraints(), self.m);
        if let Some(g) = &self.constraints {
            g.jacobian(y.as_slice(), k, &mut jac);
        }
        jac
    }

    pub(crate) fn block_costs(&self) -> impl Iterator<Item = (usize, usize, Option<&Arc<dyn BlockCost>>)> {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(|(b, &off)| (off, b.dim, b.cost.as_ref()))
    }

    pub(crate) fn check_plant(&self, plant: &LinearPlant) -> Result<()> {
        check_dim("plant C columns (n)", self.n, plant.n())?;
        check_dim("plant C rows (m)", self.m, plant.m())
    }

    /// `h(x) = f(x) + f0(C x + D w(k))`, evaluated on the model output.
    pub fn eval_h(&self, plant: &LinearPlant, x: &DVector<f64>, k: usize) -> Result<f64> {
        check_dim("x", self.n, x.len())?;
        self.check_plant(plant)?;
        let y = plant.model_output(x, k)?;
        Ok(self.f_value(x, k) + self.f0_value(&y, k))
    }

    /// Gradient of `h` on the model output.
    pub fn grad_h(&self, plant: &LinearPlant, x: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
        check_dim("x", self.n, x.len())?;
        self.check_plant(plant)?;
        let y = plant.model_output(x, k)?;
        Ok(self.f_gradient(x, k) + plant.c().transpose() * self.f0_gradient(&y, k))
    }
}

/// Free-function form of [`TimeVaryingProblem::eval_h`].
pub fn eval_h(problem: &TimeVaryingProblem, plant: &LinearPlant, x: &DVector<f64>, k: usize) -> Result<f64> {
    problem.eval_h(plant, x, k)
}

/// `(B, D)`: uniform norm bound and diameter bound of `X(k)` over `k <= horizon`.
pub fn set_bounds(problem: &TimeVaryingProblem, horizon: usize) -> (f64, f64) {
    let last = if problem.sets_static() { 0 } else { horizon };
    let mut b = 0.0_f64;
    let mut diam = 0.0_f64;
    for k in 0..=last {
        let sets = problem.sets_at(k);
        let nb: f64 = sets.iter().map(|s| s.norm_bound().powi(2)).sum();
        let nd: f64 = sets.iter().map(|s| s.diameter().powi(2)).sum();
        b = b.max(nb.sqrt());
        diam = diam.max(nd.sqrt());
    }
    (b, diam)
}

/// Primal-dual iterate `z = (x, lambda)` at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub k: usize,
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl Iterate {
    pub fn new(k: usize, x: DVector<f64>, lambda: DVector<f64>) -> Self {
        Self { k, x, lambda }
    }

    /// Check `x in X(set_step)` and `lambda in D`.
    pub fn validate(&self, problem: &TimeVaryingProblem, dual: &DualSet, set_step: usize) -> Result<()> {
        check_dim("x", problem.n(), self.x.len())?;
        check_dim("lambda", problem.num_constraints(), self.lambda.len())?;
        let (viol, tol) = problem.set_violation(&self.x, set_step);
        if viol > tol {
            return Err(Error::Invariant(format!(
                "x^({}) violates X^({set_step}) by {viol:.3e}",
                self.k
            )));
        }
        if !dual.contains(&self.lambda, TAU_PROJ) {
            return Err(Error::Invariant(format!(
                "lambda^({}) outside the dual set (norm {:.6e}, radius {:.6e})",
                self.k,
                self.lambda.norm(),
                dual.radius()
            )));
        }
        Ok(())
    }

    /// Stacked vector `(x, lambda)`.
    pub fn stacked(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.x.len() + self.lambda.len());
        z.rows_mut(0, self.x.len()).copy_from(&self.x);
        z.rows_mut(self.x.len(), self.lambda.len())
            .copy_from(&self.lambda);
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> (TimeVaryingProblem, LinearPlant) {
        let problem = TimeVaryingProblem::builder(1)
            .block(
                FeasibleSet::interval(-5.0, 5.0).unwrap(),
                Some(Arc::new(FnCost::new(
                    |x, _| x[0] * x[0],
                    |x, _, g| g[0] = 2.0 * x[0],
                ))),
            )
            .output_cost(Arc::new(FnCost::new(|y, _| y[0], |_, _, g| g[0] = 1.0)))
            .build()
            .unwrap();
        let plant = LinearPlant::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            Arc::new(ConstantSignal(DVector::from_element(1, 0.5))),
            0,
        )
        .unwrap();
        (problem, plant)
    }

    #[test]
    fn eval_h_direct_arithmetic() {
        let (problem, plant) = toy();
        let h = eval_h(&problem, &plant, &DVector::from_element(1, 2.0), 0).unwrap();
        assert_relative_eq!(h, 6.5);
    }

    #[test]
    fn eval_h_zero_case() {
        let problem = TimeVaryingProblem::builder(1)
            .block(
                FeasibleSet::interval(-1.0, 1.0).unwrap(),
                Some(Arc::new(FnCost::new(
                    |x, _| x[0] * x[0],
                    |x, _, g| g[0] = 2.0 * x[0],
                ))),
            )
            .output_cost(Arc::new(FnCost::new(|y, _| y[0], |_, _, g| g[0] = 1.0)))
            .build()
            .unwrap();
        let plant = LinearPlant::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            Arc::new(ConstantSignal(DVector::zeros(1))),
            0,
        )
        .unwrap();
        assert_eq!(eval_h(&problem, &plant, &DVector::zeros(1), 3).unwrap(), 0.0);
    }

    #[test]
    fn eval_h_rejects_wrong_dimension() {
        let (problem, plant) = toy();
        let err = eval_h(&problem, &plant, &DVector::zeros(2), 0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { field: "x", .. }));
    }

    #[test]
    fn eval_h_ignores_noise_and_mismatch() {
        let (problem, plant) = toy();
        let noisy = plant
            .clone()
            .with_noise(NoiseModel::new(1.0, 1.0).unwrap())
            .with_mismatch(Mismatch::new(
                DMatrix::from_element(1, 1, 0.3),
                DMatrix::from_element(1, 1, 0.1),
            ))
            .unwrap();
        for k in 0..10 {
            let x = DVector::from_element(1, 0.1 * k as f64);
            assert_eq!(
                eval_h(&problem, &plant, &x, k).unwrap().to_bits(),
                eval_h(&problem, &noisy, &x, k).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn set_bounds_box_and_ball() {
        let p = TimeVaryingProblem::builder(1)
            .block(FeasibleSet::cube(2, -2.0, 2.0).unwrap(), None)
            .build()
            .unwrap();
        let (b, d) = set_bounds(&p, 10);
        assert_relative_eq!(b, 2.0 * 2f64.sqrt());
        assert_relative_eq!(d, 4.0 * 2f64.sqrt());
        let p = TimeVaryingProblem::builder(1)
            .block(FeasibleSet::ball(3.0, 2).unwrap(), None)
            .build()
            .unwrap();
        assert_eq!(set_bounds(&p, 10), (3.0, 6.0));
    }

    #[test]
    fn varying_sets_take_the_worst_step() {
        let p = TimeVaryingProblem::builder(1)
            .block(
                SetSchedule::Varying {
                    dim: 1,
                    at: Arc::new(|k| FeasibleSet::interval(0.0, 1.0 + k as f64).unwrap()),
                },
                None,
            )
            .build()
            .unwrap();
        assert_eq!(set_bounds(&p, 4), (5.0, 5.0));
    }

    #[test]
    fn iterate_validation() {
        let (problem, _) = toy();
        let dual = DualSet::new(1.0).unwrap();
        let ok = Iterate::new(0, DVector::from_element(1, 1.0), DVector::zeros(0));
        assert!(ok.validate(&problem, &dual, 0).is_ok());
        let bad = Iterate::new(0, DVector::from_element(1, 6.0), DVector::zeros(0));
        assert!(matches!(
            bad.validate(&problem, &dual, 0),
            Err(Error::Invariant(_))
        ));
    }
}
