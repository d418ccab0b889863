use log::warn;
use nalgebra::DVector;

use super::apg::{minimize, ApgOptions};
use crate::engine::{saddle_map, stack};
use crate::error::{Error, Result};
use crate::problem::{LinearPlant, TimeVaryingProblem};
use crate::projections::DualSet;

/// Settings for [`solve_saddle_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleOptions {
    pub p: f64,
    pub d: f64,
    /// Radius of the dual set; `f64::INFINITY` for the plain orthant.
    pub dual_radius: f64,
    /// Target bound on the primal error.
    pub tol: f64,
    pub max_iter: usize,
    /// Warm start for the primal variable.
    pub x0: Option<DVector<f64>>,
}

impl SaddleOptions {
    pub fn new(p: f64, d: f64) -> Self {
        Self {
            p,
            d,
            dual_radius: f64::INFINITY,
            tol: 1e-9,
            max_iter: 200_000,
            x0: None,
        }
    }

    pub fn radius(mut self, r: f64) -> Self {
        self.dual_radius = r;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    pub fn warm_start(mut self, x0: DVector<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }
}

/// Saddle point of the regularized Lagrangian over `X(k) x D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddlePoint {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    /// Bound on `||x - x*||` from strong convexity of the reduced problem.
    pub error_bound: f64,
    /// `||z - Proj(z - a phi(z))||` for the inner step used by the solver.
    pub residual: f64,
    pub iterations: usize,
    /// The multiplier sits on the spherical boundary of the dual set.
    pub on_boundary: bool,
}

impl SaddlePoint {
    pub fn z(&self) -> DVector<f64> {
        stack(&self.x, &self.lambda)
    }
}

/// The maximizing multiplier `Proj_D(g / d)` of the regularized Lagrangian.
fn best_response(g: &DVector<f64>, d: f64, dual: &DualSet) -> DVector<f64> {
    dual.project(&(g / d))
}

/// Solve `max_{lambda in D} min_{x in X(k)} L_pd(x, lambda)` on the model.
///
/// The inner maximization has the closed form `lambda(x) = Proj_D(g(y(x)) / d)`,
/// which leaves a smooth strongly convex problem in `x` alone. That problem is
/// solved with an accelerated projected gradient method and the multiplier is
/// recovered from the primal solution.
pub fn solve_saddle_point(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    k: usize,
    opts: &SaddleOptions,
) -> Result<SaddlePoint> {
    if !(opts.p > 0.0 && opts.d > 0.0) {
        return Err(Error::InvalidConfig(
            "the saddle-point oracle needs p > 0 and d > 0".into(),
        ));
    }
    problem.check_plant(plant)?;
    let dual = DualSet::new(opts.dual_radius)?;
    let (p, d) = (opts.p, opts.d);
    let mu = p + problem.declared().strong_convexity.unwrap_or(0.0);
    let has_g = problem.num_constraints() > 0;

    let objective = |x: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let y = plant.model_output(x, k)?;
        let mut value = problem.f_value(x, k) + problem.f0_value(&y, k) + 0.5 * p * x.norm_squared();
        let mut out_grad = problem.f0_gradient(&y, k);
        if has_g {
            let g = problem.g_values(&y, k);
            let lam = best_response(&g, d, &dual);
            value += lam.dot(&g) - 0.5 * d * lam.norm_squared();
            out_grad += problem.g_jacobian(&y, k).tr_mul(&lam);
        }
        let mut grad = problem.f_gradient(x, k) + plant.c().tr_mul(&out_grad);
        grad.axpy(p, x, 1.0);
        Ok((value, grad))
    };
    let x0 = match &opts.x0 {
        Some(x) => x.clone(),
        None => default_start(problem, k),
    };
    let res = minimize(
        &x0,
        objective,
        |v| problem.project(v, k),
        ApgOptions {
            grad_map_tol: 0.5 * opts.tol * mu,
            max_iter: opts.max_iter,
        },
    )?;
    if !res.converged {
        return Err(Error::OracleDiverged {
            k,
            iterations: res.iterations,
            residual: res.grad_map,
        });
    }
    let x = res.x;
    let y = plant.model_output(&x, k)?;
    let lambda = best_response(&problem.g_values(&y, k), d, &dual);
    let on_boundary = dual.on_boundary(&lambda);
    if on_boundary {
        warn!(
            "optimal multiplier at step {k} lies on the dual-set boundary (radius {:.4}); \
             the radius is likely too small",
            opts.dual_radius
        );
    }

    let a_in = 1.0 / res.lipschitz.max(1.0);
    let (gp, gd) = saddle_map(problem, plant, &x, &lambda, &y, p, d, k)?;
    let xs = problem.project(&(&x - &gp * a_in), k)?;
    let ls = dual.project(&(&lambda - &gd * a_in));
    let residual = ((&x - xs).norm_squared() + (&lambda - ls).norm_squared()).sqrt();

    Ok(SaddlePoint {
        x,
        lambda,
        error_bound: 2.0 * res.grad_map / mu,
        residual,
        iterations: res.iterations,
        on_boundary,
    })
}

/// Projection of the bounding-box center of `X(k)`, a start that stays away
/// from the boundary where floored utilities are steep.
pub(crate) fn default_start(problem: &TimeVaryingProblem, k: usize) -> DVector<f64> {
    let mut c = Vec::with_capacity(problem.n());
    for set in problem.sets_at(k) {
        let (lo, hi) = set.bounding_box();
        c.extend(lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)));
    }
    let c = DVector::from_vec(c);
    problem.project(&c, k).unwrap_or(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tests::static_constrained;

    #[test]
    fn regularized_static_kkt() {
        let (problem, plant) = static_constrained();
        let sp =
            solve_saddle_point(&problem, &plant, 0, &SaddleOptions::new(0.01, 0.01).radius(10.0)).unwrap();
        let lam = 1.01 / (0.01 * 1.01 + 1.0);
        assert!((sp.lambda[0] - lam).abs() < 1e-8, "{}", sp.lambda[0]);
        assert!((sp.x[0] - lam / 1.01).abs() < 1e-8);
        assert!(sp.residual < 1e-9);
        assert!(!sp.on_boundary);
    }

    #[test]
    fn tiny_regularization_approaches_unregularized_kkt() {
        let (problem, plant) = static_constrained();
        let sp = solve_saddle_point(&problem, &plant, 0, &SaddleOptions::new(1e-6, 1e-6)).unwrap();
        assert!((sp.x[0] - 1.0).abs() < 1e-4);
        assert!((sp.lambda[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn small_radius_reports_boundary() {
        let (problem, plant) = static_constrained();
        let sp =
            solve_saddle_point(&problem, &plant, 0, &SaddleOptions::new(0.01, 0.01).radius(0.5)).unwrap();
        assert!(sp.on_boundary);
        assert!((sp.lambda[0] - 0.5).abs() < 1e-12);
    }
}
