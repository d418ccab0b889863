//! Scalar tracking problem `min (y - s(k))^2` on a box, with an optional cap `y <= u`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    AnalyticSolution, ConstantSignal, DeclaredConstants, FeasibleSet, FnConstraints, FnCost, LinearPlant,
    TimeVaryingProblem,
};

/// Target `s(k) = offset + amplitude sin(omega k) + step_height [k >= step_at]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticParams {
    pub amplitude: f64,
    pub omega: f64,
    pub offset: f64,
    pub step_at: Option<usize>,
    pub step_height: f64,
    pub box_radius: f64,
    /// Upper limit on `y`; no constraint when absent.
    pub cap: Option<f64>,
}

impl Default for QuadraticParams {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            omega: 0.02,
            offset: 0.0,
            step_at: None,
            step_height: 0.0,
            box_radius: 1.0,
            cap: None,
        }
    }
}

impl QuadraticParams {
    pub fn drift(amplitude: f64, omega: f64) -> Self {
        Self {
            amplitude,
            omega,
            ..Self::default()
        }
    }

    pub fn with_box(mut self, radius: f64) -> Self {
        self.box_radius = radius;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn target(&self, k: usize) -> f64 {
        let step = match self.step_at {
            Some(at) if k >= at => self.step_height,
            _ => 0.0,
        };
        self.offset + self.amplitude * (self.omega * k as f64).sin() + step
    }

    fn validate(&self) -> Result<()> {
        let reach = self.offset.abs() + self.amplitude.abs() + self.step_height.abs();
        if !(self.box_radius > reach) {
            return Err(Error::InvalidConfig(format!(
                "box radius {} must exceed the target range {reach}",
                self.box_radius
            )));
        }
        if let Some(u) = self.cap {
            if !(u.abs() < self.box_radius) {
                return Err(Error::InvalidConfig("cap must lie inside the box".into()));
            }
        }
        Ok(())
    }
}

struct Closed(QuadraticParams);

impl AnalyticSolution for Closed {
    fn solve(&self, k: usize, p: f64, d: f64, radius: f64) -> Option<(DVector<f64>, DVector<f64>)> {
        let q = &self.0;
        let s = q.target(k);
        let b = q.box_radius;
        let Some(u) = q.cap else {
            let x = (2.0 * s / (2.0 + p)).clamp(-b, b);
            return Some((DVector::from_element(1, x), DVector::zeros(0)));
        };
        if d == 0.0 {
            if p != 0.0 || radius.is_finite() {
                return None;
            }
            let x = s.clamp(-b, u.min(b));
            let lambda = if x == u { 2.0 * (s - u) } else { 0.0 };
            return Some((
                DVector::from_element(1, x),
                DVector::from_element(1, lambda.max(0.0)),
            ));
        }
        // stationarity 2(x - s) + p x + clip((x - u)/d, 0, R) = 0, increasing in x
        let free = 2.0 * s / (2.0 + p);
        let x = if free <= u {
            free
        } else {
            let inner = (2.0 * s + u / d) / (2.0 + p + 1.0 / d);
            if inner <= u + d * radius {
                inner
            } else {
                (2.0 * s - radius) / (2.0 + p)
            }
        };
        let x = x.clamp(-b, b);
        let lambda = ((x - u) / d).clamp(0.0, radius);
        Some((DVector::from_element(1, x), DVector::from_element(1, lambda)))
    }
}

/// Build the problem and a noiseless identity plant (`y = x`).
pub fn scenario_quadratic_drift(params: &QuadraticParams) -> Result<(TimeVaryingProblem, LinearPlant)> {
    params.validate()?;
    let target = params.clone();
    let grad_target = params.clone();
    let b = params.box_radius;
    let mut builder = TimeVaryingProblem::builder(1)
        .block(FeasibleSet::interval(-b, b)?, None)
        .output_cost(Arc::new(FnCost::new(
            move |y, k| (y[0] - target.target(k)).powi(2),
            move |y, k, g| g[0] = 2.0 * (y[0] - grad_target.target(k)),
        )))
        .analytic(Arc::new(Closed(params.clone())));
    let reach = params.offset.abs() + params.amplitude.abs() + params.step_height.abs();
    let mut declared = DeclaredConstants {
        grad_lipschitz: Some(0.0),
        output_grad_lipschitz: Some(2.0),
        strong_convexity: Some(2.0),
        grad_bound: Some(2.0 * (b + reach)),
        ..Default::default()
    };
    if let Some(u) = params.cap {
        builder = builder.constraints(Arc::new(FnConstraints::new(
            1,
            0,
            move |y, _, out| out[0] = y[0] - u,
            |_, _, j| j[(0, 0)] = 1.0,
        )));
        declared.jacobian_bound = Some(1.0);
        declared.constraint_bound = Some(b + u.abs());
    }
    let problem = builder.declare(declared).build()?;
    let plant = LinearPlant::new(
        DMatrix::identity(1, 1),
        DMatrix::zeros(1, 1),
        Arc::new(ConstantSignal(DVector::zeros(1))),
        0,
    )?;
    Ok((problem, plant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{optimal_trajectory, solve_saddle_point, SaddleOptions};
    use crate::oracle::{solve_p0, OracleTrajectory};
    use crate::problem::AlgorithmConfig;

    #[test]
    fn zero_amplitude_is_static() {
        let (problem, plant) = scenario_quadratic_drift(&QuadraticParams::drift(0.0, 0.3)).unwrap();
        let cfg = AlgorithmConfig::case1(0.1, 1.0 / 3.0, 20).unwrap();
        let o: OracleTrajectory = optimal_trajectory(&problem, &plant, &cfg, 20).unwrap();
        assert!(o.sigma.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn starts_at_origin_and_moves_with_the_target() {
        let params = QuadraticParams::drift(1.0, 0.01).with_box(2.0);
        let (problem, plant) = scenario_quadratic_drift(&params).unwrap();
        let cfg = AlgorithmConfig::case1(0.1, 1.0 / 3.0, 30).unwrap();
        let o = optimal_trajectory(&problem, &plant, &cfg, 30).unwrap();
        assert_eq!(o.x_star[0][0], 0.0);
        for (k, s) in o.sigma.iter().enumerate() {
            let expect = ((0.01 * (k + 1) as f64).sin() - (0.01 * k as f64).sin()).abs();
            assert!((s - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_numerical_solvers() {
        let params = QuadraticParams::drift(0.5, 0.3).with_cap(0.2);
        let (problem, plant) = scenario_quadratic_drift(&params).unwrap();
        let numeric = problem.without_analytic();
        let closed = problem.analytic().unwrap().clone();
        for k in [0, 3, 5, 9, 17] {
            for (p, d, r) in [(0.01, 0.01, 10.0), (0.1, 0.5, 0.3), (0.001, 0.002, 1.0)] {
                let (x, l) = closed.solve(k, p, d, r).unwrap();
                let sp = solve_saddle_point(
                    &numeric,
                    &plant,
                    k,
                    &SaddleOptions::new(p, d).radius(r).tol(1e-10),
                )
                .unwrap();
                assert!(
                    (sp.x[0] - x[0]).abs() < 1e-8,
                    "k={k} p={p}: {} vs {}",
                    sp.x[0],
                    x[0]
                );
                assert!(
                    (sp.lambda[0] - l[0]).abs() < 1e-6,
                    "k={k}: {} vs {}",
                    sp.lambda[0],
                    l[0]
                );
            }
            let (x, l) = closed.solve(k, 0.0, 0.0, f64::INFINITY).unwrap();
            let p0 = solve_p0(&numeric, &plant, k, 1e-8).unwrap();
            assert!((p0.x[0] - x[0]).abs() < 1e-6);
            assert!((p0.lambda[0] - l[0]).abs() < 1e-4, "{} vs {}", p0.lambda[0], l[0]);
        }
    }

    #[test]
    fn rejects_target_outside_box() {
        let params = QuadraticParams::drift(1.0, 0.1);
        assert!(scenario_quadratic_drift(&params).is_err());
    }
}
