//! Static scalar program `min x^2 / 2` subject to `y >= level`, `y = x`, `x in [-5, 5]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    AnalyticSolution, ConstantSignal, DeclaredConstants, FeasibleSet, FnConstraints, FnCost, LinearPlant,
    TimeVaryingProblem,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticParams {
    pub level: f64,
    pub box_radius: f64,
}

impl Default for StaticParams {
    fn default() -> Self {
        Self {
            level: 1.0,
            box_radius: 5.0,
        }
    }
}

struct Closed(StaticParams);

impl AnalyticSolution for Closed {
    fn solve(&self, _k: usize, p: f64, d: f64, radius: f64) -> Option<(DVector<f64>, DVector<f64>)> {
        let a = self.0.level;
        let b = self.0.box_radius;
        // stationarity (1 + p) x = clip((a - x)/d, 0, R)
        let (x, lambda) = if d == 0.0 {
            if p != 0.0 {
                return None;
            }
            let x = a.max(0.0);
            (x, x.min(radius))
        } else if a <= 0.0 {
            (0.0, 0.0)
        } else {
            let x = a / (1.0 + d * (1.0 + p));
            let lam = (1.0 + p) * x;
            if lam <= radius {
                (x, lam)
            } else {
                (radius / (1.0 + p), radius)
            }
        };
        if x.abs() > b {
            return None;
        }
        Some((DVector::from_element(1, x), DVector::from_element(1, lambda)))
    }
}

pub fn scenario_static(params: &StaticParams) -> Result<(TimeVaryingProblem, LinearPlant)> {
    if !(params.box_radius > params.level.abs()) {
        return Err(Error::InvalidConfig("level must lie inside the box".into()));
    }
    let level = params.level;
    let b = params.box_radius;
    let problem = TimeVaryingProblem::builder(1)
        .block(
            FeasibleSet::interval(-b, b)?,
            Some(Arc::new(FnCost::new(
                |x, _| 0.5 * x[0] * x[0],
                |x, _, g| g[0] = x[0],
            ))),
        )
        .constraints(Arc::new(FnConstraints::new(
            1,
            0,
            move |y, _, out| out[0] = level - y[0],
            |_, _, j| j[(0, 0)] = -1.0,
        )))
        .declare(DeclaredConstants {
            grad_lipschitz: Some(1.0),
            output_grad_lipschitz: Some(0.0),
            strong_convexity: Some(1.0),
            grad_bound: Some(b),
            constraint_bound: Some(b + level.abs()),
            jacobian_bound: Some(1.0),
            ..Default::default()
        })
        .analytic(Arc::new(Closed(params.clone())))
        .build()?;
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
    use crate::oracle::{solve_p0, solve_saddle_point, SaddleOptions};

    #[test]
    fn closed_form_agrees_with_solvers() {
        let (problem, plant) = scenario_static(&StaticParams::default()).unwrap();
        let closed = problem.analytic().unwrap().clone();
        let numeric = problem.without_analytic();
        let (x, l) = closed.solve(0, 0.01, 0.01, 10.0).unwrap();
        let sp =
            solve_saddle_point(&numeric, &plant, 0, &SaddleOptions::new(0.01, 0.01).radius(10.0)).unwrap();
        assert!((sp.x[0] - x[0]).abs() < 1e-8 && (sp.lambda[0] - l[0]).abs() < 1e-6);
        let (x, l) = closed.solve(0, 0.1, 0.1, 0.5).unwrap();
        let sp = solve_saddle_point(&numeric, &plant, 0, &SaddleOptions::new(0.1, 0.1).radius(0.5)).unwrap();
        assert!((sp.x[0] - x[0]).abs() < 1e-8 && (sp.lambda[0] - l[0]).abs() < 1e-6);
        let (x, l) = closed.solve(0, 0.0, 0.0, f64::INFINITY).unwrap();
        assert_eq!((x[0], l[0]), (1.0, 1.0));
        let p0 = solve_p0(&numeric, &plant, 0, 1e-6).unwrap();
        assert!((p0.x[0] - 1.0).abs() < 1e-6);
    }
}
