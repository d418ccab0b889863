//! Synthetic 4-node radial feeder with PV inverters tracking a head-power reference.
//!
//! `x = (P_1, Q_1, ..., P_4, Q_4)`; `y = (v_1, ..., v_4, P_0)` with
//! `v = v0 + R (P - P_load) + X Q` and `P_0 = sum P_load - sum P`.
//! `w = (v0, P_load_1, ..., P_load_4)`. Constraints, in order: the tracking
//! constraint `(P_0 - P_ref)^2 - eps <= 0`, upper voltage limits, lower voltage limits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    DeclaredConstants, FeasibleSet, FnConstraints, FnCost, LinearPlant, ScheduledSignal, SetMember,
    TimeVaryingProblem,
};
use crate::schedule::{Schedule, Signal};
use crate::util::{domain, stream_rng};

pub const UNITS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeederParams {
    pub s_max: f64,
    pub p_rated: f64,
    pub cost_p: f64,
    pub cost_q: f64,
    /// Available PV power per unit; the cost pulls `P_i` towards it.
    pub irradiance: Vec<Schedule>,
    pub loads: Vec<Schedule>,
    pub v0: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub reference: Schedule,
    /// Tracking tolerance in kVA^2.
    pub epsilon: f64,
    /// Per-kW resistance and reactance sensitivities of a uniform line.
    pub r_per_kw: f64,
    pub x_per_kw: f64,
    /// Relative entrywise perturbation of the sensitivities.
    pub spread: f64,
    pub matrix_seed: u64,
}

impl Default for FeederParams {
    fn default() -> Self {
        let irradiance = (0..UNITS)
            .map(|i| {
                Schedule::constant(7.0)
                    .plus(Signal::Sinusoid {
                        amplitude: 1.5,
                        omega: 0.006,
                        phase: 0.3 * i as f64,
                        start: None,
                        end: None,
                    })
                    .plus(Signal::Gaussian {
                        std_dev: 0.1,
                        seed: 100 + i as u64,
                    })
            })
            .collect();
        let loads = (0..UNITS)
            .map(|i| {
                Schedule::constant(10.0)
                    .plus(Signal::Sinusoid {
                        amplitude: 1.0,
                        omega: 0.004,
                        phase: 0.5 * i as f64,
                        start: None,
                        end: None,
                    })
                    .plus(Signal::Gaussian {
                        std_dev: 0.2,
                        seed: 200 + i as u64,
                    })
            })
            .collect();
        Self {
            s_max: 10.0,
            p_rated: 10.0,
            cost_p: 1.0,
            cost_q: 0.5,
            irradiance,
            loads,
            v0: 1.0,
            v_min: 0.95,
            v_max: 1.05,
            reference: Schedule::constant(20.0).plus(Signal::Step {
                at: 500,
                height: -8.0,
            }),
            epsilon: 20.0,
            r_per_kw: 4e-4,
            x_per_kw: 3e-4,
            spread: 0.1,
            matrix_seed: 2024,
        }
    }
}

/// Voltage sensitivities `(R, X)` of the feeder.
pub fn sensitivities(params: &FeederParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = stream_rng(params.matrix_seed, domain::FIXTURE, 0);
    let mut make = |scale: f64| {
        let mut m = DMatrix::zeros(UNITS, UNITS);
        for i in 0..UNITS {
            for j in 0..=i {
                let jitter = 1.0 + params.spread * rng.random_range(-1.0..=1.0);
                let v = scale * (j + 1) as f64 * jitter;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    let r = make(params.r_per_kw);
    let x = make(params.x_per_kw);
    (r, x)
}

impl FeederParams {
    pub fn available(&self, unit: usize, k: usize) -> f64 {
        self.irradiance[unit].eval(k).clamp(0.0, self.p_rated)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s_max > 0.0 && self.p_rated > 0.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(
                "feeder ratings and epsilon must be positive".into(),
            ));
        }
        if !(self.cost_p > 0.0 && self.cost_q > 0.0) {
            return Err(Error::InvalidConfig(
                "feeder cost weights must be positive".into(),
            ));
        }
        if !(self.v_min < self.v_max) {
            return Err(Error::InvalidConfig("voltage band is empty".into()));
        }
        for (name, v) in [("irradiance", &self.irradiance), ("loads", &self.loads)] {
            if v.len() != UNITS {
                return Err(Error::DimensionMismatch {
                    field: name,
                    expected: UNITS,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

pub fn scenario_feeder(params: &FeederParams) -> Result<(TimeVaryingProblem, LinearPlant)> {
    params.validate()?;
    let (r, x) = sensitivities(params);
    let mut c = DMatrix::zeros(UNITS + 1, 2 * UNITS);
    let mut d = DMatrix::zeros(UNITS + 1, UNITS + 1);
    for i in 0..UNITS {
        d[(i, 0)] = 1.0;
        for j in 0..UNITS {
            c[(i, 2 * j)] = r[(i, j)];
            c[(i, 2 * j + 1)] = x[(i, j)];
            d[(i, 1 + j)] = -r[(i, j)];
        }
        c[(UNITS, 2 * i)] = -1.0;
        d[(UNITS, 1 + i)] = 1.0;
    }
    let mut w = vec![Schedule::constant(params.v0)];
    w.extend(params.loads.iter().cloned());
    let plant = LinearPlant::new(c, d, Arc::new(ScheduledSignal(w)), params.matrix_seed)?;

    let set = FeasibleSet::intersection(vec![
        SetMember::Ball {
            radius: params.s_max,
            dim: 2,
        },
        SetMember::Box {
            lower: vec![0.0, -params.s_max],
            upper: vec![params.p_rated, params.s_max],
        },
    ])?;
    let mut builder = TimeVaryingProblem::builder(UNITS + 1);
    for i in 0..UNITS {
        let pv = Arc::new(params.clone());
        let pv_grad = pv.clone();
        let cost = FnCost::new(
            move |z, k| pv.cost_p * (z[0] - pv.available(i, k)).powi(2) + pv.cost_q * z[1] * z[1],
            move |z, k, g| {
                g[0] = 2.0 * pv_grad.cost_p * (z[0] - pv_grad.available(i, k));
                g[1] = 2.0 * pv_grad.cost_q * z[1];
            },
        );
        builder = builder.block(set.clone(), Some(Arc::new(cost)));
    }

    let reference = params.reference.clone();
    let reference_jac = params.reference.clone();
    let (eps, lo, hi) = (params.epsilon, params.v_min, params.v_max);
    let constraints = FnConstraints::new(
        1 + 2 * UNITS,
        1,
        move |y, k, out| {
            out[0] = (y[UNITS] - reference.eval(k)).powi(2) - eps;
            for i in 0..UNITS {
                out[1 + i] = y[i] - hi;
                out[1 + UNITS + i] = lo - y[i];
            }
        },
        move |y, k, jac| {
            jac.fill(0.0);
            jac[(0, UNITS)] = 2.0 * (y[UNITS] - reference_jac.eval(k));
            for i in 0..UNITS {
                jac[(1 + i, i)] = 1.0;
                jac[(1 + UNITS + i, i)] = -1.0;
            }
        },
    );
    let problem = builder
        .constraints(Arc::new(constraints))
        .declare(DeclaredConstants {
            grad_lipschitz: Some(2.0 * params.cost_p.max(params.cost_q)),
            output_grad_lipschitz: Some(0.0),
            constraint_grad_lipschitz: vec![2.0],
            jacobian_lipschitz: Some(2.0),
            strong_convexity: Some(2.0 * params.cost_p.min(params.cost_q)),
            ..Default::default()
        })
        .build()?;
    Ok((problem, plant))
}

/// `y` at `x = 0` for the given loads, from the sensitivities alone.
pub fn zero_injection_voltages(params: &FeederParams, loads: &[f64]) -> DVector<f64> {
    let (r, _) = sensitivities(params);
    DVector::from_fn(UNITS, |i, _| {
        params.v0 - (0..UNITS).map(|j| r[(i, j)] * loads[j]).sum::<f64>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::check_gradients;

    #[test]
    fn default_tolerance_and_shape() {
        let params = FeederParams::default();
        assert_eq!(params.epsilon, 20.0);
        let (problem, plant) = scenario_feeder(&params).unwrap();
        assert_eq!((problem.n(), problem.m(), problem.num_constraints()), (8, 5, 9));
        assert_eq!(plant.w_dim(), 5);
        assert!(problem.sets_static());
    }

    #[test]
    fn projection_caps_active_power() {
        let (problem, _) = scenario_feeder(&FeederParams::default()).unwrap();
        let mut x = DVector::zeros(8);
        x[0] = 14.0;
        x[1] = 0.5;
        let p = problem.project(&x, 0).unwrap();
        assert!(p[0] <= 10.0 + 1e-9 && p[0] > 9.9, "{}", p[0]);
        assert!(p.norm() <= 10.0 + 1e-7);
    }

    #[test]
    fn gradients_check() {
        let (problem, plant) = scenario_feeder(&FeederParams::default()).unwrap();
        check_gradients(&problem, &plant, 10, 20, 4).unwrap();
    }
}
