//! Real-time flow control on a 6-node, 8-link network with two traffic flows.
//!
//! Decision vector (28 entries):
//!
//! | range   | meaning                                        | set           |
//! |---------|------------------------------------------------|---------------|
//! | 0..2    | source rates of flows 1 and 2 (nodes 1 and 4)  | `[0, x_max]`  |
//! | 2..4    | delivered rates (nodes 3 and 6), nonpositive   | `[-d_max, 0]` |
//! | 4..20   | per-link per-flow rates `r[2e + s]`            | `[0, r_max]`  |
//! | 20..28  | link transmission powers                       | `[0, p_max]`  |
//!
//! Output vector (28 entries): link loads `sum_s r + w`, powers, and the
//! per-node per-flow balances `x + inflow - outflow`. The constraints are
//! `load - capacity(p) <= 0` per link (nonlinear, listed first) and
//! `balance <= 0` per node and flow.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    DeclaredConstants, FeasibleSet, FnConstraints, FnCost, GaussianSignal, LinearPlant, TimeVaryingProblem,
};
use crate::schedule::{Schedule, Signal};
use crate::util::{domain, stream_rng};

pub const NODES: usize = 6;
pub const FLOWS: usize = 2;
/// Directed links, zero-based `(from, to)`.
pub const LINKS: [(usize, usize); 8] = [(0, 1), (1, 2), (0, 4), (4, 2), (3, 4), (4, 5), (3, 1), (1, 5)];
pub const SOURCES: [usize; FLOWS] = [0, 3];
pub const DESTINATIONS: [usize; FLOWS] = [2, 5];
/// Mean exogenous traffic per link.
pub const EXO_MEAN: [f64; 8] = [0.2, 0.3, 0.3, 0.4, 0.5, 0.2, 0.1, 0.4];

const E: usize = LINKS.len();
pub const N: usize = 2 * FLOWS + E * FLOWS + E;
pub const M: usize = E + E + NODES * FLOWS;
pub const SRC: usize = 0;
pub const DST: usize = FLOWS;
pub const RATE: usize = 2 * FLOWS;
pub const POWER: usize = RATE + E * FLOWS;
/// Where the capacity extension switches from `log` to linear.
const LOG_KNEE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingParams {
    pub source_max: f64,
    pub dest_max: f64,
    pub rate_max: f64,
    pub power_max: f64,
    /// Link cost `(rate_cost / 2) ||r||^2`.
    pub rate_cost: f64,
    /// Power cost `power_cost ||p||^2`.
    pub power_cost: f64,
    /// Utility argument floor `eps` in `kappa log(max(x, eps))`.
    pub utility_floor: f64,
    /// Utility weight schedule per flow, clamped to `[kappa_min, kappa_max]`.
    pub kappa: Vec<Schedule>,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub exo_mean: Vec<f64>,
    pub exo_variance: f64,
    /// Channel gain `h = (re + n1) + j (im + n2)`, `n ~ N(0, variance)`
    /// clipped at `channel_clip` standard deviations; capacity uses `|h|^2`.
    pub channel_mean: [f64; 2],
    pub channel_variance: f64,
    pub channel_clip: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        let flow1 = Schedule::constant(1.0)
            .plus(Signal::Gaussian {
                std_dev: 0.02,
                seed: 11,
            })
            .plus(Signal::Sinusoid {
                amplitude: 0.2,
                omega: 0.01,
                phase: 0.0,
                start: None,
                end: None,
            })
            .plus(Signal::Step { at: 750, height: 0.5 });
        let flow2 = Schedule::constant(0.8)
            .plus(Signal::Gaussian {
                std_dev: 0.02,
                seed: 12,
            })
            .plus(Signal::Ramp {
                start: 200,
                end: 500,
                slope: 0.001,
            })
            .plus(Signal::Step {
                at: 750,
                height: -0.3,
            });
        Self {
            source_max: 2.0,
            dest_max: 3.0,
            rate_max: 1.5,
            power_max: 5.0,
            rate_cost: 2.0,
            power_cost: 0.05,
            utility_floor: 1e-6,
            kappa: vec![flow1, flow2],
            kappa_min: 0.05,
            kappa_max: 5.0,
            exo_mean: EXO_MEAN.to_vec(),
            exo_variance: 0.05,
            channel_mean: [1.0, 1.0],
            channel_variance: 0.01,
            channel_clip: 4.0,
        }
    }
}

impl RoutingParams {
    /// Utility weights with a single step of `height` on every flow at `at`
    /// and no other variation.
    pub fn step_change(at: usize, height: f64) -> Self {
        let base = Self::default();
        let kappa = [1.0, 0.8]
            .iter()
            .map(|&v| Schedule::constant(v).plus(Signal::Step { at, height }))
            .collect();
        Self { kappa, ..base }
    }

    /// Freeze exogenous traffic and channel gains at their means.
    pub fn deterministic(mut self) -> Self {
        self.exo_variance = 0.0;
        self.channel_variance = 0.0;
        self
    }

    pub fn kappa_at(&self, flow: usize, k: usize) -> f64 {
        self.kappa[flow].eval(k).clamp(self.kappa_min, self.kappa_max)
    }

    /// Largest possible channel power gain.
    pub fn gamma_max(&self) -> f64 {
        let s = self.channel_clip * self.channel_variance.sqrt();
        (self.channel_mean[0].abs() + s).powi(2) + (self.channel_mean[1].abs() + s).powi(2)
    }

    /// Channel power gains `|h|^2` of all links at step `k`.
    pub fn gains(&self, seed: u64, k: usize) -> [f64; E] {
        let mut rng = stream_rng(seed, domain::CHANNEL, k as u64);
        let sd = self.channel_variance.sqrt();
        let normal = Normal::new(0.0, sd).expect("finite variance");
        let clip = self.channel_clip * sd;
        let mut out = [0.0; E];
        for g in out.iter_mut() {
            let re = self.channel_mean[0] + normal.sample(&mut rng).clamp(-clip, clip);
            let im = self.channel_mean[1] + normal.sample(&mut rng).clamp(-clip, clip);
            *g = re * re + im * im;
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            self.source_max,
            self.dest_max,
            self.rate_max,
            self.power_max,
            self.utility_floor,
            self.kappa_min,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidConfig(
                "routing rate, power and utility bounds must be positive".into(),
            ));
        }
        if self.kappa_max < self.kappa_min {
            return Err(Error::InvalidConfig("kappa_max below kappa_min".into()));
        }
        if self.rate_cost < 0.0
            || self.power_cost < 0.0
            || self.exo_variance < 0.0
            || self.channel_variance < 0.0
        {
            return Err(Error::InvalidConfig(
                "routing costs and variances must be nonnegative".into(),
            ));
        }
        if self.kappa.len() != FLOWS {
            return Err(Error::DimensionMismatch {
                field: "kappa",
                expected: FLOWS,
                got: self.kappa.len(),
            });
        }
        if self.exo_mean.len() != E {
            return Err(Error::DimensionMismatch {
                field: "exo_mean",
                expected: E,
                got: self.exo_mean.len(),
            });
        }
        Ok(())
    }
}

/// Capacity `log(1 + gamma p)`, continued linearly below `1 + gamma p = 1/2`,
/// and its derivative in `p`.
pub fn capacity(gamma: f64, p: f64) -> (f64, f64) {
    let t = 1.0 + gamma * p;
    if t >= LOG_KNEE {
        (t.ln(), gamma / t)
    } else {
        (LOG_KNEE.ln() + (t - LOG_KNEE) / LOG_KNEE, gamma / LOG_KNEE)
    }
}

/// Row of the balance for node `j` and flow `s` in `y`.
pub fn balance_row(j: usize, s: usize) -> usize {
    2 * E + j * FLOWS + s
}

fn output_matrices() -> (DMatrix<f64>, DMatrix<f64>) {
    let mut c = DMatrix::zeros(M, N);
    let mut d = DMatrix::zeros(M, E);
    for (e, &(a, b)) in LINKS.iter().enumerate() {
        d[(e, e)] = 1.0;
        c[(E + e, POWER + e)] = 1.0;
        for s in 0..FLOWS {
            let col = RATE + FLOWS * e + s;
            c[(e, col)] = 1.0;
            c[(balance_row(b, s), col)] += 1.0;
            c[(balance_row(a, s), col)] -= 1.0;
        }
    }
    for s in 0..FLOWS {
        c[(balance_row(SOURCES[s], s), SRC + s)] = 1.0;
        c[(balance_row(DESTINATIONS[s], s), DST + s)] = 1.0;
    }
    (c, d)
}

/// Build the routing problem; channel gains and exogenous traffic are drawn
/// from `seed`.
pub fn scenario_routing(params: &RoutingParams, seed: u64) -> Result<(TimeVaryingProblem, LinearPlant)> {
    params.validate()?;
    let eps = params.utility_floor;

    let util = Arc::new(params.clone());
    let util_grad = util.clone();
    let sources = FnCost::new(
        move |x, k| {
            (0..FLOWS)
                .map(|s| -util.kappa_at(s, k) * x[s].max(eps).ln())
                .sum()
        },
        move |x, k, g| {
            for s in 0..FLOWS {
                g[s] = -util_grad.kappa_at(s, k) / x[s].max(eps);
            }
        },
    );
    let rc = params.rate_cost;
    let rates = FnCost::new(
        move |r, _| 0.5 * rc * r.iter().map(|v| v * v).sum::<f64>(),
        move |r, _, g| {
            for (gi, ri) in g.iter_mut().zip(r) {
                *gi = rc * ri;
            }
        },
    );
    let pc = params.power_cost;
    let powers = FnCost::new(
        move |p, _| pc * p.iter().map(|v| v * v).sum::<f64>(),
        move |p, _, g| {
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi = 2.0 * pc * pi;
            }
        },
    );

    let chan = Arc::new(params.clone());
    let chan_jac = chan.clone();
    let constraints = FnConstraints::new(
        E + NODES * FLOWS,
        E,
        move |y, k, out| {
            let gains = chan.gains(seed, k);
            for e in 0..E {
                out[e] = y[e] - capacity(gains[e], y[E + e]).0;
            }
            for i in 0..NODES * FLOWS {
                out[E + i] = y[2 * E + i];
            }
        },
        move |y, k, jac| {
            jac.fill(0.0);
            let gains = chan_jac.gains(seed, k);
            for e in 0..E {
                jac[(e, e)] = 1.0;
                jac[(e, E + e)] = -capacity(gains[e], y[E + e]).1;
            }
            for i in 0..NODES * FLOWS {
                jac[(E + i, 2 * E + i)] = 1.0;
            }
        },
    );

    let gmax = params.gamma_max();
    let lgj = gmax * gmax / (LOG_KNEE * LOG_KNEE);
    let declared = DeclaredConstants {
        grad_lipschitz: Some(
            (params.kappa_max / (eps * eps))
                .max(params.rate_cost)
                .max(2.0 * params.power_cost),
        ),
        output_grad_lipschitz: Some(0.0),
        constraint_grad_lipschitz: vec![lgj; E],
        jacobian_bound: Some((1.0 + (gmax / LOG_KNEE).powi(2)).sqrt()),
        ..Default::default()
    };

    let problem = TimeVaryingProblem::builder(M)
        .block(
            FeasibleSet::cube(FLOWS, 0.0, params.source_max)?,
            Some(Arc::new(sources)),
        )
        .block(FeasibleSet::cube(FLOWS, -params.dest_max, 0.0)?, None)
        .block(
            FeasibleSet::cube(E * FLOWS, 0.0, params.rate_max)?,
            Some(Arc::new(rates)),
        )
        .block(
            FeasibleSet::cube(E, 0.0, params.power_max)?,
            Some(Arc::new(powers)),
        )
        .constraints(Arc::new(constraints))
        .declare(declared)
        .build()?;

    let (c, d) = output_matrices();
    let exo = GaussianSignal {
        mean: DVector::from_column_slice(&params.exo_mean),
        variance: params.exo_variance,
        seed,
    };
    let plant = LinearPlant::new(c, d, Arc::new(exo), seed)?;
    Ok((problem, plant))
}
