//! Scalar time schedules built from named primitives and composed by summation.

use std::sync::{Arc, OnceLock};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::util::{domain, stream_rng};

/// Longest horizon a Gaussian walk is tabulated for; later steps hold the last value.
const WALK_TABLE_LEN: usize = 200_000;

/// One primitive signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Constant {
        value: f64,
    },
    /// Zero before `start`, rises by `slope` per step until `end`, then holds.
    Ramp {
        start: usize,
        end: usize,
        slope: f64,
    },
    /// Adds `height` from step `at` onwards.
    Step {
        at: usize,
        height: f64,
    },
    /// `amplitude * sin(omega * k + phase)` inside the optional window `[start, end)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end: Option<usize>,
    },
    /// I.i.d. zero-mean Gaussian perturbation per step.
    Gaussian {
        std_dev: f64,
        seed: u64,
    },
    /// Random walk with Gaussian increments, clamped to `[-bound, bound]`.
    GaussianWalk {
        std_dev: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
        #[serde(skip)]
        table: WalkTable,
    },
}

#[derive(Debug, Clone, Default)]
pub struct WalkTable(Arc<OnceLock<Vec<f64>>>);

impl PartialEq for WalkTable {
    fn eq(&self, _other: &Self) -> bool {
        // derived data
        true
    }
}

impl Signal {
    pub fn walk(std_dev: f64, seed: u64, bound: Option<f64>) -> Self {
        Signal::GaussianWalk {
            std_dev,
            seed,
            bound,
            table: WalkTable::default(),
        }
    }

    pub fn eval(&self, k: usize) -> f64 {
        match self {
            Signal::Constant { value } => *value,
            Signal::Ramp { start, end, slope } => {
                let t = k.clamp(*start, (*end).max(*start)) - start;
                slope * t as f64
            }
            Signal::Step { at, height } => {
                if k >= *at {
                    *height
                } else {
                    0.0
                }
            }
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
                start,
                end,
            } => {
                let active = start.is_none_or(|s| k >= s) && end.is_none_or(|e| k < e);
                if active {
                    amplitude * (omega * k as f64 + phase).sin()
                } else {
                    0.0
                }
            }
            Signal::Gaussian { std_dev, seed } => {
                if *std_dev == 0.0 {
                    return 0.0;
                }
                let mut rng = stream_rng(*seed, domain::SCHEDULE, k as u64);
                Normal::new(0.0, *std_dev)
                    .expect("finite std_dev")
                    .sample(&mut rng)
            }
            Signal::GaussianWalk {
                std_dev,
                seed,
                bound,
                table,
            } => {
                let values = table.0.get_or_init(|| walk_table(*std_dev, *seed, *bound));
                values[k.min(values.len() - 1)]
            }
        }
    }
}

fn walk_table(std_dev: f64, seed: u64, bound: Option<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(WALK_TABLE_LEN);
    let mut rng = stream_rng(seed, domain::SCHEDULE, u64::MAX);
    let normal = Normal::new(0.0, std_dev.max(0.0)).expect("finite std_dev");
    let mut v = 0.0;
    for _ in 0..WALK_TABLE_LEN {
        out.push(v);
        v += normal.sample(&mut rng);
        if let Some(b) = bound {
            v = v.clamp(-b, b);
        }
    }
    out
}

/// Sum of primitive signals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(pub Vec<Signal>);

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule(vec![Signal::Constant { value }])
    }

    pub fn plus(mut self, s: Signal) -> Self {
        self.0.push(s);
        self
    }

    pub fn eval(&self, k: usize) -> f64 {
        self.0.iter().map(|s| s.eval(k)).sum()
    }

    pub fn is_static(&self) -> bool {
        self.0.iter().all(|s| matches!(s, Signal::Constant { .. }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives() {
        assert_eq!(Signal::Constant { value: 2.0 }.eval(99), 2.0);
        let ramp = Signal::Ramp {
            start: 10,
            end: 20,
            slope: 0.5,
        };
        assert_eq!(ramp.eval(5), 0.0);
        assert_eq!(ramp.eval(14), 2.0);
        assert_eq!(ramp.eval(50), 5.0);
        let step = Signal::Step { at: 3, height: -1.0 };
        assert_eq!(step.eval(2), 0.0);
        assert_eq!(step.eval(3), -1.0);
        let sin = Signal::Sinusoid {
            amplitude: 2.0,
            omega: std::f64::consts::FRAC_PI_2,
            phase: 0.0,
            start: Some(1),
            end: Some(4),
        };
        assert_eq!(sin.eval(0), 0.0);
        assert!((sin.eval(1) - 2.0).abs() < 1e-12);
        assert_eq!(sin.eval(4), 0.0);
    }

    #[test]
    fn random_primitives_are_reproducible() {
        let g = Signal::Gaussian {
            std_dev: 0.1,
            seed: 3,
        };
        assert_eq!(g.eval(17).to_bits(), g.eval(17).to_bits());
        let w = Signal::walk(0.01, 5, Some(0.2));
        let w2 = Signal::walk(0.01, 5, Some(0.2));
        assert_eq!(w.eval(0), 0.0);
        assert_eq!(w.eval(777).to_bits(), w2.eval(777).to_bits());
        assert!(w.eval(5000).abs() <= 0.2);
    }

    #[test]
    fn schedules_sum_and_roundtrip() {
        let s = Schedule::constant(1.0)
            .plus(Signal::Step { at: 2, height: 0.5 })
            .plus(Signal::walk(0.01, 1, None));
        assert_eq!(s.eval(0), 1.0);
        #[derive(Serialize, Deserialize)]
        struct Wrap {
            s: Schedule,
        }
        let text = toml::to_string(&Wrap { s: s.clone() }).unwrap();
        let back: Wrap = toml::from_str(&text).unwrap();
        assert_eq!(back.s, s);
        assert_eq!(back.s.eval(40).to_bits(), s.eval(40).to_bits());
    }
}
