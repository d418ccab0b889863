//! Invariant suite run by the `check` command.

use std::fmt;

use crate::bounds::{
    check_saddle_map, estimate_constants, map_perturbation_bound, regret_bound, violation_bound,
};
use crate::engine::run_online;
use crate::error::{Error, Result};
use crate::metrics::{avg_constraint_violation, dynamic_regret, path_sums};
use crate::oracle::optimal_trajectory;
use crate::problem::{check_gradients, AlgorithmConfig, Case, Mode, NoiseModel};
use crate::scenarios::{ExperimentConfig, BUILTIN};

/// Relative slack allowed when comparing measured values with bounds.
pub const BOUND_SLACK: f64 = 1e-9;
/// Random pairs for the monotonicity and Lipschitz sampling.
pub const MONOTONE_PAIRS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub scenario: String,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{mark} {:<10} {:<24} {}",
            self.scenario, self.name, self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    fn push(&mut self, scenario: &str, name: &'static str, outcome: Result<String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(e) => (false, e.to_string()),
        };
        self.items.push(CheckItem {
            scenario: scenario.to_string(),
            name,
            passed,
            detail,
        });
    }
}

fn fail(msg: String) -> Error {
    Error::Invariant(msg)
}

/// Run the whole suite on one configuration with `steps` steps.
pub fn check_config(cfg: &ExperimentConfig, steps: usize) -> Result<CheckReport> {
    let name = cfg.scenario.name();
    let mut report = CheckReport::default();
    let (problem, plant) = cfg.scenario.build()?;
    let algo = cfg.algorithm.clone().with_horizon(steps)?;

    report.push(name, "gradients", {
        check_gradients(&problem, &plant, steps / 2, 10, cfg.scenario.seed)
            .map(|r| format!("{} samples, worst f0 {:.1e}", r.samples, r.f0))
    });

    report.push(name, "feasibility", {
        run_online(&problem, &plant, &algo, None, None).map(|t| format!("{} records", t.len()))
    });

    report.push(
        name,
        "mode_coincidence",
        (|| {
            let quiet = plant.model_only();
            let a = run_online(
                &problem,
                &quiet,
                &algo.clone().with_mode(Mode::Feedback),
                None,
                None,
            )?;
            let b = run_online(
                &problem,
                &quiet,
                &algo.clone().with_mode(Mode::FeedForward),
                None,
                None,
            )?;
            let same = a.records.iter().zip(&b.records).all(|(ra, rb)| {
                ra.x.iter().zip(&rb.x).all(|(u, v)| u.to_bits() == v.to_bits())
                    && ra
                        .lambda
                        .iter()
                        .zip(&rb.lambda)
                        .all(|(u, v)| u.to_bits() == v.to_bits())
            });
            if same {
                Ok("bit-identical".to_string())
            } else {
                Err(fail("feedback and feed-forward differ without noise".into()))
            }
        })(),
    );

    if algo.case == Case::Case2 {
        let consts = estimate_constants(&problem, &plant, &algo, steps, 500)?;
        report.push(
            name,
            "map_perturbation",
            (|| {
                let noisy = if plant.noise().is_off() {
                    plant.clone().with_noise(NoiseModel::new(0.01, 0.05)?)
                } else {
                    plant.clone()
                };
                let t = run_online(&problem, &noisy, &algo, None, None)?;
                let bound = map_perturbation_bound(&consts, t.realized_e_y);
                let worst = t.records.iter().map(|r| r.map_perturbation).fold(0.0, f64::max);
                if worst <= bound * (1.0 + BOUND_SLACK) {
                    Ok(format!("max {worst:.3e} <= {bound:.3e}"))
                } else {
                    Err(fail(format!("perturbation {worst:.3e} exceeds {bound:.3e}")))
                }
            })(),
        );
        report.push(
            name,
            "saddle_map_monotone",
            (|| {
                let r = check_saddle_map(
                    &problem,
                    &plant,
                    &algo,
                    &consts,
                    MONOTONE_PAIRS,
                    cfg.scenario.seed,
                )?;
                if r.holds(BOUND_SLACK) {
                    Ok(format!(
                        "monotone ratio {:.3}, Lipschitz ratio {:.3e}",
                        r.min_monotone_ratio, r.max_lipschitz_ratio
                    ))
                } else {
                    Err(fail(format!("{r:?}")))
                }
            })(),
        );
    }

    if problem.analytic().is_some() {
        report.push(
            name,
            "bound_domination",
            (|| {
                let case1 = AlgorithmConfig::case1(algo.alpha, algo.kappa, steps)?;
                let quiet = plant.model_only();
                let t = run_online(&problem, &quiet, &case1, None, None)?;
                let o = optimal_trajectory(&problem, &quiet, &case1, steps)?;
                let consts = estimate_constants(&problem, &quiet, &case1, steps, 500)?;
                let h_star = o.h_star(&problem, &quiet)?;
                let regret = dynamic_regret(&t.h_values(), &h_star)?;
                let g: Vec<_> = t.records.iter().map(|r| r.g.clone()).collect();
                let viol = avg_constraint_violation(&g);
                let paths = path_sums(&o.sigma);
                for (i, path) in paths.iter().enumerate() {
                    let k = i + 1;
                    let b = regret_bound(&consts, case1.alpha, case1.kappa, k, *path, 0.0)?;
                    if regret[i] > b * (1.0 + BOUND_SLACK) {
                        return Err(fail(format!(
                            "regret {:.3e} above bound {b:.3e} at k = {k}",
                            regret[i]
                        )));
                    }
                    let vb = violation_bound(&consts, case1.alpha, case1.kappa, b);
                    if viol[i].iter().any(|v| *v > vb * (1.0 + BOUND_SLACK)) {
                        return Err(fail(format!("violation above bound {vb:.3e} at k = {k}")));
                    }
                }
                Ok(format!("{} steps", paths.len()))
            })(),
        );
    }
    Ok(report)
}

/// The suite on every built-in scenario with its default settings.
pub fn check_builtin(steps: usize) -> Result<CheckReport> {
    let mut all = CheckReport::default();
    for name in BUILTIN {
        let cfg = ExperimentConfig::builtin(name)?;
        all.items.extend(check_config(&cfg, steps)?.items);
    }
    Ok(all)
}
