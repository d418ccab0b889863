//! Final average regret and violation over a grid of step sizes and
//! regularization levels, run in parallel. `p = d = 0` is the unregularized case.

use rayon::prelude::*;
use tvopt::engine::run_online;
use tvopt::metrics::{avg_constraint_violation, dynamic_regret};
use tvopt::oracle::optimal_trajectory;
use tvopt::problem::AlgorithmConfig;
use tvopt::scenarios::{scenario_quadratic_drift, QuadraticParams};

fn main() -> tvopt::Result<()> {
    let (problem, plant) = scenario_quadratic_drift(&QuadraticParams::drift(0.5, 0.02).with_cap(0.3))?;
    let horizon = 3000;
    let unregularized = AlgorithmConfig::case1(0.1, 1.0 / 3.0, horizon)?;
    let reference = optimal_trajectory(&problem, &plant, &unregularized, horizon)?;
    let h_star = reference.h_star(&problem, &plant)?;

    let grid: Vec<(f64, f64)> = [0.02, 0.05, 0.1, 0.2, 0.4]
        .iter()
        .flat_map(|a| [0.0, 0.01, 0.1, 0.5].map(|r| (*a, r)))
        .collect();
    let rows: Vec<tvopt::Result<(f64, f64, f64, f64)>> = grid
        .par_iter()
        .map(|&(alpha, reg)| {
            let cfg = if reg == 0.0 {
                AlgorithmConfig::case1(alpha, 1.0 / 3.0, horizon)?
            } else {
                AlgorithmConfig::case2(alpha, reg, reg, horizon)?
            };
            let t = run_online(&problem, &plant, &cfg, None, None)?;
            let regret = dynamic_regret(&t.h_values(), &h_star)?;
            let g: Vec<_> = t.records.iter().map(|r| r.g.clone()).collect();
            let viol = avg_constraint_violation(&g);
            Ok((alpha, reg, regret[horizon], viol[horizon][0]))
        })
        .collect();
    println!("regret and violation against the unregularized comparator");
    println!(
        "{:>6} {:>6} {:>12} {:>12}",
        "alpha", "p = d", "regret", "violation"
    );
    for row in rows {
        let (a, r, reg, v) = row?;
        println!("{a:>6} {r:>6} {reg:>12.4e} {v:>12.4e}");
    }
    Ok(())
}
