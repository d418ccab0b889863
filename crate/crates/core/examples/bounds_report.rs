//! Estimate problem constants and evaluate the regret, violation, contraction
//! and asymptotic tracking bounds for a range of step sizes.

use tvopt::bounds::{
    asymptotic_bound, best_step, bound_record, contraction_coeff, critical_step, estimate_constants,
    tuned_step_rates,
};
use tvopt::metrics::path_sums;
use tvopt::oracle::optimal_trajectory;
use tvopt::problem::AlgorithmConfig;
use tvopt::scenarios::{scenario_quadratic_drift, QuadraticParams};

fn main() -> tvopt::Result<()> {
    let (problem, plant) = scenario_quadratic_drift(&QuadraticParams::drift(0.5, 0.02).with_cap(0.3))?;
    let horizon = 2000;

    println!("Case 1 (p = d = 0, dual radius alpha^-1/3):");
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "alpha", "B(K)", "viol bound", "limit"
    );
    for alpha in [0.02, 0.05, 0.1, 0.2] {
        let cfg = AlgorithmConfig::case1(alpha, 1.0 / 3.0, horizon)?;
        let consts = estimate_constants(&problem, &plant, &cfg, horizon, 1000)?;
        let oracle = optimal_trajectory(&problem, &plant, &cfg, horizon)?;
        let paths = path_sums(&oracle.sigma);
        let rec = bound_record(&consts, alpha, cfg.kappa, &paths, 0.0, oracle.sigma_bar_max());
        println!(
            "{alpha:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
            rec.regret[horizon - 1],
            rec.violation[horizon - 1],
            rec.regret_limit
        );
    }

    let probe = AlgorithmConfig::case1(0.1, 1.0 / 3.0, horizon)?;
    let consts = estimate_constants(&problem, &plant, &probe, horizon, 1000)?;
    let (rk, vk) = tuned_step_rates(&consts, 1.0, 10_000);
    println!("alpha = K^-3/4 at K = 10^4: regret bound {rk:.4e}, violation bound {vk:.4e}");

    println!("\nCase 2 (p = d = 0.1):");
    let cfg = AlgorithmConfig::case2(0.1, 0.1, 0.1, horizon)?;
    let consts = estimate_constants(&problem, &plant, &cfg, horizon, 1000)?;
    println!(
        "eta = {:.3}, L_phi = {:.3}, best alpha = {:.4e}, critical alpha = {:.4e}",
        consts.eta_phi,
        consts.l_phi,
        best_step(&consts),
        critical_step(&consts)
    );
    let oracle = optimal_trajectory(&problem, &plant, &cfg, horizon)?;
    for e_y in [0.0, 0.01, 0.05] {
        let alpha = best_step(&consts);
        let c = contraction_coeff(&consts, alpha);
        let s = asymptotic_bound(&consts, alpha, e_y, oracle.sigma_bar_max())?;
        println!(
            "e_y = {e_y:<5} c(alpha) = {:.8} asymptotic tracking bound {s:.4e}",
            c.value
        );
    }
    Ok(())
}
