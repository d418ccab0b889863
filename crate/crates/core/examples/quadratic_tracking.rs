//! Track a drifting scalar target with the regularized primal-dual iteration
//! and compare against the closed-form reference trajectory.

use tvopt::engine::run_online;
use tvopt::metrics::{compute_metrics, tracking_error};
use tvopt::oracle::optimal_trajectory;
use tvopt::problem::AlgorithmConfig;
use tvopt::scenarios::{scenario_quadratic_drift, QuadraticParams};

fn main() -> tvopt::Result<()> {
    let params = QuadraticParams::drift(0.5, 0.02).with_cap(0.3);
    let (problem, plant) = scenario_quadratic_drift(&params)?;
    let config = AlgorithmConfig::case2(0.2, 0.05, 0.05, 600)?.with_dual_radius(5.0)?;

    let traj = run_online(&problem, &plant, &config, None, None)?;
    let oracle = optimal_trajectory(&problem, &plant, &config, config.horizon)?;
    let errors = tracking_error(&traj, &oracle)?;
    let metrics = compute_metrics(&problem, &plant, &traj, Some(&oracle))?;

    println!("{:>5} {:>9} {:>9} {:>9} {:>10}", "k", "target", "x", "x*", "S(k)");
    for k in (0..=config.horizon).step_by(50) {
        println!(
            "{k:>5} {:>9.4} {:>9.4} {:>9.4} {:>10.3e}",
            params.target(k),
            traj.records[k].x[0],
            oracle.x_star[k][0],
            errors[k]
        );
    }
    let last = config.horizon;
    println!(
        "average regret against the regularized reference: {:.3e}",
        metrics.regret[last]
    );
    println!(
        "largest average cap violation: {:.3e}",
        metrics.violation_max(last + 1)
    );
    Ok(())
}
