//! Compare the continuation oracle with exhaustive grid search on small random
//! constrained quadratics.

use tvopt::oracle::{brute_force_grid, solve_p0};
use tvopt::scenarios::random_spd_instance;

fn main() -> tvopt::Result<()> {
    let grid_step = 1e-3;
    for seed in 0..6 {
        let n = seed as usize % 3 + 1;
        let (problem, plant) = random_spd_instance(seed, n, grid_step)?;
        let p0 = solve_p0(&problem, &plant, 0, 1e-6)?;
        let grid = brute_force_grid(&problem, &plant, 0, grid_step)?;
        println!(
            "seed {seed} n = {n}: continuation stopped at level {:.0e}, max deviation from grid {:.2e}",
            p0.level,
            (&p0.x - &grid).amax()
        );
    }
    Ok(())
}
