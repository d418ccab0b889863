use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{FeasibleSet, LinearPlant, TimeVaryingProblem};

/// Constraint values up to this level count as satisfied on the grid.
pub const GRID_FEASIBILITY_TOL: f64 = 1e-9;

/// Exhaustive search over the grid `lower + i * grid_step` inside `X(k)`.
///
/// Only for `n <= 3`. Points that violate `g` by more than
/// [`GRID_FEASIBILITY_TOL`] are discarded.
pub fn brute_force_grid(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    k: usize,
    grid_step: f64,
) -> Result<DVector<f64>> {
    let n = problem.n();
    if n > 3 {
        return Err(Error::Unsupported(format!("grid search needs n <= 3, got {n}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidConfig("grid step must be positive".into()));
    }
    problem.check_plant(plant)?;
    let sets = problem.sets_at(k);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for s in &sets {
        match s {
            FeasibleSet::Box { .. } | FeasibleSet::Intersection { .. } => {}
            _ => {
                return Err(Error::Unsupported(
                    "grid search supports box and box-ball sets only".into(),
                ))
            }
        }
        let (l, u) = s.bounding_box();
        lower.extend(l);
        upper.extend(u);
    }
    let counts: Vec<usize> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| ((u - l) / grid_step + 1e-9).floor() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let coord = |flat: usize| -> DVector<f64> {
        let mut rem = flat;
        DVector::from_fn(n, |i, _| {
            let idx = rem % counts[i];
            rem /= counts[i];
            lower[i] + idx as f64 * grid_step
        })
    };
    let best = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let x = coord(flat);
            if !problem.contains(&x, k) {
                return None;
            }
            let y = plant.model_output(&x, k).ok()?;
            if problem.g_values(&y, k).iter().any(|&g| g > GRID_FEASIBILITY_TOL) {
                return None;
            }
            Some((problem.f_value(&x, k) + problem.f0_value(&y, k), flat))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match best {
        Some((_, flat)) => Ok(coord(flat)),
        None => Err(Error::Invariant(format!(
            "no feasible grid point at step {k} with grid step {grid_step}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::engine::tests::static_constrained;
    use crate::problem::{ConstantSignal, FnCost};

    fn identity_plant(n: usize) -> LinearPlant {
        LinearPlant::new(
            DMatrix::identity(n, n),
            DMatrix::zeros(n, 1),
            Arc::new(ConstantSignal(DVector::zeros(1))),
            0,
        )
        .unwrap()
    }

    #[test]
    fn examples() {
        let p = TimeVaryingProblem::builder(1)
            .block(
                FeasibleSet::interval(0.0, 1.0).unwrap(),
                Some(Arc::new(FnCost::new(
                    |x, _| (x[0] - 0.3).powi(2),
                    |x, _, g| g[0] = 2.0 * (x[0] - 0.3),
                ))),
            )
            .build()
            .unwrap();
        let x = brute_force_grid(&p, &identity_plant(1), 0, 0.1).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-12);

        let (p, plant) = static_constrained();
        let x = brute_force_grid(&p, &plant, 0, 0.01).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);

        let p = TimeVaryingProblem::builder(2)
            .block(
                FeasibleSet::cube(2, -1.0, 1.0).unwrap(),
                Some(Arc::new(FnCost::new(
                    |x, _| (x[0] - 0.2).powi(2) + (x[1] + 0.4).powi(2),
                    |x, _, g| {
                        g[0] = 2.0 * (x[0] - 0.2);
                        g[1] = 2.0 * (x[1] + 0.4);
                    },
                ))),
            )
            .build()
            .unwrap();
        let x = brute_force_grid(&p, &identity_plant(2), 0, 0.01).unwrap();
        assert!((x[0] - 0.2).abs() < 1e-9 && (x[1] + 0.4).abs() < 1e-9);
    }

    #[test]
    fn rejects_large_problems() {
        let p = TimeVaryingProblem::builder(4)
            .block(FeasibleSet::cube(4, -1.0, 1.0).unwrap(), None)
            .build()
            .unwrap();
        assert!(matches!(
            brute_force_grid(&p, &identity_plant(4), 0, 0.1),
            Err(Error::Unsupported(_))
        ));
    }
}
