use log::debug;
use nalgebra::DVector;

use super::saddle::{default_start, solve_saddle_point, SaddleOptions};
use crate::error::{Error, Result};
use crate::problem::{LinearPlant, TimeVaryingProblem};

/// Regularization levels of the continuation, largest first.
pub const CONTINUATION: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];
/// Extra levels tried when the standard ones do not settle.
const EXTENDED: [f64; 3] = [1e-7, 1e-8, 1e-9];

/// Comparator solution of the unregularized program at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct P0Solution {
    pub x: DVector<f64>,
    /// Multiplier of the last regularized solve.
    pub lambda: DVector<f64>,
    /// Regularization level at which consecutive solutions agreed.
    pub level: f64,
}

/// Solve the unregularized program at step `k` by vanishing regularization:
/// `p = d` runs through [`CONTINUATION`] with warm starts until two consecutive
/// primal solutions differ by at most `tol`.
pub fn solve_p0(problem: &TimeVaryingProblem, plant: &LinearPlant, k: usize, tol: f64) -> Result<P0Solution> {
    solve_p0_from(problem, plant, k, tol, None)
}

pub(crate) fn solve_p0_from(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    k: usize,
    tol: f64,
    warm: Option<&DVector<f64>>,
) -> Result<P0Solution> {
    let strongly_convex = problem.declared().strong_convexity.is_some_and(|m| m > 0.0);
    if !strongly_convex && problem.n() > 3 {
        return Err(Error::Unsupported(format!(
            "comparator oracle needs a declared strong convexity modulus when n = {} > 3",
            problem.n()
        )));
    }
    let mut x = warm.cloned().unwrap_or_else(|| default_start(problem, k));
    let mut prev: Option<DVector<f64>> = None;
    for &level in CONTINUATION.iter().chain(EXTENDED.iter()) {
        let opts = SaddleOptions::new(level, level)
            .tol(0.1 * tol)
            .max_iter(2_000_000)
            .warm_start(x.clone());
        let sp = solve_saddle_point(problem, plant, k, &opts)?;
        let accepted = prev.as_ref().is_some_and(|p| (p - &sp.x).norm() <= tol);
        debug!(
            "continuation level {level:e} at step {k}: {} iterations",
            sp.iterations
        );
        x = sp.x.clone();
        if accepted {
            return Ok(P0Solution {
                x: sp.x,
                lambda: sp.lambda,
                level,
            });
        }
        prev = Some(sp.x);
    }
    Err(Error::OracleDiverged {
        k,
        iterations: CONTINUATION.len() + EXTENDED.len(),
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::engine::tests::static_constrained;
    use crate::problem::{ConstantSignal, DeclaredConstants, FeasibleSet, FnCost};

    #[test]
    fn box_quadratic() {
        let problem = TimeVaryingProblem::builder(1)
            .block(
                FeasibleSet::interval(0.0, 1.0).unwrap(),
                Some(Arc::new(FnCost::new(
                    |x, _| (x[0] - 0.3).powi(2),
                    |x, _, g| g[0] = 2.0 * (x[0] - 0.3),
                ))),
            )
            .declare(DeclaredConstants {
                strong_convexity: Some(2.0),
                ..Default::default()
            })
            .build()
            .unwrap();
        let plant = LinearPlant::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            Arc::new(ConstantSignal(DVector::zeros(1))),
            0,
        )
        .unwrap();
        let s = solve_p0(&problem, &plant, 0, 1e-6).unwrap();
        assert!((s.x[0] - 0.3).abs() < 1e-5);
    }

    #[test]
    fn constrained_example() {
        let (problem, plant) = static_constrained();
        let s = solve_p0(&problem, &plant, 0, 1e-5).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-4, "{}", s.x[0]);
    }
}
