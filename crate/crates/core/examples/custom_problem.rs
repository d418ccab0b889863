//! Build a problem from closures: two blocks, an output cost and a nonlinear
//! output constraint. Gradients are verified before running.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use tvopt::engine::run_online;
use tvopt::problem::{
    check_gradients, AlgorithmConfig, ConstantSignal, DeclaredConstants, FeasibleSet, FnConstraints, FnCost,
    LinearPlant, TimeVaryingProblem,
};

fn main() -> tvopt::Result<()> {
    // two scalar blocks with drifting targets; y = x0 + x1 must satisfy y^2 <= 1
    let target = |i: usize, k: usize| 0.8 * (0.01 * k as f64 + i as f64).cos();
    let block = |i: usize| {
        FnCost::new(
            move |x, k| (x[0] - target(i, k)).powi(2),
            move |x, k, g| g[0] = 2.0 * (x[0] - target(i, k)),
        )
    };
    let problem = TimeVaryingProblem::builder(1)
        .block(FeasibleSet::interval(-2.0, 2.0)?, Some(Arc::new(block(0))))
        .block(FeasibleSet::interval(-2.0, 2.0)?, Some(Arc::new(block(1))))
        .output_cost(Arc::new(FnCost::new(
            |y, _| 0.1 * y[0] * y[0],
            |y, _, g| g[0] = 0.2 * y[0],
        )))
        .constraints(Arc::new(FnConstraints::new(
            1,
            1,
            |y, _, out| out[0] = y[0] * y[0] - 1.0,
            |y, _, jac| jac[(0, 0)] = 2.0 * y[0],
        )))
        .declare(DeclaredConstants {
            grad_lipschitz: Some(2.0),
            output_grad_lipschitz: Some(0.2),
            constraint_grad_lipschitz: vec![2.0],
            strong_convexity: Some(2.0),
            ..Default::default()
        })
        .build()?;
    let plant = LinearPlant::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        DMatrix::zeros(1, 1),
        Arc::new(ConstantSignal(DVector::zeros(1))),
        0,
    )?;

    let report = check_gradients(&problem, &plant, 0, 100, 1)?;
    println!(
        "gradient check: worst relative errors {:.1e} {:.1e} {:.1e}",
        report.f_blocks, report.f0, report.jacobian
    );

    let config = AlgorithmConfig::case2(0.1, 0.01, 0.01, 800)?.with_dual_radius(20.0)?;
    let t = run_online(&problem, &plant, &config, None, None)?;
    for r in t.records.iter().step_by(100) {
        println!(
            "k = {:>3}: x = ({:+.3}, {:+.3}), y^2 - 1 = {:+.3}, lambda = {:.3}",
            r.k, r.x[0], r.x[1], r.g[0], r.lambda[0]
        );
    }
    Ok(())
}
