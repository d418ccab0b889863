//! Random small strongly convex quadratic programs with grid-aligned data, used
//! to cross-check the numerical comparator against exhaustive grid search.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::problem::{
    ConstantSignal, DeclaredConstants, FeasibleSet, FnConstraints, FnCost, LinearPlant, TimeVaryingProblem,
};
use crate::util::{domain, stream_rng};

/// Eigenvalue range of the random Hessians.
pub const EIG_RANGE: (f64, f64) = (1.0, 3.0);

/// Box side per dimension `n = 1, 2, 3`.
const SIDES: [usize; 3] = [1000, 500, 200];

/// `min (x - c)^T Q (x - c) / 2` over a box with lower corner and side on the
/// `grid_step` lattice, plus the cap `y_0 <= b` with `b` on the same lattice.
/// `C = I`, no exogenous input.
pub fn random_spd_instance(seed: u64, n: usize, grid_step: f64) -> Result<(TimeVaryingProblem, LinearPlant)> {
    assert!((1..=3).contains(&n), "instances have 1 to 3 dimensions");
    let mut rng = stream_rng(seed, domain::FIXTURE, n as u64);

    let normal = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let q_basis = normal.qr().q();
    let eig = DVector::from_fn(n, |_, _| rng.random_range(EIG_RANGE.0..=EIG_RANGE.1));
    let hess = &q_basis * DMatrix::from_diagonal(&eig) * q_basis.transpose();

    let side = SIDES[n - 1];
    let lower_idx: Vec<i64> = (0..n).map(|_| rng.random_range(-1000..=0)).collect();
    let lower: Vec<f64> = lower_idx.iter().map(|i| *i as f64 * grid_step).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + side as f64 * grid_step).collect();
    let width = side as f64 * grid_step;
    let center = DVector::from_fn(n, |i, _| {
        lower[i] - 0.25 * width + rng.random_range(0.0..1.5) * width
    });
    let cap_idx = rng.random_range(side / 4..=3 * side / 4);
    let cap = lower[0] + cap_idx as f64 * grid_step;

    let h = hess.clone();
    let c = center.clone();
    let hg = hess.clone();
    let cg = center;
    let cost = FnCost::new(
        move |x, _| {
            let d = DVector::from_column_slice(x) - &c;
            0.5 * d.dot(&(&h * &d))
        },
        move |x, _, g| {
            let d = DVector::from_column_slice(x) - &cg;
            g.copy_from_slice((&hg * d).as_slice());
        },
    );
    let problem = TimeVaryingProblem::builder(n)
        .block(FeasibleSet::boxed(lower, upper)?, Some(Arc::new(cost)))
        .constraints(Arc::new(FnConstraints::new(
            1,
            0,
            move |y, _, out| out[0] = y[0] - cap,
            |_, _, j| {
                j.fill(0.0);
                j[(0, 0)] = 1.0;
            },
        )))
        .declare(DeclaredConstants {
            grad_lipschitz: Some(EIG_RANGE.1),
            output_grad_lipschitz: Some(0.0),
            strong_convexity: Some(EIG_RANGE.0),
            jacobian_bound: Some(1.0),
            ..Default::default()
        })
        .build()?;
    let plant = LinearPlant::new(
        DMatrix::identity(n, n),
        DMatrix::zeros(n, 1),
        Arc::new(ConstantSignal(DVector::zeros(1))),
        seed,
    )?;
    Ok((problem, plant))
}
