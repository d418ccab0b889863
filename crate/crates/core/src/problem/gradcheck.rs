use nalgebra::{DMatrix, DVector};

use super::{sample_set, LinearPlant, TimeVaryingProblem};
use crate::error::{Error, Result};
use crate::util::{domain, stream_rng};

/// Central finite-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Accepted relative error between analytic and finite-difference derivatives.
pub const FD_TOLERANCE: f64 = 1e-4;

/// Worst relative errors seen by [`check_gradients`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientReport {
    pub samples: usize,
    pub f_blocks: f64,
    pub f0: f64,
    pub jacobian: f64,
}

fn rel_err(analytic: &DVector<f64>, fd: &DVector<f64>) -> f64 {
    (analytic - fd).norm() / analytic.norm().max(1.0)
}

fn fd_gradient(x: &DVector<f64>, f: impl Fn(&DVector<f64>) -> f64) -> DVector<f64> {
    let mut probe = x.clone();
    DVector::from_fn(x.len(), |i, _| {
        let xi = x[i];
        probe[i] = xi + FD_STEP;
        let up = f(&probe);
        probe[i] = xi - FD_STEP;
        let down = f(&probe);
        probe[i] = xi;
        (up - down) / (2.0 * FD_STEP)
    })
}

/// Compare every analytic gradient callback against central finite differences
/// at `samples` random points of `X(k)` (and their model outputs).
pub fn check_gradients(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<GradientReport> {
    problem.check_plant(plant)?;
    let mut rng = stream_rng(seed, domain::SAMPLING, k as u64);
    let sets = problem.sets_at(k);
    let mut report = GradientReport {
        samples,
        ..Default::default()
    };
    let fail = |name: &str, rel_err: f64, sample: usize| {
        Err(Error::GradientCheck {
            name: name.to_string(),
            rel_err,
            sample,
        })
    };
    for s in 0..samples {
        let mut x = DVector::zeros(problem.n());
        let mut off = 0;
        for set in &sets {
            x.rows_mut(off, set.dim()).copy_from(&sample_set(set, &mut rng));
            off += set.dim();
        }

        for (i, (off, dim, cost)) in problem.block_costs().enumerate() {
            let Some(cost) = cost else { continue };
            let xi = x.rows(off, dim).into_owned();
            let mut g = DVector::zeros(dim);
            cost.gradient(xi.as_slice(), k, g.as_mut_slice());
            let fd = fd_gradient(&xi, |v| cost.value(v.as_slice(), k));
            let e = rel_err(&g, &fd);
            report.f_blocks = report.f_blocks.max(e);
            if e > FD_TOLERANCE || !e.is_finite() {
                return fail(&format!("f_{i}"), e, s);
            }
        }

        let y = plant.model_output(&x, k)?;
        if problem.has_output_cost() {
            let g = problem.f0_gradient(&y, k);
            let fd = fd_gradient(&y, |v| problem.f0_value(v, k));
            let e = rel_err(&g, &fd);
            report.f0 = report.f0.max(e);
            if e > FD_TOLERANCE || !e.is_finite() {
                return fail("f0", e, s);
            }
        }

        let mtot = problem.num_constraints();
        if mtot > 0 {
            let jac = problem.g_jacobian(&y, k);
            if jac.shape() != (mtot, problem.m()) {
                return Err(Error::Invariant(format!(
                    "constraint Jacobian has shape {:?}, expected {:?}",
                    jac.shape(),
                    (mtot, problem.m())
                )));
            }
            let mut fd = DMatrix::zeros(mtot, problem.m());
            let mut probe = y.clone();
            for l in 0..problem.m() {
                probe[l] = y[l] + FD_STEP;
                let up = problem.g_values(&probe, k);
                probe[l] = y[l] - FD_STEP;
                let down = problem.g_values(&probe, k);
                probe[l] = y[l];
                fd.set_column(l, &((up - down) / (2.0 * FD_STEP)));
            }
            for j in 0..mtot {
                let a = jac.row(j).transpose();
                let b = fd.row(j).transpose();
                let e = rel_err(&a, &b);
                report.jacobian = report.jacobian.max(e);
                if e > FD_TOLERANCE || !e.is_finite() {
                    return fail(&format!("g_{j}"), e, s);
                }
            }
        }
    }
    Ok(report)
}
