//! Accelerated projected gradient with backtracking and adaptive restart.

use nalgebra::DVector;

use crate::error::Result;

/// Steps shorter than this multiple of the unit roundoff (relative to `||x||`)
/// no longer change the iterate meaningfully; the run stops there.
const STALL_ULPS: f64 = 1e3;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ApgOptions {
    /// Stop once the gradient mapping norm falls below this value.
    pub grad_map_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct ApgResult {
    pub x: DVector<f64>,
    pub grad_map: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lipschitz: f64,
}

/// Minimize a smooth convex function over a convex set.
///
/// `objective` returns value and gradient; `project` is the Euclidean
/// projection onto the feasible set.
pub(crate) fn minimize(
    x0: &DVector<f64>,
    objective: impl Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
    project: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    opts: ApgOptions,
) -> Result<ApgResult> {
    let mut x = project(x0)?;
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut lip = 1.0_f64;
    let mut best = (f64::INFINITY, x.clone());
    for it in 0..opts.max_iter {
        let (fy, gy) = objective(&y)?;
        let (x_new, step_norm) = loop {
            let cand = project(&(&y - &gy / lip))?;
            let d = &cand - &y;
            let (fc, _) = objective(&cand)?;
            let model = fy + gy.dot(&d) + 0.5 * lip * d.norm_squared();
            if fc <= model + 1e-12 * fy.abs().max(1.0) || lip > 1e300 {
                break (cand, d.norm());
            }
            lip *= 2.0;
        };
        let grad_map = lip * step_norm;
        if grad_map < best.0 {
            best = (grad_map, x_new.clone());
        }
        let stalled = step_norm <= STALL_ULPS * f64::EPSILON * x_new.norm().max(1.0);
        if grad_map <= opts.grad_map_tol || stalled {
            return Ok(ApgResult {
                x: x_new,
                grad_map,
                iterations: it + 1,
                converged: true,
                lipschitz: lip,
            });
        }
        let restart = (&y - &x_new).dot(&(&x_new - &x)) > 0.0;
        if restart {
            t = 1.0;
            y = x_new.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &x_new + (&x_new - &x) * ((t - 1.0) / t_next);
            t = t_next;
        }
        x = x_new;
        lip *= 0.95;
    }
    Ok(ApgResult {
        x: best.1,
        grad_map: best.0,
        iterations: opts.max_iter,
        converged: false,
        lipschitz: lip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn ill_conditioned_box_quadratic() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e4, 30.0]));
        let b = DVector::from_vec(vec![2.0, -3.0, 0.5]);
        let res = minimize(
            &DVector::zeros(3),
            |x| {
                let r = &a * x - &b;
                Ok((0.5 * x.dot(&(&a * x)) - b.dot(x), r))
            },
            |x| Ok(x.map(|v| v.clamp(-1.0, 1.0))),
            ApgOptions {
                grad_map_tol: 1e-10,
                max_iter: 100_000,
            },
        )
        .unwrap();
        assert!(res.converged);
        let expect = [1.0, -3e-4, 0.5 / 30.0];
        for (got, want) in res.x.iter().zip(expect) {
            assert!((got - want).abs() < 1e-9, "{}", res.x);
        }
    }
}
