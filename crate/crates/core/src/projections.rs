//! Euclidean projections onto the primal feasible sets and the dual set.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::{FeasibleSet, SetMember};

/// Coordinatewise clamp. Caller guarantees `lower <= upper`.
pub(crate) fn clamp(v: &DVector<f64>, lower: &[f64], upper: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        v.len(),
        v.iter()
            .zip(lower.iter().zip(upper))
            .map(|(&x, (&l, &u))| x.max(l).min(u)),
    )
}

/// Projection onto the box `[lower, upper]`.
pub fn project_box(x: &DVector<f64>, lower: &[f64], upper: &[f64]) -> Result<DVector<f64>> {
    // validation lives in the set constructor
    let set = FeasibleSet::boxed(lower.to_vec(), upper.to_vec())?;
    crate::error::check_dim("x", set.dim(), x.len())?;
    Ok(clamp(x, lower, upper))
}

/// Projection onto the origin-centered ball of the given radius.
pub fn project_ball(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = v.norm();
    if n <= radius {
        v.clone()
    } else {
        v * (radius / n)
    }
}

/// Projection onto `{u >= 0 : ||u|| <= radius}`.
///
/// Clipping to the orthant followed by radial scaling is exact here because the
/// set is a ball centered at the apex of a convex cone.
pub fn project_nonneg_ball(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    let u = v.map(|x| x.max(0.0));
    if radius.is_infinite() {
        return u;
    }
    project_ball(&u, radius)
}

/// Dykstra's alternating projection onto an intersection of boxes and balls.
///
/// Stops once a full sweep moves the iterate by at most `tol` and the iterate is
/// within `tol` of every member.
pub fn project_intersection(
    v: &DVector<f64>,
    members: &[SetMember],
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    match members {
        [] => return Err(Error::InvalidSet("empty intersection member list".into())),
        [only] => return Ok(only.project(v)),
        _ => {}
    }
    let mut x = v.clone();
    let mut increments = vec![DVector::zeros(v.len()); members.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let prev = x.clone();
        for (m, q) in members.iter().zip(increments.iter_mut()) {
            let shifted = &x + &*q;
            let y = m.project(&shifted);
            *q = shifted - &y;
            x = y;
        }
        residual = (&x - &prev).norm();
        if residual <= tol {
            let spread = members
                .iter()
                .map(|m| (m.project(&x) - &x).norm())
                .fold(0.0, f64::max);
            if spread <= tol {
                return Ok(x);
            }
        }
    }
    Err(Error::ProjectionDiverged {
        iterations: max_iter,
        residual,
        last: x,
    })
}

/// Blockwise projection onto a product of feasible sets.
pub fn project_product(x: &DVector<f64>, blocks: &[FeasibleSet]) -> Result<DVector<f64>> {
    let total: usize = blocks.iter().map(FeasibleSet::dim).sum();
    crate::error::check_dim("x", total, x.len())?;
    let mut out = DVector::zeros(x.len());
    let mut offset = 0;
    for set in blocks {
        let d = set.dim();
        let block = x.rows(offset, d).into_owned();
        out.rows_mut(offset, d).copy_from(&set.project(&block)?);
        offset += d;
    }
    Ok(out)
}

/// Dual feasible set `{lambda >= 0 : ||lambda|| <= radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSet {
    radius: f64,
}

impl DualSet {
    /// `radius` may be `f64::INFINITY` (the plain nonnegative orthant), which the
    /// oracle uses for the unregularized comparator.
    pub fn new(radius: f64) -> Result<Self> {
        if radius > 0.0 && !radius.is_nan() {
            Ok(Self { radius })
        } else {
            Err(Error::InvalidConfig(format!(
                "dual radius must be positive, got {radius}"
            )))
        }
    }

    /// The set used with step size `alpha` and exponent `kappa`: radius `alpha^-kappa`.
    pub fn for_step(alpha: f64, kappa: f64) -> Result<Self> {
        Self::new(alpha.powf(-kappa))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        project_nonneg_ball(v, self.radius)
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        v.iter().all(|&x| x >= -tol) && v.norm() <= self.radius + tol
    }

    /// True when `v` sits on the spherical part of the boundary.
    pub fn on_boundary(&self, v: &DVector<f64>) -> bool {
        self.radius.is_finite() && v.norm() >= self.radius * (1.0 - 1e-12)
    }

    /// `sup ||lambda||_1` over the set for a given dimension.
    pub fn l1_bound(&self, dim: usize) -> f64 {
        self.radius * (dim as f64).sqrt()
    }
}
