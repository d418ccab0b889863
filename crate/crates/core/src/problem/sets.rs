//! Feasible sets for primal blocks and their uniform size bounds.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projections;

/// Membership tolerance for the exactly projectable variants.
pub const TAU_PROJ: f64 = 1e-9;
/// Default Dykstra stopping tolerance.
pub const DYKSTRA_TOL: f64 = 1e-10;
/// Default Dykstra iteration cap.
pub const DYKSTRA_MAX_ITER: usize = 100_000;

/// A member of an [`FeasibleSet::Intersection`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetMember {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { radius: f64, dim: usize },
}

impl SetMember {
    pub fn dim(&self) -> usize {
        match self {
            SetMember::Box { lower, .. } => lower.len(),
            SetMember::Ball { dim, .. } => *dim,
        }
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SetMember::Box { lower, upper } => projections::clamp(v, lower, upper),
            SetMember::Ball { radius, .. } => projections::project_ball(v, *radius),
        }
    }

    fn norm_bound(&self) -> f64 {
        match self {
            SetMember::Box { lower, upper } => box_norm_bound(lower, upper),
            SetMember::Ball { radius, .. } => *radius,
        }
    }

    fn diameter(&self) -> f64 {
        match self {
            SetMember::Box { lower, upper } => box_diameter(lower, upper),
            SetMember::Ball { radius, .. } => 2.0 * radius,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SetMember::Box { lower, upper } => validate_box(lower, upper),
            SetMember::Ball { radius, .. } => validate_radius(*radius),
        }
    }
}

/// Convex compact set for one primal block.
///
/// Every variant is bounded by construction. Use the constructors, which
/// validate the defining data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    CenteredBall { radius: f64, dim: usize },
    NonnegBall { radius: f64, dim: usize },
    Intersection { members: Vec<SetMember> },
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        validate_box(&lower, &upper)?;
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(vec![lower], vec![upper])
    }

    /// The box `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(vec![lower; dim], vec![upper; dim])
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        validate_radius(radius)?;
        Ok(FeasibleSet::CenteredBall { radius, dim })
    }

    pub fn nonneg_ball(radius: f64, dim: usize) -> Result<Self> {
        validate_radius(radius)?;
        Ok(FeasibleSet::NonnegBall { radius, dim })
    }

    /// Intersection of boxes and centered balls.
    ///
    /// Nonemptiness is checked by projecting the origin and testing membership.
    pub fn intersection(members: Vec<SetMember>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidSet("empty intersection member list".into()));
        };
        let dim = first.dim();
        for m in &members {
            m.validate()?;
            if m.dim() != dim {
                return Err(Error::InvalidSet(format!(
                    "intersection members disagree on dimension ({} vs {dim})",
                    m.dim()
                )));
            }
        }
        let set = FeasibleSet::Intersection { members };
        let origin = DVector::zeros(dim);
        let p = set
            .project(&origin)
            .map_err(|e| Error::InvalidSet(format!("intersection appears empty: {e}")))?;
        if set.violation(&p) > 10.0 * DYKSTRA_TOL.max(TAU_PROJ) {
            return Err(Error::InvalidSet("intersection is empty".into()));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::CenteredBall { dim, .. } | FeasibleSet::NonnegBall { dim, .. } => *dim,
            FeasibleSet::Intersection { members } => members[0].dim(),
        }
    }

    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            FeasibleSet::Box { lower, upper } => Ok(projections::clamp(v, lower, upper)),
            FeasibleSet::CenteredBall { radius, .. } => Ok(projections::project_ball(v, *radius)),
            FeasibleSet::NonnegBall { radius, .. } => Ok(projections::project_nonneg_ball(v, *radius)),
            FeasibleSet::Intersection { members } => {
                projections::project_intersection(v, members, DYKSTRA_TOL, DYKSTRA_MAX_ITER)
            }
        }
    }

    /// Largest violation of any defining inequality at `v` (0 when inside).
    pub fn violation(&self, v: &DVector<f64>) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => box_violation(v, lower, upper),
            FeasibleSet::CenteredBall { radius, .. } => (v.norm() - radius).max(0.0),
            FeasibleSet::NonnegBall { radius, .. } => {
                let neg = v.iter().fold(0.0_f64, |acc, &x| acc.max(-x));
                neg.max(v.norm() - radius)
            }
            FeasibleSet::Intersection { members } => members
                .iter()
                .map(|m| match m {
                    SetMember::Box { lower, upper } => box_violation(v, lower, upper),
                    SetMember::Ball { radius, .. } => (v.norm() - radius).max(0.0),
                })
                .fold(0.0, f64::max),
        }
    }

    /// Membership tolerance appropriate for this variant.
    pub fn tolerance(&self) -> f64 {
        match self {
            FeasibleSet::Intersection { .. } => TAU_PROJ.max(10.0 * DYKSTRA_TOL),
            _ => TAU_PROJ,
        }
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        v.len() == self.dim() && self.violation(v) <= self.tolerance()
    }

    /// `sup_{x in X} ||x||_2` in closed form.
    pub fn norm_bound(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => box_norm_bound(lower, upper),
            FeasibleSet::CenteredBall { radius, .. } | FeasibleSet::NonnegBall { radius, .. } => *radius,
            FeasibleSet::Intersection { members } => members
                .iter()
                .map(SetMember::norm_bound)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Upper bound on the diameter, in closed form.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => box_diameter(lower, upper),
            FeasibleSet::CenteredBall { radius, .. } => 2.0 * radius,
            FeasibleSet::NonnegBall { radius, dim } => {
                if *dim <= 1 {
                    *radius
                } else {
                    radius * std::f64::consts::SQRT_2
                }
            }
            FeasibleSet::Intersection { members } => members
                .iter()
                .map(SetMember::diameter)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Axis-aligned box containing the set, as `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            FeasibleSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            FeasibleSet::CenteredBall { radius, dim } => (vec![-radius; *dim], vec![*radius; *dim]),
            FeasibleSet::NonnegBall { radius, dim } => (vec![0.0; *dim], vec![*radius; *dim]),
            FeasibleSet::Intersection { members } => {
                let dim = members[0].dim();
                let mut lo = vec![f64::NEG_INFINITY; dim];
                let mut hi = vec![f64::INFINITY; dim];
                for m in members {
                    let (ml, mh) = match m {
                        SetMember::Box { lower, upper } => (lower.clone(), upper.clone()),
                        SetMember::Ball { radius, dim } => (vec![-radius; *dim], vec![*radius; *dim]),
                    };
                    for i in 0..dim {
                        lo[i] = lo[i].max(ml[i]);
                        hi[i] = hi[i].min(mh[i]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

fn validate_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::InvalidSet(format!(
            "box bounds have different lengths ({} vs {})",
            lower.len(),
            upper.len()
        )));
    }
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if !l.is_finite() || !u.is_finite() {
            return Err(Error::InvalidSet(format!("box bound {i} is not finite")));
        }
        if l > u {
            return Err(Error::InvalidSet(format!(
                "box lower bound exceeds upper bound at coordinate {i} ({l} > {u})"
            )));
        }
    }
    Ok(())
}

fn validate_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSet(format!(
            "radius must be positive and finite, got {radius}"
        )))
    }
}

fn box_violation(v: &DVector<f64>, lower: &[f64], upper: &[f64]) -> f64 {
    v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&x, (&l, &u))| (l - x).max(x - u).max(0.0))
        .fold(0.0, f64::max)
}

fn box_norm_bound(lower: &[f64], upper: &[f64]) -> f64 {
    lower
        .iter()
        .zip(upper)
        .map(|(l, u)| {
            let c = l.abs().max(u.abs());
            c * c
        })
        .sum::<f64>()
        .sqrt()
}

fn box_diameter(lower: &[f64], upper: &[f64]) -> f64 {
    lower
        .iter()
        .zip(upper)
        .map(|(l, u)| (u - l) * (u - l))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_bounds() {
        let s = FeasibleSet::cube(2, -2.0, 2.0).unwrap();
        assert_relative_eq!(s.norm_bound(), 2.0 * 2f64.sqrt());
        assert_relative_eq!(s.diameter(), 4.0 * 2f64.sqrt());
    }

    #[test]
    fn ball_bounds() {
        let s = FeasibleSet::ball(3.0, 4).unwrap();
        assert_eq!(s.norm_bound(), 3.0);
        assert_eq!(s.diameter(), 6.0);
    }

    #[test]
    fn intersection_bounds_take_the_smaller_member() {
        let s = FeasibleSet::intersection(vec![
            SetMember::Box {
                lower: vec![0.0, 0.0],
                upper: vec![1.0, 1.0],
            },
            SetMember::Ball { radius: 5.0, dim: 2 },
        ])
        .unwrap();
        assert_relative_eq!(s.norm_bound(), 2f64.sqrt());
        assert_relative_eq!(s.diameter(), 2f64.sqrt());
    }

    #[test]
    fn inverted_box_is_rejected() {
        assert!(matches!(
            FeasibleSet::boxed(vec![0.0, 2.0], vec![1.0, 1.0]),
            Err(Error::InvalidSet(_))
        ));
    }

    #[test]
    fn bad_radius_is_rejected() {
        assert!(FeasibleSet::ball(0.0, 2).is_err());
        assert!(FeasibleSet::nonneg_ball(f64::INFINITY, 2).is_err());
    }

    #[test]
    fn empty_intersection_is_rejected() {
        let r = FeasibleSet::intersection(vec![
            SetMember::Box {
                lower: vec![2.0, 2.0],
                upper: vec![3.0, 3.0],
            },
            SetMember::Ball { radius: 1.0, dim: 2 },
        ]);
        assert!(matches!(r, Err(Error::InvalidSet(_))));
    }

    #[test]
    fn serde_uses_kind_tags() {
        let s = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let text = toml::to_string(&s).unwrap();
        assert!(text.contains("kind = \"box\""));
        let back: FeasibleSet = toml::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
