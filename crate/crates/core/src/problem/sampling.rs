use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FeasibleSet, SetMember};

fn uniform_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    let dir: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
    let n = dir.norm().max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir * (r / n)
}

fn uniform_box<R: Rng + ?Sized>(rng: &mut R, lower: &[f64], upper: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        lower.len(),
        lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| l + (u - l) * rng.random::<f64>()),
    )
}

/// Uniform draw from a feasible set.
///
/// Intersections use rejection from the bounding box and fall back to
/// projecting the last proposal when the acceptance rate is tiny.
pub fn sample_set<R: Rng + ?Sized>(set: &FeasibleSet, rng: &mut R) -> DVector<f64> {
    match set {
        FeasibleSet::Box { lower, upper } => uniform_box(rng, lower, upper),
        FeasibleSet::CenteredBall { radius, dim } => uniform_ball(rng, *dim, *radius),
        FeasibleSet::NonnegBall { radius, dim } => uniform_ball(rng, *dim, *radius).abs(),
        FeasibleSet::Intersection { members } => {
            let (lower, upper) = set.bounding_box();
            let mut proposal = uniform_box(rng, &lower, &upper);
            for _ in 0..1000 {
                if members.iter().all(|m| member_contains(m, &proposal)) {
                    return proposal;
                }
                proposal = uniform_box(rng, &lower, &upper);
            }
            set.project(&proposal).unwrap_or(proposal)
        }
    }
}

fn member_contains(m: &SetMember, v: &DVector<f64>) -> bool {
    match m {
        SetMember::Box { lower, upper } => v
            .iter()
            .zip(lower.iter().zip(upper))
            .all(|(&x, (&l, &u))| x >= l && x <= u),
        SetMember::Ball { radius, .. } => v.norm() <= *radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{domain, stream_rng};

    #[test]
    fn samples_are_members() {
        let sets = [
            FeasibleSet::cube(3, -1.0, 2.0).unwrap(),
            FeasibleSet::ball(0.5, 4).unwrap(),
            FeasibleSet::nonneg_ball(2.0, 3).unwrap(),
            FeasibleSet::intersection(vec![
                SetMember::Ball { radius: 1.0, dim: 2 },
                SetMember::Box {
                    lower: vec![0.0, -1.0],
                    upper: vec![0.8, 1.0],
                },
            ])
            .unwrap(),
        ];
        let mut rng = stream_rng(1, domain::SAMPLING, 0);
        for s in &sets {
            for _ in 0..500 {
                assert!(s.contains(&sample_set(s, &mut rng)));
            }
        }
    }
}
