//! The projection operators on their own.

use nalgebra::DVector;
use tvopt::problem::{FeasibleSet, SetMember};
use tvopt::projections::{project_box, project_nonneg_ball, project_product, DualSet};

fn main() -> tvopt::Result<()> {
    let v = |x: &[f64]| DVector::from_column_slice(x);
    let show = |x: DVector<f64>| format!("{:?}", x.as_slice());

    println!(
        "box:        {}",
        show(project_box(&v(&[2.0, -3.0]), &[0.0, 0.0], &[1.0, 1.0])?)
    );
    println!("dual set:   {}", show(project_nonneg_ball(&v(&[-1.0, 5.0]), 4.0)));

    let disc_cap = FeasibleSet::intersection(vec![
        SetMember::Ball { radius: 1.0, dim: 2 },
        SetMember::Box {
            lower: vec![0.5, 0.5],
            upper: vec![2.0, 2.0],
        },
    ])?;
    for p in [[2.0, 2.0], [0.0, 0.0], [1.2, 0.5]] {
        println!("ball & box: {:?} -> {}", p, show(disc_cap.project(&v(&p))?));
    }

    let blocks = [FeasibleSet::interval(-1.0, 1.0)?, FeasibleSet::ball(1.0, 2)?];
    println!(
        "product:    {}",
        show(project_product(&v(&[2.0, 0.0, 3.0]), &blocks)?)
    );

    let dual = DualSet::for_step(0.125, 1.0 / 3.0)?;
    println!("dual radius for alpha = 1/8, kappa = 1/3: {}", dual.radius());
    Ok(())
}
