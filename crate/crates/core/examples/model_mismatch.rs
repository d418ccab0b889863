//! Feedback versus feed-forward under an output-map mismatch: the model is
//! wrong, the measurements are not, and only feedback sees the difference.

use nalgebra::DMatrix;
use tvopt::engine::run_online;
use tvopt::problem::{AlgorithmConfig, Mismatch, Mode};
use tvopt::scenarios::{scenario_static, StaticParams};

fn main() -> tvopt::Result<()> {
    let (problem, plant) = scenario_static(&StaticParams::default())?;
    let truth = plant.clone().with_mismatch(Mismatch::new(
        DMatrix::from_element(1, 1, 0.2),
        DMatrix::zeros(1, 1),
    ))?;
    let config = AlgorithmConfig::case2(0.2, 0.01, 0.01, 500)?.with_dual_radius(10.0)?;
    for mode in [Mode::Feedback, Mode::FeedForward] {
        let t = run_online(&problem, &truth, &config.clone().with_mode(mode), None, None)?;
        let last = t.last().expect("nonempty");
        let true_output = truth.measure(&last.x, last.k)?.y_hat[0];
        println!(
            "{mode:?}: x = {:.4}, true output {:.4} (constraint asks for >= 1), realized e_y {:.3}",
            last.x[0], true_output, t.realized_e_y
        );
    }
    Ok(())
}
