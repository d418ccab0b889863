//! Describe an experiment in TOML, run it with full analysis and write the CSV
//! outputs and plotting script.

use tvopt::experiment::{run_experiment, AnalysisOptions};
use tvopt::report::write_run_outputs;
use tvopt::scenarios::ExperimentConfig;

const CONFIG: &str = r#"
[scenario]
seed = 3
noise = { std_dev = 0.02, cap = 0.05 }

[scenario.model]
name = "quadratic"
amplitude = 0.4
omega = 0.03
offset = 0.1
cap = 0.35

[algorithm]
alpha = 0.1
p = 0.02
d = 0.02
case = "case2"
dual_radius_override = 5.0
horizon = 400
"#;

fn main() -> tvopt::Result<()> {
    let config = ExperimentConfig::from_toml(CONFIG)?;
    let report = run_experiment(&config, &AnalysisOptions::default())?;
    let dir = std::env::temp_dir().join("tvopt-config-example");
    for path in write_run_outputs(&dir, &report)? {
        println!("wrote {}", path.display());
    }
    if let Some(b) = &report.bounds {
        println!(
            "c(alpha) = {:.6}, final regret bound {:.4e}",
            b.contraction.value,
            b.regret.last().copied().unwrap_or(f64::NAN)
        );
    }
    println!("\nround-tripped configuration:\n{}", config.to_toml()?);
    Ok(())
}
