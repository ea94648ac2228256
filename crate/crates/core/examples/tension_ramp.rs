//! Warm-started tension ramp of one configuration.
//!
//! `cargo run --example tension_ramp [LABEL]`, e.g. `OB-IF-L` (the default) or `IO`.

use tacter::config::{configuration_to_input, ramp, ConfigurationLabel, RobotParams};
use tacter::shooting::{sweep, SolverConfig, SweepMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let label: ConfigurationLabel = std::env::args().nth(1).as_deref().unwrap_or("OB-IF-L").parse()?;
    let params = RobotParams::prototype();
    let tensions = ramp(params.inner_max_tension, params.steps);
    let models = tensions
        .iter()
        .map(|&t| params.model(&configuration_to_input(label, &params, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let results = sweep(&models, &SolverConfig::default(), SweepMode::WarmStart);
    println!("{label}: translation {} mm", label.translation());
    for (t, r) in tensions.iter().zip(&results) {
        match r.tip_position() {
            Some(p) if r.converged => println!(
                "  λ = {t:.4} N  tip ({:8.4}, {:8.4}, {:8.4}) mm  {} iterations",
                p.x, p.y, p.z, r.iterations
            ),
            _ => println!("  λ = {t:.4} N  failed: {}", r.failure.as_deref().unwrap_or("unknown")),
        }
    }
    Ok(())
}
