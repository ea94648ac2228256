//! Solves one pose and prints the backbone at a few arc lengths.
//!
//! `cargo run --example single_solve [params.toml]`

use tacter::config::{load_params_file, ActuationInput, RobotParams};
use tacter::shooting::{solve_from_unloaded, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = match std::env::args().nth(1) {
        Some(path) => load_params_file(path.as_ref())?,
        None => RobotParams::prototype(),
    };
    let input = ActuationInput {
        outer_tension: 20.0,
        inner_left_tension: 0.6,
        translation: 20.0,
        ..ActuationInput::default()
    };
    let model = params.model(&input)?;
    let result = solve_from_unloaded(&model, &SolverConfig::default());
    println!(
        "converged {} after {} iterations, residual {:.2e}",
        result.converged, result.iterations, result.residual_norm
    );
    let backbone = result.backbone.as_ref().ok_or("no backbone")?;
    for st in backbone.samples.iter().step_by(50).chain(std::iter::once(backbone.tip())) {
        println!(
            "s = {:7.3} mm  p = ({:8.4}, {:8.4}, {:8.4}) mm  θ = {:+.2e} rad  β = {:.8}",
            st.s, st.position.x, st.position.y, st.position.z, st.theta, st.beta
        );
    }
    Ok(())
}
