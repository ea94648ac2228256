//! Tip positions over a grid of outer tension, inner tension and
//! translation, written as CSV to stdout.

use tacter::config::{ActuationInput, RobotParams};
use tacter::shooting::{sweep, SolverConfig, SweepMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RobotParams::prototype();
    let mut models = Vec::new();
    let mut cells = Vec::new();
    for k in 0..4 {
        let translation = params.translation_range * k as f64 / 3.0;
        for outer in [0.0, 20.0, 40.0] {
            for inner in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let input = ActuationInput {
                    outer_tension: outer,
                    inner_left_tension: f64::max(inner, 0.0),
                    inner_right_tension: f64::max(-inner, 0.0),
                    translation,
                    ..ActuationInput::default()
                };
                models.push(params.model(&input)?);
                cells.push((translation, outer, inner));
            }
        }
    }
    let results = sweep(&models, &SolverConfig::default(), SweepMode::ParallelColdStart);
    println!("translation_mm,outer_tension_n,inner_tension_n,x_mm,y_mm,z_mm");
    for ((t, o, i), r) in cells.iter().zip(&results) {
        if let Some(p) = r.tip_position().filter(|_| r.converged) {
            println!("{t:.3},{o},{i},{:.6},{:.6},{:.6}", p.x, p.y, p.z);
        }
    }
    Ok(())
}
