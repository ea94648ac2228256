//! Converts pulley load-cell readings into tendon tensions.

use tacter::config::tension_from_sensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma = 52f64.to_radians();
    for force in [0.25, 0.5, 1.0, 2.0] {
        println!("F_B = {force:.2} N, γ = 52° → T = {:.6} N", tension_from_sensor(force, gamma)?);
    }
    match tension_from_sensor(1.0, 0.0) {
        Ok(t) => println!("unexpected tension {t}"),
        Err(e) => println!("γ = 0: {e}"),
    }
    Ok(())
}
