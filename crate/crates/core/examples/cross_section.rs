//! Section properties of both robots from the bundled parameters.

use tacter::config::RobotParams;
use tacter::geometry::{outer_moment_arm, outer_neutral_axis, outer_second_moment, outer_segment_areas};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RobotParams::prototype();
    let seg = outer_segment_areas(&params.outer)?;
    let d_na = outer_neutral_axis(&params.outer)?;
    let moments = outer_second_moment(&params.outer)?;
    println!("outer robot (notched tube)");
    println!("  chord angles      φ_o = {:.6} rad, φ_i = {:.6} rad", seg.outer_angle, seg.inner_angle);
    println!("  area              A1 = {:.6} mm²", seg.area);
    println!("  neutral axis      d_na = {d_na:.6} mm");
    println!("  second moment     I_center = {:.6} mm⁴, I1 = {:.6} mm⁴", moments.about_center, moments.about_centroid);
    println!("  tendon arm        {:.6} mm (formula)", outer_moment_arm(&params.outer, d_na));

    for (name, sec) in [("outer", params.outer_section()?), ("inner", params.inner_section()?)] {
        println!("{name} stiffness");
        println!("  K_se = diag({:.4}, {:.4}, {:.4}) N", sec.k_se[(0, 0)], sec.k_se[(1, 1)], sec.k_se[(2, 2)]);
        println!("  K_bt = diag({:.4}, {:.4}, {:.4}) N·mm²", sec.k_bt[(0, 0)], sec.k_bt[(1, 1)], sec.k_bt[(2, 2)]);
    }
    Ok(())
}
