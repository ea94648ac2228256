//! Text output of solutions. Every number is written with nine significant
//! digits so that identical runs give identical files, and every file carries
//! the configuration that produced it.

use crate::config::{ActuationInput, RobotParams};
use crate::shooting::{BackboneSolution, RodState, Segment, ShootingResult, SolverConfig};
use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};
use std::fmt::Write as _;

/// Nine significant digits in exponent form; negative zero prints as zero.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000e0".into();
    }
    format!("{x:.8e}")
}

/// A JSON number holding `x` rounded to nine significant digits.
pub fn num9(x: f64) -> Value {
    sig9(x)
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated values with a commented header.
    Delimited,
    /// JSON.
    Structured,
}

/// Full description of the inputs of a solve, as TOML.
pub fn provenance(params: &RobotParams, input: &ActuationInput, solver: &SolverConfig) -> String {
    let r = input.base_rotation;
    let p = input.base_position;
    let mut out = String::new();
    out.push_str(&params.to_document());
    let _ = writeln!(out, "\n[actuation]");
    let _ = writeln!(out, "outer_present = {}", input.outer_present);
    let _ = writeln!(out, "outer_tension = \"{} N\"", input.outer_tension);
    let _ = writeln!(out, "inner_left_tension = \"{} N\"", input.inner_left_tension);
    let _ = writeln!(out, "inner_right_tension = \"{} N\"", input.inner_right_tension);
    let _ = writeln!(out, "translation = \"{} mm\"", input.translation);
    let _ = writeln!(out, "theta0 = \"{} rad\"", input.theta0);
    let _ = writeln!(
        out,
        "base_rotation = [{}, {}, {}, {}, {}, {}, {}, {}, {}]",
        r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]
    );
    let _ = writeln!(out, "base_position = [{}, {}, {}]", p.x, p.y, p.z);
    out.push_str(&solver_provenance(solver));
    out
}

pub fn solver_provenance(solver: &SolverConfig) -> String {
    format!(
        "\n[solver]\noverlap_steps = {}\ndistal_steps = {}\ntolerance = {:e}\nmax_iterations = {}\nmax_halvings = {}\nfd_step = {:e}\n",
        solver.overlap_steps, solver.distal_steps, solver.tolerance, solver.max_iterations, solver.max_halvings, solver.fd_step
    )
}

/// Prefixes every line with `# `.
pub fn commented(text: &str) -> String {
    text.lines()
        .map(|l| if l.is_empty() { "#\n".to_string() } else { format!("# {l}\n") })
        .collect()
}

fn vec_fields(v: &Vector3<f64>) -> String {
    format!("{},{},{}", sig9(v.x), sig9(v.y), sig9(v.z))
}

fn frame_fields(r: Option<&Matrix3<f64>>) -> String {
    match r {
        Some(r) => (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| sig9(r[(i, j)]))
            .collect::<Vec<_>>()
            .join(","),
        None => [""; 9].join(","),
    }
}

fn frame_json(r: &Matrix3<f64>) -> Value {
    Value::Array(
        (0..3)
            .map(|i| Value::Array((0..3).map(|j| num9(r[(i, j)])).collect()))
            .collect(),
    )
}

fn vec_json(v: &Vector3<f64>) -> Value {
    json!([num9(v.x), num9(v.y), num9(v.z)])
}

fn segment_name(s: Segment) -> &'static str {
    match s {
        Segment::Overlap => "overlap",
        Segment::Distal => "distal",
    }
}

const FRAME_COLUMNS: [&str; 9] = ["11", "12", "13", "21", "22", "23", "31", "32", "33"];

/// Backbone as CSV: commented provenance and status header, then one row
/// per arc-length node.
pub fn backbone_delimited(result: &ShootingResult, provenance: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tacter backbone v1");
    let _ = writeln!(out, "# converged = {}", result.converged);
    let _ = writeln!(out, "# residual_norm = {}", sig9(result.residual_norm));
    let _ = writeln!(out, "# iterations = {}", result.iterations);
    if let Some(why) = &result.failure {
        let _ = writeln!(out, "# failure = {why}");
    }
    if let Some(b) = &result.backbone {
        let tip = b.tip();
        let _ = writeln!(out, "# tip_position_mm = {}", vec_fields(&tip.position).replace(',', " "));
        let _ = writeln!(out, "# tip_rotation = {}", frame_fields(Some(&tip.inner_frame)).replace(',', " "));
    }
    out.push_str(&commented(provenance));
    let inner: Vec<String> = FRAME_COLUMNS.iter().map(|c| format!("inner_r{c}")).collect();
    let outer: Vec<String> = FRAME_COLUMNS.iter().map(|c| format!("outer_r{c}")).collect();
    let _ = writeln!(
        out,
        "s_mm,segment,x_mm,y_mm,z_mm,theta_rad,beta,{},{}",
        inner.join(","),
        outer.join(",")
    );
    if let Some(b) = &result.backbone {
        for st in &b.samples {
            let _ = writeln!(out, "{}", backbone_row(st));
        }
    }
    out
}

fn backbone_row(st: &RodState) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        sig9(st.s),
        segment_name(st.segment),
        vec_fields(&st.position),
        sig9(st.theta),
        sig9(st.beta),
        frame_fields(Some(&st.inner_frame)),
        frame_fields(st.outer_frame.as_ref()),
    )
}

/// Backbone as JSON.
pub fn backbone_structured(result: &ShootingResult, provenance: &str) -> String {
    let samples: Vec<Value> = result
        .backbone
        .as_ref()
        .map(|b: &BackboneSolution| {
            b.samples
                .iter()
                .map(|st| {
                    json!({
                        "s_mm": num9(st.s),
                        "segment": segment_name(st.segment),
                        "position_mm": vec_json(&st.position),
                        "theta_rad": num9(st.theta),
                        "beta": num9(st.beta),
                        "inner_frame": frame_json(&st.inner_frame),
                        "outer_frame": st.outer_frame.as_ref().map_or(Value::Null, frame_json),
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    let tip = result.backbone.as_ref().map_or(Value::Null, |b| {
        json!({
            "position_mm": vec_json(&b.tip_position()),
            "rotation": frame_json(&b.tip_rotation()),
        })
    });
    let doc = json!({
        "format": "tacter-backbone/1",
        "converged": result.converged,
        "residual_norm": num9(result.residual_norm),
        "iterations": result.iterations,
        "failure": result.failure,
        "tip": tip,
        "provenance": provenance,
        "samples": samples,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("backbone serializes");
    s.push('\n');
    s
}

pub fn backbone(result: &ShootingResult, provenance: &str, format: Format) -> String {
    match format {
        Format::Delimited => backbone_delimited(result, provenance),
        Format::Structured => backbone_structured(result, provenance),
    }
}
