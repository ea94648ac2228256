//! The ten acceptance criteria, one line of output each.

mod common;

use common::{deflection_angle, equilibrium_defect, measured, pose_at, section_quadrature, PlanarRod};
use nalgebra::{Matrix3, SVector, Vector3};
use std::path::Path;
use std::process::Command;
use std::time::Instant;
use tacter::config::{configuration_to_input, tension_from_sensor, ConfigurationLabel, ProtocolSchedule, RobotParams};
use tacter::geometry::{outer_neutral_axis, outer_second_moment, outer_segment_areas};
use tacter::rod::{exp_so3, integrate_step, orthonormality_error, skew, FramedState, E3};
use tacter::shooting::{solve, solve_from_unloaded, sweep, RobotModel, SolverConfig, SweepMode};
use tacter::validation::{
    compute_errors, format_measurements, model_tips_as_measurements, parse_measurements, PoseResult,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geometry_oracle() -> Outcome {
    let start = Instant::now();
    let spec = RobotParams::prototype().outer;
    let q = section_quadrature(&spec);
    let area = outer_segment_areas(&spec).map_err(|e| e.to_string())?.area;
    let d_na = outer_neutral_axis(&spec).map_err(|e| e.to_string())?;
    let i1 = outer_second_moment(&spec).map_err(|e| e.to_string())?.about_centroid;
    let rel = [
        ((area - q.area) / q.area).abs(),
        ((d_na - q.centroid) / q.centroid).abs(),
        ((i1 - q.second_moment_centroid) / q.second_moment_centroid).abs(),
    ];
    let worst = rel.iter().cloned().fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-4 && secs < 10.0,
        format!(
            "A1 {area:.6} mm², d_na {d_na:.6} mm, I1 {i1:.6} mm⁴; max relative error {worst:.1e} (tol 1e-4), {secs:.2} s (limit 10 s)"
        ),
    )
}

fn trivial_equilibrium() -> Outcome {
    let params = RobotParams::prototype();
    let (mut worst, mut most_iterations) = (0.0f64, 0);
    for label in ConfigurationLabel::all() {
        let mut input = configuration_to_input(label, &params, 0.0);
        input.outer_tension = 0.0;
        let model = params.model(&input).map_err(|e| e.to_string())?;
        let r = solve(&model, &SolverConfig::default(), None);
        let tip = r.tip_position().ok_or(format!("{label}: no backbone"))?;
        if !r.converged {
            return Err(format!("{label}: did not converge"));
        }
        worst = worst.max((tip - Vector3::new(0.0, 0.0, model.l2)).norm());
        most_iterations = most_iterations.max(r.iterations);
    }
    check(
        worst < 1e-9 && most_iterations <= 2,
        format!("13 configurations, max tip error {worst:.1e} mm (tol 1e-9), max iterations {most_iterations} (limit 2)"),
    )
}

/// Sweeps every configuration one after another on the calling thread.
fn serial_protocol(params: &RobotParams) -> Result<Vec<PoseResult>, String> {
    let mut out = Vec::new();
    for s in ProtocolSchedule::standard(params).sweeps {
        let inputs: Vec<_> = s.tensions.iter().map(|&t| configuration_to_input(s.label, params, t)).collect();
        let models = inputs
            .iter()
            .map(|i| params.model(i))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        for (k, result) in sweep(&models, &SolverConfig::default(), SweepMode::WarmStart).into_iter().enumerate() {
            out.push(PoseResult {
                configuration: s.label,
                step_index: k,
                tension: s.tensions[k],
                input: inputs[k],
                result,
            });
        }
    }
    Ok(out)
}

fn residual_resubstitution(params: &RobotParams) -> Outcome {
    let start = Instant::now();
    let poses = serial_protocol(params)?;
    let secs = start.elapsed().as_secs_f64();
    let converged = poses.iter().filter(|p| p.result.converged).count();
    let mut worst = 0.0f64;
    for p in poses.iter().filter(|p| p.result.converged) {
        let model = params.model(&p.input).map_err(|e| e.to_string())?;
        let (a, b) = equilibrium_defect(&model, p.result.backbone.as_ref().unwrap());
        worst = worst.max(a).max(b);
    }
    check(
        converged == 195 && worst < 1e-8 && secs < 60.0,
        format!(
            "{converged}/195 solves converged, max pointwise residual {worst:.1e} (tol 1e-8), protocol {secs:.2} s on one thread (limit 60 s)"
        ),
    )
}

fn mirror_symmetry(params: &RobotParams) -> Outcome {
    let mut worst = 0.0f64;
    for t in ["IN", "IH", "IF"] {
        let tips = |side: &str| -> Result<Vec<Vector3<f64>>, String> {
            let label: ConfigurationLabel = format!("OS-{t}-{side}").parse().map_err(|e| format!("{e}"))?;
            let models: Vec<RobotModel> = tacter::config::ramp(params.inner_max_tension, params.steps)
                .iter()
                .map(|&l| params.model(&configuration_to_input(label, params, l)).unwrap())
                .collect();
            sweep(&models, &SolverConfig::default(), SweepMode::WarmStart)
                .iter()
                .map(|r| r.tip_position().filter(|_| r.converged).ok_or(format!("{label} failed")))
                .collect()
        };
        for (l, r) in tips("L")?.iter().zip(tips("R")?) {
            worst = worst.max((l - Vector3::new(r.x, -r.y, r.z)).norm());
        }
    }
    check(worst < 1e-9, format!("OS L vs R over 3 translations × 15 tensions, max gap {worst:.1e} mm (tol 1e-9)"))
}

fn single_tube_oracle(params: &RobotParams) -> Outcome {
    let sec = params.inner_section().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for name in ["OS-IN-L", "OS-IH-L", "OS-IF-L"] {
        let label: ConfigurationLabel = name.parse().unwrap();
        let mut model = params
            .model(&configuration_to_input(label, params, params.inner_max_tension))
            .map_err(|e| e.to_string())?;
        let pair = model.overlap.as_mut().unwrap();
        pair.outer.section = pair.outer.section.stiffened(1e6);
        let r = solve_from_unloaded(&model, &SolverConfig::default());
        let tip = r.tip_position().filter(|_| r.converged).ok_or(format!("{name} failed"))?;
        let rod = PlanarRod {
            length: model.l2 - model.l1,
            base_z: model.l1,
            ei: sec.k_bt[(0, 0)],
            ga: sec.k_se[(0, 0)],
            ea: sec.k_se[(2, 2)],
            arm: params.inner.tendon_arm,
            tension: params.inner_max_tension,
        };
        let (y, z) = rod.relax(1000);
        worst = worst.max((tip - Vector3::new(0.0, y, z)).norm());
    }
    check(
        worst < 1e-3,
        format!("stiffened outer, 3 translations at 1 N, max tip discrepancy {worst:.1e} mm (tol 1e-3)"),
    )
}

/// Helix of constant body curvature `u`: exact frame `exp(s[u])` and exact
/// position `(s I + (1 - cos φ)/|u|² [u] + (s - sin φ/|u|)/|u|² [u]²) e3`.
fn helix_error(u: Vector3<f64>, length: f64, steps: usize) -> (f64, f64) {
    let mut state = FramedState::<3> {
        frame: Matrix3::identity(),
        vector: SVector::<f64, 3>::zeros(),
    };
    let ds = length / steps as f64;
    let mut rhs = |_: f64, r: &Matrix3<f64>, _: &SVector<f64, 3>| Ok((u, r * E3));
    let mut drift = 0.0f64;
    for k in 0..steps {
        state = integrate_step(k as f64 * ds, &state, ds, &mut rhs).unwrap();
        drift = drift.max(orthonormality_error(&state.frame));
    }
    let k = u.norm();
    let phi = k * length;
    let w = skew(&u);
    let exact = (Matrix3::identity() * length
        + w * ((1.0 - phi.cos()) / (k * k))
        + w * w * ((length - phi.sin() / k) / (k * k)))
        * E3;
    let frame_gap = (state.frame - exp_so3(&(u * length))).amax();
    ((state.vector - exact).norm() + frame_gap, drift)
}

fn integrator_order(params: &RobotParams) -> Outcome {
    let u = Vector3::new(0.08, -0.03, 0.05);
    let length = params.inner_length();
    let errors: Vec<f64> = [4usize, 8, 16, 32].iter().map(|&n| helix_error(u, length, n).0).collect();
    let order = errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let (_, drift) = helix_error(u, length, 20_000);
    let drift = drift.max(backbone_drift(params)?);
    check(
        order >= 3.8 && drift < 1e-9,
        format!("helix order {order:.2} (min 3.8), orthonormality drift {drift:.1e} over full length (tol 1e-9)"),
    )
}

/// Largest frame orthonormality error along fully loaded backbones.
fn backbone_drift(params: &RobotParams) -> Result<f64, String> {
    ["OB-IF-L", "OB-IF-R", "IO"]
        .iter()
        .map(|name| {
            let label: ConfigurationLabel = name.parse().unwrap();
            let model = params.model(&configuration_to_input(label, params, params.inner_max_tension)).unwrap();
            let r = solve_from_unloaded(&model, &SolverConfig::default());
            r.backbone
                .filter(|_| r.converged)
                .map(|b| b.max_orthonormality_error())
                .ok_or(format!("{name} failed"))
        })
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
}

fn monotone_continuation(params: &RobotParams) -> Outcome {
    let mut missed = 0;
    let mut worst_drop = 0.0f64;
    for label in ConfigurationLabel::all() {
        let mut tensions = vec![0.0];
        tensions.extend(tacter::config::ramp(params.inner_max_tension, params.steps));
        let models: Vec<RobotModel> = tensions
            .iter()
            .map(|&t| params.model(&configuration_to_input(label, params, t)).unwrap())
            .collect();
        let results = sweep(&models, &SolverConfig::default(), SweepMode::WarmStart);
        missed += results.iter().filter(|r| !r.converged || r.continuation_steps > 0).count();
        let angles: Vec<f64> = results
            .iter()
            .filter_map(|r| r.backbone.as_ref())
            .map(|b| deflection_angle(params, label, b))
            .collect();
        for w in angles.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    check(
        missed == 0 && worst_drop <= 0.0,
        format!("13 ramps of 15 steps, {missed} missed warm-started steps, largest angle decrease {worst_drop:.1e} rad (must be ≤ 0)"),
    )
}

fn sensor_conversion() -> Outcome {
    let gamma = 52f64.to_radians();
    let t = tension_from_sensor(1.0, gamma).map_err(|e| e.to_string())?;
    let reference = 1.0 / (2.0 * 104f64.to_radians().sin());
    let rel = ((t - reference) / reference).abs();
    let mut linear = true;
    for f in [0.5, 2.0, 4.0, 0.25, 1024.0] {
        linear &= tension_from_sensor(f, gamma).unwrap() == f * t;
    }
    let mut worst_sum = 0.0f64;
    for (a, b) in [(0.3, 1.7), (2.5, 7.25), (10.0, 0.125)] {
        let sum = tension_from_sensor(a + b, gamma).unwrap();
        let parts = tension_from_sensor(a, gamma).unwrap() + tension_from_sensor(b, gamma).unwrap();
        worst_sum = worst_sum.max(((sum - parts) / sum).abs());
    }
    check(
        rel < 1e-12 && linear && worst_sum < 4.0 * f64::EPSILON,
        format!(
            "T(1 N, 52°) = {t:.15} N, relative error {rel:.1e} (tol 1e-12); power-of-two scaling exact: {linear}; additivity within {worst_sum:.1e}"
        ),
    )
}

fn error_metric(params: &RobotParams) -> Outcome {
    let model = vec![
        pose_at("OS-IN-L", 0, [0.0, 0.0, 35.0], true),
        pose_at("OS-IN-R", 0, [1.0, 1.0, 30.0], true),
        pose_at("IO", 0, [0.0, 10.0, 60.0], true),
        pose_at("IO", 1, [0.0, 20.0, 50.0], true),
    ];
    let data = vec![
        measured("OS-IN-L", 0, [3.0, 4.0, 35.0]),
        measured("OS-IN-R", 0, [1.0, 1.0, 31.0]),
        measured("IO", 0, [1.0, 12.0, 62.0]),
        measured("IO", 1, [2.0, 23.0, 56.0]),
    ];
    let report = compute_errors(&data, &model).map_err(|e| e.to_string())?;
    let os = report.cell("OS-IN").ok_or("missing OS-IN")?;
    let io = report.cell("IO").ok_or("missing IO")?;
    let fixture = (os.average_mm, os.max_mm, io.average_mm, io.max_mm) == (3.0, 5.0, 5.0, 7.0);

    let poses = serial_protocol(params)?;
    let text = format_measurements(&model_tips_as_measurements(&poses));
    let fed_back = compute_errors(&parse_measurements(&text).map_err(|e| e.to_string())?, &poses)
        .map_err(|e| e.to_string())?;
    let worst = fed_back.poses.iter().fold(0.0f64, |m, p| m.max(p.error_mm));
    check(
        fixture && worst == 0.0 && fed_back.poses.len() == 195,
        format!(
            "fixture OS-IN {}/{} IO {}/{} mm (expected 3/5 and 5/7); self-feedback over {} poses max error {worst:e} mm",
            os.average_mm,
            os.max_mm,
            io.average_mm,
            io.max_mm,
            fed_back.poses.len()
        ),
    )
}

fn snapshot(dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            snapshot(&p, out);
        } else {
            out.push((p.display().to_string(), std::fs::read(&p).unwrap()));
        }
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let write = |name: &str, text: &str| std::fs::write(root.join(name), text).unwrap();
    write("schedule.toml", "schema = \"tacter-schedule/1\"\nlabels = [\"OS-IH-R\", \"OB-IF-L\", \"IO\"]\nsteps = 5\n");
    write(
        "grid.toml",
        "schema = \"tacter-grid/1\"\nouter_tension_n = { min = 0, max = 20, count = 3 }\ninner_tension_n = { min = -1, max = 1, count = 3 }\ntranslation_mm = { min = 0, max = 30, count = 2 }\nparallel = true\n",
    );
    write(
        "protocol.toml",
        "schema = \"tacter-manifest/1\"\ncommand = \"protocol\"\nschedule = \"schedule.toml\"\noutput_dir = \"out/protocol\"\nformat = \"structured\"\n",
    );
    write(
        "solve.toml",
        "schema = \"tacter-manifest/1\"\ncommand = \"solve\"\noutput = \"out/solve.csv\"\n[actuation]\nouter_tension_n = 12.5\nleft_tension_n = 0.4\ntranslation_mm = 18\ntheta0_deg = 10\n",
    );
    write(
        "workspace.toml",
        "schema = \"tacter-manifest/1\"\ncommand = \"workspace\"\ngrid = \"grid.toml\"\noutput = \"out/workspace.csv\"\n",
    );
    let run_all = || -> Result<Vec<(String, Vec<u8>)>, String> {
        for m in ["protocol.toml", "solve.toml", "workspace.toml"] {
            let status = Command::new(env!("CARGO_BIN_EXE_tacter"))
                .args(["run", m])
                .current_dir(root)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if !status.success() {
                return Err(format!("{m} exited with {status}"));
            }
        }
        let mut files = Vec::new();
        snapshot(&root.join("out"), &mut files);
        std::fs::remove_dir_all(root.join("out")).map_err(|e| e.to_string())?;
        Ok(files)
    };
    let first = run_all()?;
    let second = run_all()?;
    let differing = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.clone())
        .collect::<Vec<_>>();
    check(
        first.len() == second.len() && differing.is_empty() && !first.is_empty(),
        format!(
            "3 manifests (solve, protocol, workspace) run twice, {} files compared, {} differ",
            first.len(),
            differing.len() + first.len().abs_diff(second.len())
        ),
    )
}

fn main() {
    let params = RobotParams::prototype();
    let criteria: Vec<Criterion> = vec![
        ("geometry oracle", Box::new(geometry_oracle)),
        ("trivial equilibrium", Box::new(trivial_equilibrium)),
        ("residual re-substitution", Box::new(|| residual_resubstitution(&params))),
        ("mirror symmetry", Box::new(|| mirror_symmetry(&params))),
        ("single-tube oracle", Box::new(|| single_tube_oracle(&params))),
        ("integrator order", Box::new(|| integrator_order(&params))),
        ("monotone continuation", Box::new(|| monotone_continuation(&params))),
        ("sensor tension conversion", Box::new(sensor_conversion)),
        ("error-metric fidelity", Box::new(|| error_metric(&params))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
