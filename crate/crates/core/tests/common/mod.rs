//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::Vector3;
use tacter::config::{ActuationInput, ConfigurationLabel, RobotParams, Side};
use tacter::validation::{MeasuredPose, PoseResult};
use tacter::geometry::OuterTubeSpec;
use nalgebra::Matrix3;
use tacter::coupled::single_tube_balance;
use tacter::shooting::{
    evaluate_full_derivative, BackboneSolution, FullDerivative, RobotModel, RodState, Segment, ShootingResult,
    ShootingUnknowns,
};
use tacter::tendon::TendonRoute;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Area, centroid offset and second moments (about the tube centre and
/// about the centroid) of the material left by the notch, by composite
/// Gauss-Legendre quadrature in polar coordinates over
/// `{ r_i <= ρ <= r_o, ρ cos α >= d - r_o }`.
#[derive(Debug, Clone, Copy)]
pub struct SectionQuadrature {
    pub area: f64,
    pub centroid: f64,
    pub second_moment_center: f64,
    pub second_moment_centroid: f64,
}

fn section_quadrature_at(spec: &OuterTubeSpec, panels: usize, order: usize) -> SectionQuadrature {
    let c = spec.notch_depth - spec.outer_radius;
    let gl = gauss_legendre(order);
    let lo = spec.inner_radius.max(c.max(0.0));
    let hi = spec.outer_radius;
    let (mut a, mut qy, mut iyy) = (0.0, 0.0, 0.0);
    // ρ = lo + (hi - lo) t², which removes the square-root behaviour of the
    // angular limit when the chord, not the lumen, bounds ρ from below.
    for p in 0..panels {
        let t0 = p as f64 / panels as f64;
        let t1 = (p + 1) as f64 / panels as f64;
        for &(xt, wt) in &gl {
            let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xt;
            let rho = lo + (hi - lo) * t * t;
            let drho = 2.0 * (hi - lo) * t * 0.5 * (t1 - t0) * wt;
            let half = if c <= -rho { std::f64::consts::PI } else { (c / rho).clamp(-1.0, 1.0).acos() };
            for &(xa, wa) in &gl {
                let alpha = half * xa;
                let w = half * wa * drho * rho;
                let y = rho * alpha.cos();
                a += w;
                qy += w * y;
                iyy += w * y * y;
            }
        }
    }
    let centroid = qy / a;
    SectionQuadrature {
        area: a,
        centroid,
        second_moment_center: iyy,
        second_moment_centroid: iyy - a * centroid * centroid,
    }
}

/// Refines the panel count until successive results agree to `1e-12` relative.
pub fn section_quadrature(spec: &OuterTubeSpec) -> SectionQuadrature {
    let mut panels = 2;
    let mut prev = section_quadrature_at(spec, panels, 24);
    loop {
        panels *= 2;
        let next = section_quadrature_at(spec, panels, 24);
        let change = [
            (next.area - prev.area) / next.area,
            (next.centroid - prev.centroid) / next.centroid,
            (next.second_moment_centroid - prev.second_moment_centroid) / next.second_moment_centroid,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
        if change < 1e-12 || panels >= 4096 {
            return next;
        }
        prev = next;
    }
}

/// Planar rod of length `length`, clamped at `(0, 0, base_z)` along +z and
/// bending in the y-z plane, loaded by one tendon at body offset `arm`
/// along d2. The rod is split into `n` elements of constant strain. The
/// tendon is the polyline through the offset points at the element ends, so
/// it loads the rod with the kink force `λ (t⁺ - t⁻)` at interior nodes and
/// with `-λ t` at the tip. Internal loads at each element midpoint are the
/// free-body sums of everything distal to it, and the strains are relaxed to
/// a fixed point.
pub struct PlanarRod {
    pub length: f64,
    pub base_z: f64,
    pub ei: f64,
    pub ga: f64,
    pub ea: f64,
    pub arm: f64,
    pub tension: f64,
}

impl PlanarRod {
    /// Tip position `(y, z)`.
    pub fn relax(&self, n: usize) -> (f64, f64) {
        let h = self.length / n as f64;
        let mut kappa = vec![0.0; n];
        let mut shear = vec![0.0; n];
        let mut axial = vec![0.0; n];
        // The frame is a rotation by `a` about x: d2 = (cos a, sin a) and
        // d3 = (-sin a, cos a) in (y, z), with a' = κ.
        for _ in 0..20_000 {
            let mut a = vec![0.0; n + 1];
            let mut pos = vec![(0.0, self.base_z); n + 1];
            for k in 0..n {
                let (a0, a1) = (a[k], a[k] + kappa[k] * h);
                a[k + 1] = a1;
                let (d3, d2) = if kappa[k].abs() < 1e-12 {
                    let am = 0.5 * (a0 + a1);
                    ((-am.sin() * h, am.cos() * h), (am.cos() * h, am.sin() * h))
                } else {
                    let c = kappa[k];
                    (
                        ((a1.cos() - a0.cos()) / c, (a1.sin() - a0.sin()) / c),
                        ((a1.sin() - a0.sin()) / c, (a0.cos() - a1.cos()) / c),
                    )
                };
                let v3 = 1.0 + axial[k];
                pos[k + 1] = (
                    pos[k].0 + v3 * d3.0 + shear[k] * d2.0,
                    pos[k].1 + v3 * d3.1 + shear[k] * d2.1,
                );
            }
            let tendon: Vec<(f64, f64)> = (0..=n)
                .map(|k| (pos[k].0 + self.arm * a[k].cos(), pos[k].1 + self.arm * a[k].sin()))
                .collect();
            let unit = |p: (f64, f64), q: (f64, f64)| {
                let (dy, dz) = (q.0 - p.0, q.1 - p.1);
                let l = dy.hypot(dz);
                (dy / l, dz / l)
            };
            let mut load = vec![(0.0, 0.0); n + 1];
            for k in 1..n {
                let tm = unit(tendon[k - 1], tendon[k]);
                let tp = unit(tendon[k], tendon[k + 1]);
                load[k] = (self.tension * (tp.0 - tm.0), self.tension * (tp.1 - tm.1));
            }
            let tn = unit(tendon[n - 1], tendon[n]);
            load[n] = (-self.tension * tn.0, -self.tension * tn.1);
            // Suffix sums of force and of the x moment about the origin.
            let mut f_sum = vec![(0.0, 0.0); n + 2];
            let mut m_sum = vec![0.0; n + 2];
            for k in (0..=n).rev() {
                f_sum[k] = (f_sum[k + 1].0 + load[k].0, f_sum[k + 1].1 + load[k].1);
                m_sum[k] = m_sum[k + 1] + tendon[k].0 * load[k].1 - tendon[k].1 * load[k].0;
            }
            let mut change = 0.0f64;
            for k in 0..n {
                let f = f_sum[k + 1];
                let am = 0.5 * (a[k] + a[k + 1]);
                let (ym, zm) = (0.5 * (pos[k].0 + pos[k + 1].0), 0.5 * (pos[k].1 + pos[k + 1].1));
                let mx = m_sum[k + 1] - (ym * f.1 - zm * f.0);
                let n2 = f.0 * am.cos() + f.1 * am.sin();
                let n3 = -f.0 * am.sin() + f.1 * am.cos();
                let next = (mx / self.ei, n2 / self.ga, n3 / self.ea);
                change = change
                    .max((next.0 - kappa[k]).abs())
                    .max((next.1 - shear[k]).abs())
                    .max((next.2 - axial[k]).abs());
                kappa[k] = 0.5 * (kappa[k] + next.0);
                shear[k] = 0.5 * (shear[k] + next.1);
                axial[k] = 0.5 * (axial[k] + next.2);
            }
            if change < 1e-13 {
                return pos[n];
            }
        }
        panic!("relaxation did not settle");
    }
}

/// Largest violation, over all backbone samples, of the free-body balance of
/// everything distal to a cut: the internal force and moment of the tubes at
/// `s` must equal minus the pull `λ t` of every tendon still running at `s`
/// (moment taken about the centerline point). Returns `(force, moment)`.
pub fn free_body_defect(model: &RobotModel, backbone: &BackboneSolution) -> (f64, f64) {
    let (mut worst_f, mut worst_m) = (0.0f64, 0.0f64);
    for st in &backbone.samples {
        let mut n = st.inner_frame * st.inner_n;
        let mut m = st.inner_frame * st.inner_m;
        let mut pull = |frame: &Matrix3<f64>, u: &Vector3<f64>, v: &Vector3<f64>, t: &TendonRoute| {
            let pd = u.cross(&t.offset) + v;
            let dir = frame * pd.normalize();
            n += t.tension * dir;
            m += (frame * t.offset).cross(&(t.tension * dir));
        };
        for t in &model.inner.tendons {
            pull(&st.inner_frame, &st.inner_u, &st.inner_v, t);
        }
        if let (Segment::Overlap, Some(pair)) = (st.segment, &model.overlap) {
            let r1 = st.outer_frame.expect("overlap sample carries the outer frame");
            let (u1, v1) = (st.outer_u.unwrap(), st.outer_v.unwrap());
            for t in &pair.outer.tendons {
                pull(&r1, &u1, &v1, t);
            }
            n += r1 * st.outer_n.unwrap();
            m += r1 * st.outer_m.unwrap();
        }
        worst_f = worst_f.max(n.norm());
        worst_m = worst_m.max(m.norm());
    }
    (worst_f, worst_m)
}

/// Signed tip-tangent angle in the bending plane, positive toward the side
/// of the actuated inner tendon.
pub fn deflection_angle(params: &RobotParams, label: ConfigurationLabel, backbone: &BackboneSolution) -> f64 {
    let t: Vector3<f64> = backbone.tip_rotation().column(2).into_owned();
    let left = match params.left_side {
        tacter::config::LeftSide::PlusD2 => 1.0,
        tacter::config::LeftSide::MinusD2 => -1.0,
    };
    let side = match label.side() {
        Side::Left => left,
        Side::Right => -left,
    };
    (side * t.y).atan2(t.z)
}

/// Largest local equilibrium residual over the backbone, re-evaluated from
/// the stored strains and the strain rates the model produces at each node.
/// Overlap nodes use the coupled equations of both tubes, distal nodes the
/// single-rod balance. Returns `(overlap, distal)`.
pub fn equilibrium_defect(model: &RobotModel, backbone: &BackboneSolution) -> (f64, f64) {
    let (mut overlap, mut distal) = (0.0f64, 0.0f64);
    for st in &backbone.samples {
        match evaluate_full_derivative(model, st).expect("derivative along a converged backbone") {
            FullDerivative::Overlap(d) => {
                let pair = model.overlap.as_ref().unwrap();
                let strains = st.overlap_strains.unwrap();
                let r = pair.equilibrium_residuals(&strains, &d).unwrap();
                overlap = overlap.max(r.amax());
            }
            FullDerivative::Distal { u_dot, v_dot } => {
                let (f, m) = single_tube_balance(&model.inner, &st.inner_u, &st.inner_v, &u_dot, &v_dot).unwrap();
                distal = distal.max(f.amax()).max(m.amax());
            }
        }
    }
    (overlap, distal)
}

/// A converged (or not) pose whose tip sits exactly at `tip`.
pub fn pose_at(name: &str, step: usize, tip: [f64; 3], converged: bool) -> PoseResult {
    let state = RodState {
        s: 35.0,
        segment: Segment::Distal,
        position: Vector3::from(tip),
        outer_frame: None,
        inner_frame: Matrix3::identity(),
        outer_u: None,
        outer_v: None,
        outer_n: None,
        outer_m: None,
        inner_u: Vector3::zeros(),
        inner_v: Vector3::z(),
        inner_n: Vector3::zeros(),
        inner_m: Vector3::zeros(),
        theta: 0.0,
        beta: 1.0,
        overlap_strains: None,
    };
    PoseResult {
        configuration: name.parse().unwrap(),
        step_index: step,
        tension: 0.1,
        input: ActuationInput::default(),
        result: ShootingResult {
            unknowns: ShootingUnknowns::default(),
            residual_norm: 0.0,
            iterations: 0,
            converged,
            backbone: Some(BackboneSolution {
                samples: vec![state],
                l1: 30.0,
                l2: 35.0,
            }),
            jacobian_condition: None,
            failure: None,
            continuation_steps: 0,
        },
    }
}

pub fn measured(name: &str, step: usize, tip: [f64; 3]) -> MeasuredPose {
    MeasuredPose {
        configuration: name.parse().unwrap(),
        step_index: step,
        tip_position: Vector3::from(tip),
        tendon_tension: 0.1,
    }
}
