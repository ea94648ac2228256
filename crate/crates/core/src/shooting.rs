//! Shooting solution of the two-point boundary value problem.
//!
//! The base pose and twist are known; the base strains are not. For a
//! sheathed robot the unknowns are `u1(0)`, `v1(0)`, `u_d3,2(0)` and `β(0)`
//! and the eight residuals are the inner-tip force and moment balance (six)
//! plus the outer tube's axial force and torque balance at its anchor (two).
//! An inner robot on its own has six unknowns (its base `u`, `v`) and six tip
//! residuals.

use crate::coupled::{single_rod_derivative, OverlapPair, OverlapStrains, Tube};
use crate::rod::{
    integrate_over, orthonormality_error, rot_d3, ArcGrid, FramedState, IntegrationError, E3,
};
use nalgebra::{DMatrix, DVector, Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};

/// Residual norm (mixed N and N·mm) below which a solve counts as converged.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Geometry and loading of one solve, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    /// Outer/inner pair on `[0, l1]`; `None` when the outer robot is absent.
    pub overlap: Option<OverlapPair>,
    /// The inner robot, used beyond `l1`.
    pub inner: Tube,
    /// Outer termination (0 without an outer robot).
    pub l1: f64,
    /// Inner tip.
    pub l2: f64,
    pub base_rotation: Matrix3<f64>,
    pub base_position: Vector3<f64>,
    /// Twist of the inner robot relative to the outer one at the base.
    pub theta0: f64,
}

impl RobotModel {
    /// Copy of `other` with every tendon tension blended linearly from
    /// `self` (`t = 0`) to `other` (`t = 1`). Tendons are matched by position
    /// in their tube's list.
    pub fn blend_tensions(&self, other: &RobotModel, t: f64) -> RobotModel {
        fn mix(from: &Tube, to: &Tube, t: f64) -> Tube {
            let mut out = to.clone();
            for (k, tendon) in out.tendons.iter_mut().enumerate() {
                let a = from.tendons.get(k).map_or(0.0, |f| f.tension);
                tendon.tension = a + (tendon.tension - a) * t;
            }
            out
        }
        let mut out = other.clone();
        out.inner = mix(&self.inner, &other.inner, t);
        if let Some(pair) = out.overlap.as_mut() {
            let from = self.overlap.as_ref();
            pair.inner = mix(&self.inner, &other.inner, t);
            pair.outer = match from {
                Some(f) => mix(&f.outer, &pair.outer, t),
                None => mix(&Tube { section: pair.outer.section, tendons: vec![] }, &pair.outer, t),
            };
        }
        out
    }

    /// The same robot with every tendon slack.
    pub fn unloaded(&self) -> RobotModel {
        self.scaled_tensions(0.0)
    }

    pub fn scaled_tensions(&self, k: f64) -> RobotModel {
        let mut out = self.clone();
        let scale = |tube: &mut Tube| tube.tendons.iter_mut().for_each(|t| t.tension *= k);
        scale(&mut out.inner);
        if let Some(pair) = out.overlap.as_mut() {
            scale(&mut pair.inner);
            scale(&mut pair.outer);
        }
        out
    }

    pub fn unknown_count(&self) -> usize {
        if self.overlap.is_some() {
            8
        } else {
            6
        }
    }
}

/// Discretization and iteration policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub overlap_steps: usize,
    pub distal_steps: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings tried before a Newton step is abandoned.
    pub max_halvings: usize,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            overlap_steps: 200,
            distal_steps: 200,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 100,
            max_halvings: 8,
            fd_step: 1e-6,
        }
    }
}

/// Unknown base values. `v1` and `β` are stored as offsets from their
/// unloaded values (`e3` and 1). Without an outer robot `u1`, `v1` are the
/// inner robot's base strains and the last two fields are unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingUnknowns {
    pub u1: [f64; 3],
    pub v1_offset: [f64; 3],
    pub u2_d3: f64,
    pub beta_offset: f64,
}

impl Default for ShootingUnknowns {
    /// The unloaded straight rod.
    fn default() -> Self {
        Self {
            u1: [0.0; 3],
            v1_offset: [0.0; 3],
            u2_d3: 0.0,
            beta_offset: 0.0,
        }
    }
}

impl ShootingUnknowns {
    pub fn u1(&self) -> Vector3<f64> {
        Vector3::from(self.u1)
    }

    pub fn v1(&self) -> Vector3<f64> {
        E3 + Vector3::from(self.v1_offset)
    }

    pub fn beta(&self) -> f64 {
        1.0 + self.beta_offset
    }

    pub fn to_vector(&self, dim: usize) -> DVector<f64> {
        let mut x = DVector::zeros(dim);
        x.rows_mut(0, 3).copy_from_slice(&self.u1);
        x.rows_mut(3, 3).copy_from_slice(&self.v1_offset);
        if dim == 8 {
            x[6] = self.u2_d3;
            x[7] = self.beta_offset;
        }
        x
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        Self {
            u1: [x[0], x[1], x[2]],
            v1_offset: [x[3], x[4], x[5]],
            u2_d3: if x.len() > 6 { x[6] } else { 0.0 },
            beta_offset: if x.len() > 7 { x[7] } else { 0.0 },
        }
    }

    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        let a = self.to_vector(8);
        let b = other.to_vector(8);
        (a - b).amax()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector(8).iter().all(|x| x.is_finite())
    }
}

impl ShootingUnknowns {
    /// Base strains that balance the tendon pulls as if every tendon ran
    /// straight: axial compression from the tensions and the curvature their
    /// base moment produces. Equals the unloaded guess when all tensions vanish.
    pub fn tendon_balanced(model: &RobotModel) -> Self {
        let pull = |tube: &Tube| -> (f64, Vector3<f64>) {
            tube.tendons.iter().fold((0.0, Vector3::zeros()), |(f, m), t| {
                (f - t.tension, m + t.offset.cross(&(-E3 * t.tension)))
            })
        };
        let (inner_axial, inner_moment) = pull(&model.inner);
        let inner_ea = model.inner.section.k_se[(2, 2)];
        match &model.overlap {
            Some(pair) => {
                let (outer_axial, outer_moment) = pull(&pair.outer);
                let rz = rot_d3(model.theta0);
                let moment = outer_moment + rz * inner_moment;
                let stiffness = pair.outer.section.k_bt + rz * pair.inner.section.k_bt * rz.transpose();
                let planar = stiffness.fixed_view::<2, 2>(0, 0).into_owned();
                let u = planar
                    .try_inverse()
                    .map(|inv| inv * moment.fixed_rows::<2>(0))
                    .unwrap_or_else(nalgebra::Vector2::zeros);
                let v1z = outer_axial / pair.outer.section.k_se[(2, 2)];
                // β (1 + v1z) = 1 + v2z
                let beta_offset = (inner_axial / inner_ea - v1z) / (1.0 + v1z);
                Self {
                    u1: [u.x, u.y, 0.0],
                    v1_offset: [0.0, 0.0, v1z],
                    u2_d3: 0.0,
                    beta_offset,
                }
            }
            None => {
                let kb = model.inner.section.k_bt;
                Self {
                    u1: [inner_moment.x / kb[(0, 0)], inner_moment.y / kb[(1, 1)], 0.0],
                    v1_offset: [0.0, 0.0, inner_axial / inner_ea],
                    u2_d3: 0.0,
                    beta_offset: 0.0,
                }
            }
        }
    }

    /// `self + (to - from)`, used to carry a converged solution over to
    /// new tensions.
    pub fn shifted(&self, from: &Self, to: &Self) -> Self {
        Self::from_vector(&(self.to_vector(8) + to.to_vector(8) - from.to_vector(8)))
    }
}

/// Which part of the robot a backbone sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Overlap,
    Distal,
}

/// Full rod state at one arc-length node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodState {
    pub s: f64,
    pub segment: Segment,
    pub position: Vector3<f64>,
    /// Outer frame; present on the overlap only.
    pub outer_frame: Option<Matrix3<f64>>,
    pub inner_frame: Matrix3<f64>,
    pub outer_u: Option<Vector3<f64>>,
    pub outer_v: Option<Vector3<f64>>,
    pub outer_n: Option<Vector3<f64>>,
    pub outer_m: Option<Vector3<f64>>,
    pub inner_u: Vector3<f64>,
    pub inner_v: Vector3<f64>,
    pub inner_n: Vector3<f64>,
    pub inner_m: Vector3<f64>,
    pub theta: f64,
    pub beta: f64,
    /// Overlap strain variables, kept at full precision.
    pub overlap_strains: Option<OverlapStrains>,
}

/// Discretized backbone of a solved robot. The node at `l1` appears twice:
/// once as the end of the overlap and once as the start of the distal part.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneSolution {
    pub samples: Vec<RodState>,
    pub l1: f64,
    pub l2: f64,
}

impl BackboneSolution {
    pub fn tip(&self) -> &RodState {
        self.samples.last().expect("backbone has at least one sample")
    }

    pub fn tip_position(&self) -> Vector3<f64> {
        self.tip().position
    }

    pub fn tip_rotation(&self) -> Matrix3<f64> {
        self.tip().inner_frame
    }

    /// Largest `|RᵀR - I|` over every stored frame.
    pub fn max_orthonormality_error(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| std::iter::once(s.inner_frame).chain(s.outer_frame))
            .map(|r| orthonormality_error(&r))
            .fold(0.0, f64::max)
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub unknowns: ShootingUnknowns,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Backbone at the final unknowns; `None` only if that integration failed.
    pub backbone: Option<BackboneSolution>,
    /// 2-norm condition number of the last finite-difference Jacobian.
    pub jacobian_condition: Option<f64>,
    /// Why the iteration stopped early, if it did.
    pub failure: Option<String>,
    /// Intermediate tension levels a sweep had to insert to reach this pose.
    pub continuation_steps: usize,
}

impl ShootingResult {
    pub fn tip_position(&self) -> Option<Vector3<f64>> {
        self.backbone.as_ref().map(|b| b.tip_position())
    }
}

const OVERLAP_DIM: usize = 12;
const DISTAL_DIM: usize = 9;

fn overlap_strains(y: &SVector<f64, OVERLAP_DIM>) -> OverlapStrains {
    OverlapStrains {
        u1: Vector3::new(y[4], y[5], y[6]),
        v1_offset: Vector3::new(y[7], y[8], y[9]),
        theta: y[3],
        u2_d3: y[10],
        beta_offset: y[11],
    }
}

fn overlap_sample(
    pair: &OverlapPair,
    s: f64,
    frame: &Matrix3<f64>,
    y: &SVector<f64, OVERLAP_DIM>,
) -> RodState {
    let st = overlap_strains(y);
    let (u2, v2_offset) = st.tube2();
    RodState {
        s,
        segment: Segment::Overlap,
        position: Vector3::new(y[0], y[1], y[2]),
        outer_frame: Some(*frame),
        inner_frame: frame * rot_d3(st.theta),
        outer_u: Some(st.u1),
        outer_v: Some(st.v1()),
        outer_n: Some(pair.outer.force(&st.v1_offset)),
        outer_m: Some(pair.outer.moment(&st.u1)),
        inner_u: u2,
        inner_v: E3 + v2_offset,
        inner_n: pair.inner.force(&v2_offset),
        inner_m: pair.inner.moment(&u2),
        theta: st.theta,
        beta: st.beta(),
        overlap_strains: Some(st),
    }
}

fn distal_sample(
    tube: &Tube,
    s: f64,
    frame: &Matrix3<f64>,
    y: &SVector<f64, DISTAL_DIM>,
    theta: f64,
    beta: f64,
) -> RodState {
    let u = Vector3::new(y[3], y[4], y[5]);
    let dv = Vector3::new(y[6], y[7], y[8]);
    RodState {
        s,
        segment: Segment::Distal,
        position: Vector3::new(y[0], y[1], y[2]),
        outer_frame: None,
        inner_frame: *frame,
        outer_u: None,
        outer_v: None,
        outer_n: None,
        outer_m: None,
        inner_u: u,
        inner_v: E3 + dv,
        inner_n: tube.force(&dv),
        inner_m: tube.moment(&u),
        theta,
        beta,
        overlap_strains: None,
    }
}

/// Evaluates the arc-length derivative of a full rod state: the coupled
/// system on the overlap, the single-rod closure beyond it.
pub enum FullDerivative {
    Overlap(crate::coupled::CoupledDerivative),
    Distal {
        u_dot: Vector3<f64>,
        v_dot: Vector3<f64>,
    },
}

pub fn evaluate_full_derivative(
    model: &RobotModel,
    state: &RodState,
) -> Result<FullDerivative, IntegrationError> {
    match (state.segment, &model.overlap, state.overlap_strains) {
        (Segment::Overlap, Some(pair), Some(st)) => {
            Ok(FullDerivative::Overlap(pair.derivative(state.s, &st)?))
        }
        (Segment::Overlap, ..) => Err(IntegrationError::Degenerate {
            s: state.s,
            reason: "overlap state without an outer robot".into(),
        }),
        (Segment::Distal, ..) => {
            let (u_dot, v_dot) =
                single_rod_derivative(state.s, &model.inner, &state.inner_u, &(state.inner_v - E3))?;
            Ok(FullDerivative::Distal { u_dot, v_dot })
        }
    }
}

/// Integrates the model from the base with the given unknowns and returns
/// the boundary residual; samples every node into `record` when given.
pub fn shoot(
    model: &RobotModel,
    config: &SolverConfig,
    unknowns: &ShootingUnknowns,
    mut record: Option<&mut Vec<RodState>>,
) -> Result<DVector<f64>, IntegrationError> {
    let grid = ArcGrid::new(model.l1, model.l2, config.overlap_steps, config.distal_steps);
    let mut residual = DVector::zeros(model.unknown_count());

    let (distal_start, theta, beta) = match &model.overlap {
        Some(pair) => {
            let mut y = SVector::<f64, OVERLAP_DIM>::zeros();
            y.fixed_rows_mut::<3>(0).copy_from(&model.base_position);
            y[3] = model.theta0;
            y.fixed_rows_mut::<3>(4).copy_from(&unknowns.u1());
            y.fixed_rows_mut::<3>(7).copy_from(&Vector3::from(unknowns.v1_offset));
            y[10] = unknowns.u2_d3;
            y[11] = unknowns.beta_offset;
            let start = FramedState {
                frame: model.base_rotation,
                vector: y,
            };
            let mut rhs = |s: f64, r: &Matrix3<f64>, y: &SVector<f64, OVERLAP_DIM>| {
                let st = overlap_strains(y);
                let d = pair.derivative(s, &st)?;
                let mut dy = SVector::<f64, OVERLAP_DIM>::zeros();
                dy.fixed_rows_mut::<3>(0).copy_from(&(r * st.v1()));
                dy[3] = d.theta_dot;
                dy.fixed_rows_mut::<3>(4).copy_from(&d.u1_dot);
                dy.fixed_rows_mut::<3>(7).copy_from(&d.v1_dot);
                dy[10] = d.u2_d3_dot;
                dy[11] = d.beta_dot;
                Ok((st.u1, dy))
            };
            let end = integrate_over(grid.overlap(), start, &mut rhs, |s, st| {
                if let Some(rec) = record.as_deref_mut() {
                    rec.push(overlap_sample(pair, s, &st.frame, &st.vector));
                }
            })?;
            let st = overlap_strains(&end.vector);
            let (mismatch, n2, m2) = pair
                .terminate_outer(&st)
                .map_err(|e| relocate(e, model.l1))?;
            residual[6] = mismatch[0];
            residual[7] = mismatch[1];
            let u2 = model.inner.section.k_bt.try_inverse().unwrap_or_else(Matrix3::zeros) * m2;
            let dv2 = model.inner.section.k_se.try_inverse().unwrap_or_else(Matrix3::zeros) * n2;
            let mut yd = SVector::<f64, DISTAL_DIM>::zeros();
            yd.fixed_rows_mut::<3>(0).copy_from(&end.vector.fixed_rows::<3>(0));
            yd.fixed_rows_mut::<3>(3).copy_from(&u2);
            yd.fixed_rows_mut::<3>(6).copy_from(&dv2);
            (
                FramedState {
                    frame: end.frame * rot_d3(st.theta),
                    vector: yd,
                },
                st.theta,
                st.beta(),
            )
        }
        None => {
            let mut yd = SVector::<f64, DISTAL_DIM>::zeros();
            yd.fixed_rows_mut::<3>(0).copy_from(&model.base_position);
            yd.fixed_rows_mut::<3>(3).copy_from(&unknowns.u1());
            yd.fixed_rows_mut::<3>(6).copy_from(&Vector3::from(unknowns.v1_offset));
            (
                FramedState {
                    frame: model.base_rotation * rot_d3(model.theta0),
                    vector: yd,
                },
                model.theta0,
                1.0,
            )
        }
    };

    let inner = &model.inner;
    let mut rhs = |s: f64, r: &Matrix3<f64>, y: &SVector<f64, DISTAL_DIM>| {
        let u = Vector3::new(y[3], y[4], y[5]);
        let dv = Vector3::new(y[6], y[7], y[8]);
        let (u_dot, v_dot) = single_rod_derivative(s, inner, &u, &dv)?;
        let mut dy = SVector::<f64, DISTAL_DIM>::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&(r * (E3 + dv)));
        dy.fixed_rows_mut::<3>(3).copy_from(&u_dot);
        dy.fixed_rows_mut::<3>(6).copy_from(&v_dot);
        Ok((u, dy))
    };
    let end = integrate_over(grid.distal(), distal_start, &mut rhs, |s, st| {
        if let Some(rec) = record.as_deref_mut() {
            rec.push(distal_sample(inner, s, &st.frame, &st.vector, theta, beta));
        }
    })?;

    let u = Vector3::new(end.vector[3], end.vector[4], end.vector[5]);
    let dv = Vector3::new(end.vector[6], end.vector[7], end.vector[8]);
    let (tip_f, tip_m) = inner
        .anchor_load(&u, &(E3 + dv))
        .map_err(|e| relocate(e, model.l2))?;
    // n(l2⁻) = F, m(l2⁻) = M; the rod is free beyond the anchor.
    let nf = inner.force(&dv) - tip_f;
    let nm = inner.moment(&u) - tip_m;
    residual.rows_mut(0, 3).copy_from(&nf);
    residual.rows_mut(3, 3).copy_from(&nm);
    Ok(residual)
}

fn relocate(e: IntegrationError, s: f64) -> IntegrationError {
    match e {
        IntegrationError::Degenerate { reason, .. } => IntegrationError::Degenerate { s, reason },
        other => other,
    }
}

/// Boundary residual for the given unknowns.
pub fn residual(
    model: &RobotModel,
    config: &SolverConfig,
    unknowns: &ShootingUnknowns,
) -> Result<DVector<f64>, IntegrationError> {
    shoot(model, config, unknowns, None)
}

/// Integrates once more at `unknowns` and keeps every node.
pub fn backbone(
    model: &RobotModel,
    config: &SolverConfig,
    unknowns: &ShootingUnknowns,
) -> Result<(BackboneSolution, DVector<f64>), IntegrationError> {
    let mut samples = Vec::with_capacity(config.overlap_steps + config.distal_steps + 2);
    let r = shoot(model, config, unknowns, Some(&mut samples))?;
    Ok((
        BackboneSolution {
            samples,
            l1: model.l1,
            l2: model.l2,
        },
        r,
    ))
}

// Typical magnitudes of the unknowns; they set the finite-difference step floor.
fn typical_scale(index: usize) -> f64 {
    match index {
        0..=2 => 1e-2,
        6 => 1e-2,
        _ => 1e-4,
    }
}

/// Forward-difference Jacobian of the residual.
pub fn jacobian(
    model: &RobotModel,
    config: &SolverConfig,
    x: &DVector<f64>,
    r0: &DVector<f64>,
) -> Result<DMatrix<f64>, IntegrationError> {
    let n = x.len();
    let mut jac = DMatrix::zeros(r0.len(), n);
    for j in 0..n {
        let h = config.fd_step * x[j].abs().max(typical_scale(j));
        let mut xp = x.clone();
        xp[j] += h;
        let h = xp[j] - x[j];
        let rp = residual(model, config, &ShootingUnknowns::from_vector(&xp))?;
        jac.set_column(j, &((rp - r0) / h));
    }
    Ok(jac)
}

/// Central-difference Jacobian, for consistency checks.
pub fn central_jacobian(
    model: &RobotModel,
    config: &SolverConfig,
    x: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>, IntegrationError> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = step * x[j].abs().max(typical_scale(j));
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let rp = residual(model, config, &ShootingUnknowns::from_vector(&xp))?;
        let rm = residual(model, config, &ShootingUnknowns::from_vector(&xm))?;
        jac.set_column(j, &((rp - rm) / (xp[j] - xm[j])));
    }
    Ok(jac)
}

fn condition_number(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Damped Newton iteration on the boundary residual. Without a guess the
/// iteration starts from [`ShootingUnknowns::tendon_balanced`].
pub fn solve(
    model: &RobotModel,
    config: &SolverConfig,
    initial_guess: Option<ShootingUnknowns>,
) -> ShootingResult {
    let dim = model.unknown_count();
    let guess = initial_guess.unwrap_or_else(|| ShootingUnknowns::tendon_balanced(model));
    let mut x = guess.to_vector(dim);
    let mut iterations = 0;
    let mut failure = None;
    let mut last_jac: Option<DMatrix<f64>> = None;

    let mut r = match residual(model, config, &guess) {
        Ok(r) if r.iter().all(|v| v.is_finite()) => r,
        Ok(_) => {
            return failed(guess, iterations, "non-finite residual at the initial guess".into())
        }
        Err(e) => return failed(guess, iterations, format!("initial guess: {e}")),
    };
    let weights = merit_weights(model);
    let mut norm = r.norm();
    let mut merit = r.component_mul(&weights).norm();

    while norm >= config.tolerance {
        if iterations >= config.max_iterations {
            failure = Some(format!("iteration cap {} reached", config.max_iterations));
            break;
        }
        let jac = match jacobian(model, config, &x, &r) {
            Ok(j) => j,
            Err(e) => {
                failure = Some(format!("jacobian: {e}"));
                break;
            }
        };
        let evaluate = |trial: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
            let rt = residual(model, config, &ShootingUnknowns::from_vector(trial)).ok()?;
            let mt = rt.component_mul(&weights).norm();
            (mt.is_finite() && mt < merit).then_some((rt, mt))
        };
        let mut accepted = None;
        if let Some(step) = jac.clone().lu().solve(&(-&r)).filter(|s| s.iter().all(|v| v.is_finite())) {
            let mut alpha = 1.0;
            for _ in 0..=config.max_halvings {
                let trial = &x + &step * alpha;
                if let Some((rt, nt)) = evaluate(&trial) {
                    accepted = Some((trial, rt, nt));
                    break;
                }
                alpha *= 0.5;
            }
        }
        if accepted.is_none() {
            // Levenberg-Marquardt steps on column-scaled unknowns, reusing the Jacobian.
            let wjac = DMatrix::from_diagonal(&weights) * &jac;
            for step in marquardt_steps(&wjac, &r.component_mul(&weights)) {
                let trial = &x + step;
                if let Some((rt, nt)) = evaluate(&trial) {
                    accepted = Some((trial, rt, nt));
                    break;
                }
            }
        }
        last_jac = Some(jac);
        iterations += 1;
        match accepted {
            Some((xt, rt, mt)) => {
                x = xt;
                norm = rt.norm();
                r = rt;
                merit = mt;
            }
            None => {
                failure = Some("no Newton or Marquardt step reduced the residual".into());
                break;
            }
        }
    }

    let unknowns = ShootingUnknowns::from_vector(&x);
    let converged = norm < config.tolerance;
    let backbone = backbone(model, config, &unknowns).ok().map(|(b, _)| b);
    ShootingResult {
        unknowns,
        residual_norm: norm,
        iterations,
        converged,
        backbone,
        jacobian_condition: last_jac.as_ref().map(condition_number),
        failure: if converged { None } else { failure },
        continuation_steps: 0,
    }
}

/// Row weights of the line-search merit function: force residuals are
/// multiplied by the robot length so that they compare with moments.
fn merit_weights(model: &RobotModel) -> DVector<f64> {
    let n = model.unknown_count();
    DVector::from_iterator(n, (0..n).map(|i| if i < 3 || i == 6 { model.l2 } else { 1.0 }))
}

/// Damped least-squares steps `(ĴᵀĴ + μ I) ŷ = -Ĵᵀ r` for increasing `μ`,
/// where `Ĵ` has unit column norms.
fn marquardt_steps(jac: &DMatrix<f64>, r: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = jac.ncols();
    let scale = DVector::from_iterator(n, jac.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)));
    let mut scaled = jac.clone();
    for (j, mut c) in scaled.column_iter_mut().enumerate() {
        c /= scale[j];
    }
    let normal = scaled.transpose() * &scaled;
    let gradient = -(scaled.transpose() * r);
    let mut steps = Vec::new();
    let mut mu = 1e-8;
    while mu <= 1e2 {
        let mut a = normal.clone();
        for i in 0..n {
            a[(i, i)] += mu;
        }
        if let Some(y) = a.cholesky().map(|c| c.solve(&gradient)) {
            steps.push(y.component_div(&scale));
        }
        mu *= 10.0;
    }
    steps
}

fn failed(unknowns: ShootingUnknowns, iterations: usize, why: String) -> ShootingResult {
    ShootingResult {
        unknowns,
        residual_norm: f64::INFINITY,
        iterations,
        converged: false,
        backbone: None,
        jacobian_condition: None,
        failure: Some(why),
        continuation_steps: 0,
    }
}

/// How [`sweep`] chains its solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Sequential, each solve warm-started from the previous converged one.
    WarmStart,
    /// Independent solves from the unloaded state, run in parallel.
    ParallelColdStart,
}

/// Largest number of interval halvings when a pose has to be approached
/// through intermediate tensions.
pub const MAX_CONTINUATION_DEPTH: usize = 6;

/// Solves a sequence of models. A failed item is reported in place and does
/// not stop the sweep.
pub fn sweep(models: &[RobotModel], config: &SolverConfig, mode: SweepMode) -> Vec<ShootingResult> {
    match mode {
        SweepMode::WarmStart => {
            let mut out = Vec::with_capacity(models.len());
            let mut previous: Option<(RobotModel, ShootingUnknowns)> = None;
            for model in models {
                let result = match &previous {
                    Some((pm, px)) if pm.unknown_count() == model.unknown_count() => {
                        let warm = continue_to(pm, px, model, config, 0);
                        if warm.converged {
                            warm
                        } else {
                            solve_from_unloaded(model, config)
                        }
                    }
                    _ => solve_from_unloaded(model, config),
                };
                if result.converged {
                    previous = Some((model.clone(), result.unknowns));
                }
                out.push(result);
            }
            out
        }
        SweepMode::ParallelColdStart => {
            use rayon::prelude::*;
            models.par_iter().map(|m| solve_from_unloaded(m, config)).collect()
        }
    }
}

/// Solves from the default guess, falling back to a tension continuation
/// from the unloaded robot, whose solution is known exactly.
pub fn solve_from_unloaded(model: &RobotModel, config: &SolverConfig) -> ShootingResult {
    let direct = solve(model, config, None);
    if direct.converged {
        return direct;
    }
    let start = model.unloaded();
    let fallback = continue_to(&start, &ShootingUnknowns::default(), model, config, 0);
    if fallback.converged {
        fallback
    } else {
        direct
    }
}

fn continue_to(
    from: &RobotModel,
    from_x: &ShootingUnknowns,
    to: &RobotModel,
    config: &SolverConfig,
    depth: usize,
) -> ShootingResult {
    let guess = from_x.shifted(
        &ShootingUnknowns::tendon_balanced(from),
        &ShootingUnknowns::tendon_balanced(to),
    );
    let direct = solve(to, config, Some(guess));
    if direct.converged || depth >= MAX_CONTINUATION_DEPTH {
        return direct;
    }
    let mid = from.blend_tensions(to, 0.5);
    let half = continue_to(from, from_x, &mid, config, depth + 1);
    if !half.converged {
        return direct;
    }
    let mut rest = continue_to(&mid, &half.unknowns, to, config, depth + 1);
    rest.continuation_steps += half.continuation_steps + 1;
    if rest.converged {
        rest
    } else {
        direct
    }
}
