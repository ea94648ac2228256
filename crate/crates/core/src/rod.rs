//! Rod kinematics and the arc-length integrator.
//!
//! Every rod state carries a material frame `R ∈ SO(3)` with `R' = R [u]`
//! alongside a vector of Euclidean unknowns. The integrator is a
//! Runge–Kutta–Munthe-Kaas scheme built on the classical fourth-order tableau:
//! Euclidean parts follow ordinary RK4, the frame is advanced through the
//! exponential map so it never leaves the rotation group.

use nalgebra::{Matrix3, SVector, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("non-finite derivative at s = {s} mm")]
    NonFinite { s: f64 },
    #[error("model degeneracy at s = {s} mm: {reason}")]
    Degenerate { s: f64, reason: String },
    #[error("invalid step size {0}")]
    BadStep(f64),
}

pub const E3: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// The matrix `[w]` with `[w] x = w × x`.
#[inline]
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Rotation by `theta` about the third director.
#[inline]
pub fn rot_d3(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rodrigues' formula for `exp([w])`.
pub fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let angle_sq = w.norm_squared();
    let k = skew(w);
    let (a, b) = if angle_sq < 1e-8 {
        // Taylor series, accurate to machine precision in this range.
        (
            1.0 - angle_sq / 6.0 * (1.0 - angle_sq / 20.0),
            0.5 - angle_sq / 24.0 * (1.0 - angle_sq / 30.0),
        )
    } else {
        let angle = angle_sq.sqrt();
        (angle.sin() / angle, (1.0 - angle.cos()) / angle_sq)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Frobenius norm of `RᵀR - I`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}

// Inverse of the right-trivialized differential of exp, truncated after the
// second commutator. The next term is O(|theta|^4 |w|), so the local error
// stays within the fourth-order budget.
#[inline]
fn dexp_inv(theta: &Vector3<f64>, w: &Vector3<f64>) -> Vector3<f64> {
    let c1 = theta.cross(w);
    w + c1 * 0.5 + theta.cross(&c1) / 12.0
}

/// A point on `SO(3) × Rⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramedState<const N: usize> {
    pub frame: Matrix3<f64>,
    pub vector: SVector<f64, N>,
}

/// Derivative returned by the right-hand side: the body angular rate `u`
/// (so that `R' = R [u]`) and the derivative of the Euclidean part.
pub type FramedDerivative<const N: usize> = (Vector3<f64>, SVector<f64, N>);

/// One RKMK4 step of length `ds` starting at arc length `s`.
pub fn integrate_step<const N: usize, F>(
    s: f64,
    state: &FramedState<N>,
    ds: f64,
    rhs: &mut F,
) -> Result<FramedState<N>, IntegrationError>
where
    F: FnMut(f64, &Matrix3<f64>, &SVector<f64, N>) -> Result<FramedDerivative<N>, IntegrationError>,
{
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(IntegrationError::BadStep(ds));
    }
    let r0 = &state.frame;
    let y0 = &state.vector;
    let mut eval = |s: f64, r: &Matrix3<f64>, y: &SVector<f64, N>| {
        let (w, dy) = rhs(s, r, y)?;
        if !w.iter().all(|x| x.is_finite()) || !dy.iter().all(|x| x.is_finite()) {
            return Err(IntegrationError::NonFinite { s });
        }
        Ok((w, dy))
    };

    let (w1, d1) = eval(s, r0, y0)?;
    let big1 = w1 * ds;
    let k1 = d1 * ds;

    let th2 = big1 * 0.5;
    let (w2, d2) = eval(s + 0.5 * ds, &(r0 * exp_so3(&th2)), &(y0 + k1 * 0.5))?;
    let big2 = dexp_inv(&th2, &w2) * ds;
    let k2 = d2 * ds;

    let th3 = big2 * 0.5;
    let (w3, d3) = eval(s + 0.5 * ds, &(r0 * exp_so3(&th3)), &(y0 + k2 * 0.5))?;
    let big3 = dexp_inv(&th3, &w3) * ds;
    let k3 = d3 * ds;

    let th4 = big3;
    let (w4, d4) = eval(s + ds, &(r0 * exp_so3(&th4)), &(y0 + k3))?;
    let big4 = dexp_inv(&th4, &w4) * ds;
    let k4 = d4 * ds;

    let theta = (big1 + big2 * 2.0 + big3 * 2.0 + big4) / 6.0;
    Ok(FramedState {
        frame: r0 * exp_so3(&theta),
        vector: y0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) / 6.0,
    })
}

/// Arc-length grid over `[0, l2]` with a mandatory node at the outer
/// termination `l1`. Each side is split into equal steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcGrid {
    samples: Vec<f64>,
    breakpoint: usize,
}

impl ArcGrid {
    /// `overlap_steps` intervals on `[0, l1]`, `distal_steps` on `[l1, l2]`.
    /// A zero-length side gets no intervals.
    pub fn new(l1: f64, l2: f64, overlap_steps: usize, distal_steps: usize) -> Self {
        assert!(l1 >= 0.0 && l2 >= l1, "arc grid needs 0 <= l1 <= l2");
        let mut samples = vec![0.0];
        let n1 = if l1 > 0.0 { overlap_steps.max(1) } else { 0 };
        for k in 1..=n1 {
            samples.push(if k == n1 { l1 } else { l1 * k as f64 / n1 as f64 });
        }
        let breakpoint = samples.len() - 1;
        let n2 = if l2 > l1 { distal_steps.max(1) } else { 0 };
        for k in 1..=n2 {
            samples.push(if k == n2 {
                l2
            } else {
                l1 + (l2 - l1) * k as f64 / n2 as f64
            });
        }
        Self {
            samples,
            breakpoint,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Index of the node sitting exactly at `l1`.
    pub fn breakpoint_index(&self) -> usize {
        self.breakpoint
    }

    pub fn overlap(&self) -> &[f64] {
        &self.samples[..=self.breakpoint]
    }

    pub fn distal(&self) -> &[f64] {
        &self.samples[self.breakpoint..]
    }
}

/// Integrates over consecutive grid nodes, calling `visit` at every node
/// (including the first).
pub fn integrate_over<const N: usize, F, V>(
    nodes: &[f64],
    start: FramedState<N>,
    rhs: &mut F,
    mut visit: V,
) -> Result<FramedState<N>, IntegrationError>
where
    F: FnMut(f64, &Matrix3<f64>, &SVector<f64, N>) -> Result<FramedDerivative<N>, IntegrationError>,
    V: FnMut(f64, &FramedState<N>),
{
    let mut state = start;
    if let Some(&s0) = nodes.first() {
        visit(s0, &state);
    }
    for pair in nodes.windows(2) {
        state = integrate_step(pair[0], &state, pair[1] - pair[0], rhs)?;
        visit(pair[1], &state);
    }
    Ok(state)
}
