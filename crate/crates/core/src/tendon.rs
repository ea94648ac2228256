//! Tendon wrenches on the rod.
//!
//! A tendon held at a fixed body-frame offset `r` pulls on the rod with a
//! line load wherever its path curves, and with a point load where it is
//! anchored. All quantities here are expressed in the body frame of the rod
//! that carries the tendon.

use crate::rod::skew;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tendon path derivatives below this norm have no usable direction.
pub const MIN_PATH_SPEED: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("tendon path is degenerate (|p'| = {speed})")]
pub struct DegeneratePath {
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TendonOwner {
    Outer,
    Inner,
}

/// A tendon routed parallel to the backbone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TendonRoute {
    /// Body-frame offset `[x_d1, y_d2, 0]`.
    pub offset: Vector3<f64>,
    /// Tension, N.
    pub tension: f64,
    pub owner: TendonOwner,
    /// Arc length where the tendon is anchored.
    pub termination: f64,
}

impl TendonRoute {
    pub fn new(owner: TendonOwner, x_d1: f64, y_d2: f64, tension: f64, termination: f64) -> Self {
        Self {
            offset: Vector3::new(x_d1, y_d2, 0.0),
            tension,
            owner,
            termination,
        }
    }

    pub fn with_tension(&self, tension: f64) -> Self {
        Self { tension, ..*self }
    }
}

/// Line load per unit arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributedWrench {
    /// N/mm
    pub force: Vector3<f64>,
    /// N·mm/mm
    pub moment: Vector3<f64>,
}

impl DistributedWrench {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
        }
    }
}

impl std::ops::Add for DistributedWrench {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            force: self.force + rhs.force,
            moment: self.moment + rhs.moment,
        }
    }
}

/// `ṗ = [u] r + v` and `p̈ = [u] ṗ - [r] u̇ + v̇`.
pub fn tendon_path_derivatives(
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    u_dot: &Vector3<f64>,
    v_dot: &Vector3<f64>,
    offset: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let p_dot = u.cross(offset) + v;
    let p_ddot = u.cross(&p_dot) - offset.cross(u_dot) + v_dot;
    (p_dot, p_ddot)
}

/// `[ṗ]² / |ṗ|³`, the projector-like operator shared by the line-load terms.
pub(crate) fn curvature_operator(p_dot: &Vector3<f64>) -> Result<Matrix3<f64>, DegeneratePath> {
    let speed = p_dot.norm();
    if !(speed > MIN_PATH_SPEED) {
        return Err(DegeneratePath { speed });
    }
    let k = skew(p_dot);
    Ok(k * k / (speed * speed * speed))
}

/// Line load from one tendon: `f = -λ [ṗ]² p̈ / |ṗ|³`, applied at the
/// tendon offset, so its moment is `r × f`.
pub fn distributed_wrench(
    route: &TendonRoute,
    p_dot: &Vector3<f64>,
    p_ddot: &Vector3<f64>,
) -> Result<DistributedWrench, DegeneratePath> {
    let op = curvature_operator(p_dot)?;
    let force = -(op * p_ddot) * route.tension;
    Ok(DistributedWrench {
        force,
        moment: route.offset.cross(&force),
    })
}

/// Point load at the anchor: `F = -λ ṗ / |ṗ|`, `M = r × F`.
pub fn terminal_wrench(
    route: &TendonRoute,
    p_dot: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>), DegeneratePath> {
    let speed = p_dot.norm();
    if !(speed > MIN_PATH_SPEED) {
        return Err(DegeneratePath { speed });
    }
    let force = -p_dot * (route.tension / speed);
    Ok((force, route.offset.cross(&force)))
}

/// Internal loads just proximal of an anchor: `n(l⁻) = n(l⁺) + F`, `m(l⁻) = m(l⁺) + M`.
pub fn apply_termination_jump(
    n_after: &Vector3<f64>,
    m_after: &Vector3<f64>,
    force: &Vector3<f64>,
    moment: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    (n_after + force, m_after + moment)
}
