//! Cross-section properties of the two robots.
//!
//! The outer robot is a nitinol tube with a unidirectional asymmetric notch:
//! a cut of depth `d` leaves only the part of the annulus lying beyond a chord
//! at distance `d - r_o` from the tube axis. That region is the difference of
//! two circular segments (outer wall minus inner wall), which gives closed
//! forms for its area, centroid (the neutral axis) and second moment.
//!
//! The inner robot bends on two nitinol spine rods, so only the rods
//! contribute to its section.
//!
//! Units: millimetres, newtons, megapascals. `E * I` is then directly N·mm².

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("notch depth {depth} mm is incompatible with radius {radius} mm (acos argument {arg})")]
    NotchDomain { depth: f64, radius: f64, arg: f64 },
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("inconsistent geometry: {0}")]
    Inconsistent(String),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Design parameters of the notched outer tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterTubeSpec {
    /// Notch depth `d`, measured from the tube surface.
    pub notch_depth: f64,
    /// Notch spacing `h`.
    pub notch_spacing: f64,
    /// Notch width.
    pub notch_width: f64,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub tendon_radius: f64,
    /// MPa.
    pub elastic_modulus: f64,
    /// MPa.
    pub shear_modulus: f64,
}

impl OuterTubeSpec {
    /// Checks the invariants of a manufacturable notched tube: positive lengths,
    /// `r_i < r_o`, and a notch that cuts past the centerline (`r_o < d < 2 r_o`).
    pub fn validate(&self) -> Result<(), GeometryError> {
        positive("notch_depth", self.notch_depth)?;
        positive("notch_spacing", self.notch_spacing)?;
        positive("notch_width", self.notch_width)?;
        positive("outer_radius", self.outer_radius)?;
        positive("inner_radius", self.inner_radius)?;
        positive("tendon_radius", self.tendon_radius)?;
        positive("elastic_modulus", self.elastic_modulus)?;
        positive("shear_modulus", self.shear_modulus)?;
        if self.inner_radius >= self.outer_radius {
            return Err(GeometryError::Inconsistent(format!(
                "inner_radius {} must be below outer_radius {}",
                self.inner_radius, self.outer_radius
            )));
        }
        if !(self.notch_depth > self.outer_radius && self.notch_depth < 2.0 * self.outer_radius) {
            return Err(GeometryError::Inconsistent(format!(
                "notch_depth {} must lie strictly between outer_radius {} and its double",
                self.notch_depth, self.outer_radius
            )));
        }
        Ok(())
    }

    /// Signed distance from the tube axis to the notch chord.
    pub fn chord_offset(&self) -> f64 {
        self.notch_depth - self.outer_radius
    }

    /// Multiplies every length by `k`; moduli are unchanged.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            notch_depth: self.notch_depth * k,
            notch_spacing: self.notch_spacing * k,
            notch_width: self.notch_width * k,
            outer_radius: self.outer_radius * k,
            inner_radius: self.inner_radius * k,
            tendon_radius: self.tendon_radius * k,
            ..*self
        }
    }
}

/// Design parameters of the 3D-printed inner robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerRobotSpec {
    /// Radius of each of the two nitinol spine rods.
    pub rod_radius: f64,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub tendon_radius: f64,
    /// Distance from each tendon to the spine rods.
    pub tendon_arm: f64,
    /// MPa.
    pub elastic_modulus: f64,
    /// MPa.
    pub shear_modulus: f64,
}

impl InnerRobotSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        positive("rod_radius", self.rod_radius)?;
        positive("outer_radius", self.outer_radius)?;
        positive("inner_radius", self.inner_radius)?;
        positive("tendon_radius", self.tendon_radius)?;
        positive("tendon_arm", self.tendon_arm)?;
        positive("elastic_modulus", self.elastic_modulus)?;
        positive("shear_modulus", self.shear_modulus)?;
        if self.inner_radius >= self.outer_radius {
            return Err(GeometryError::Inconsistent(format!(
                "inner_radius {} must be below outer_radius {}",
                self.inner_radius, self.outer_radius
            )));
        }
        Ok(())
    }
}

/// Constitutive data of one robot's cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    /// mm²
    pub area: f64,
    /// mm⁴, bending about d1
    pub second_moment_d1: f64,
    /// mm⁴, bending about d2
    pub second_moment_d2: f64,
    /// mm⁴
    pub polar_moment: f64,
    /// Offset of the bending-neutral axis from the geometric tube axis (0 for the inner robot).
    pub neutral_axis_offset: f64,
    /// Tendon moment arm about the neutral axis.
    pub tendon_arm: f64,
    /// diag(GA, GA, EA), N.
    pub k_se: Matrix3<f64>,
    /// diag(E I_d1, E I_d2, G J), N·mm².
    pub k_bt: Matrix3<f64>,
}

impl CrossSection {
    /// Returns a copy whose stiffness matrices are multiplied by `factor`.
    pub fn stiffened(&self, factor: f64) -> Self {
        Self {
            k_se: self.k_se * factor,
            k_bt: self.k_bt * factor,
            ..*self
        }
    }
}

/// The two circular segments bounding the remaining (uncut) region of the
/// notched tube, and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentAreas {
    pub outer_segment: f64,
    pub inner_segment: f64,
    /// Remaining material, `outer_segment - inner_segment`.
    pub area: f64,
    /// Central angle subtended by the outer wall.
    pub outer_angle: f64,
    /// Central angle subtended by the inner wall.
    pub inner_angle: f64,
}

fn positive(name: &'static str, value: f64) -> Result<(), GeometryError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonPositive { name, value })
    }
}

fn central_angle(depth: f64, chord: f64, radius: f64) -> Result<f64, GeometryError> {
    let arg = chord / radius;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(GeometryError::NotchDomain { depth, radius, arg });
    }
    Ok(2.0 * arg.acos())
}

fn segment_area(radius: f64, angle: f64) -> f64 {
    0.5 * radius * radius * (angle - angle.sin())
}

pub fn outer_segment_areas(spec: &OuterTubeSpec) -> Result<SegmentAreas, GeometryError> {
    let c = spec.chord_offset();
    let outer_angle = central_angle(spec.notch_depth, c, spec.outer_radius)?;
    // A solid rod (no lumen) has no inner segment to subtract.
    let inner_angle = if spec.inner_radius == 0.0 {
        0.0
    } else {
        central_angle(spec.notch_depth, c, spec.inner_radius)?
    };
    let outer_segment = segment_area(spec.outer_radius, outer_angle);
    let inner_segment = segment_area(spec.inner_radius, inner_angle);
    let area = outer_segment - inner_segment;
    if !(area > 0.0) {
        return Err(GeometryError::Inconsistent(format!(
            "notched section has non-positive area {area}"
        )));
    }
    Ok(SegmentAreas {
        outer_segment,
        inner_segment,
        area,
        outer_angle,
        inner_angle,
    })
}

// Distance from the circle center to the centroid of a circular segment,
// 4 r sin³(φ/2) / (3 (φ - sin φ)).
fn segment_centroid(radius: f64, angle: f64) -> Result<f64, GeometryError> {
    let denom = angle - angle.sin();
    if denom <= f64::EPSILON {
        return Err(GeometryError::Degenerate("sliver segment, centroid undefined"));
    }
    Ok(4.0 * radius * (0.5 * angle).sin().powi(3) / (3.0 * denom))
}

/// Offset of the neutral axis (the centroid of the remaining material) from the tube axis.
pub fn outer_neutral_axis(spec: &OuterTubeSpec) -> Result<f64, GeometryError> {
    let seg = outer_segment_areas(spec)?;
    if spec.inner_radius > 0.0 && spec.notch_depth <= spec.outer_radius - spec.inner_radius {
        // The chord misses the lumen entirely; the closed form no longer applies.
        return Err(GeometryError::Degenerate("notch does not reach the lumen"));
    }
    let outer = seg.outer_segment * segment_centroid(spec.outer_radius, seg.outer_angle)?;
    let inner = if seg.inner_segment == 0.0 {
        0.0
    } else {
        seg.inner_segment * segment_centroid(spec.inner_radius, seg.inner_angle)?
    };
    let d_na = (outer - inner) / seg.area;
    if !d_na.is_finite() {
        return Err(GeometryError::Degenerate("neutral axis is not finite"));
    }
    Ok(d_na)
}

/// Second moments of the notched section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    /// About the axis through the tube center, parallel to the notch chord.
    pub about_center: f64,
    /// About the parallel axis through the centroid; the bending stiffness uses this one.
    pub about_centroid: f64,
}

fn segment_second_moment(radius: f64, angle: f64) -> f64 {
    let half = (0.5 * angle).sin();
    radius.powi(4) / 8.0 * (angle - angle.sin() + 2.0 * angle.sin() * half * half)
}

pub fn outer_second_moment(spec: &OuterTubeSpec) -> Result<SecondMoments, GeometryError> {
    let seg = outer_segment_areas(spec)?;
    let d_na = outer_neutral_axis(spec)?;
    let about_center = segment_second_moment(spec.outer_radius, seg.outer_angle)
        - segment_second_moment(spec.inner_radius, seg.inner_angle);
    let about_centroid = about_center - seg.area * d_na * d_na;
    if !(about_centroid > 0.0) {
        return Err(GeometryError::Inconsistent(format!(
            "centroidal second moment {about_centroid} is not positive"
        )));
    }
    Ok(SecondMoments {
        about_center,
        about_centroid,
    })
}

/// Tendon moment arm about the neutral axis. The tendon rides on the lumen
/// wall on the notched side.
pub fn outer_moment_arm(spec: &OuterTubeSpec, d_na: f64) -> f64 {
    d_na + spec.inner_radius - spec.tendon_radius
}

/// Builds `K_se = diag(GA, GA, EA)` and `K_bt = diag(E I_d1, E I_d2, G J)`.
pub fn build_stiffness(
    area: f64,
    second_moment_d1: f64,
    second_moment_d2: f64,
    polar_moment: f64,
    elastic_modulus: f64,
    shear_modulus: f64,
) -> Result<(Matrix3<f64>, Matrix3<f64>), GeometryError> {
    positive("area", area)?;
    positive("second_moment_d1", second_moment_d1)?;
    positive("second_moment_d2", second_moment_d2)?;
    positive("polar_moment", polar_moment)?;
    positive("elastic_modulus", elastic_modulus)?;
    positive("shear_modulus", shear_modulus)?;
    let ga = shear_modulus * area;
    let k_se = Matrix3::from_diagonal(&nalgebra::Vector3::new(ga, ga, elastic_modulus * area));
    let k_bt = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        elastic_modulus * second_moment_d1,
        elastic_modulus * second_moment_d2,
        shear_modulus * polar_moment,
    ));
    Ok((k_se, k_bt))
}

/// Full section of the outer robot. `arm_override` replaces the computed
/// tendon moment arm when set.
pub fn outer_section(
    spec: &OuterTubeSpec,
    arm_override: Option<f64>,
) -> Result<CrossSection, GeometryError> {
    let seg = outer_segment_areas(spec)?;
    let d_na = outer_neutral_axis(spec)?;
    let moments = outer_second_moment(spec)?;
    let i1 = moments.about_centroid;
    // Isotropic bending; J = I_d1 + I_d2.
    let polar = 2.0 * i1;
    let (k_se, k_bt) = build_stiffness(
        seg.area,
        i1,
        i1,
        polar,
        spec.elastic_modulus,
        spec.shear_modulus,
    )?;
    Ok(CrossSection {
        area: seg.area,
        second_moment_d1: i1,
        second_moment_d2: i1,
        polar_moment: polar,
        neutral_axis_offset: d_na,
        tendon_arm: arm_override.unwrap_or_else(|| outer_moment_arm(spec, d_na)),
        k_se,
        k_bt,
    })
}

/// Section of the inner robot: the two spine rods, `A = 2π r²`, `I = π r⁴ / 2`.
pub fn inner_section(spec: &InnerRobotSpec) -> Result<CrossSection, GeometryError> {
    let r = spec.rod_radius;
    if !(r > 0.0) {
        return Err(GeometryError::NonPositive {
            name: "rod_radius",
            value: r,
        });
    }
    let area = 2.0 * PI * r * r;
    let i2 = PI * r.powi(4) / 2.0;
    let polar = 2.0 * i2;
    let (k_se, k_bt) = build_stiffness(
        area,
        i2,
        i2,
        polar,
        spec.elastic_modulus,
        spec.shear_modulus,
    )?;
    Ok(CrossSection {
        area,
        second_moment_d1: i2,
        second_moment_d2: i2,
        polar_moment: polar,
        neutral_axis_offset: 0.0,
        tendon_arm: spec.tendon_arm,
        k_se,
        k_bt,
    })
}
