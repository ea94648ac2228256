//! Robot parameters, actuation inputs and the experiment configurations.
//!
//! Parameter documents are TOML with every dimensional value written as a
//! string carrying its unit, e.g. `outer_radius = "1.97 mm"` or
//! `elastic_modulus = "84 GPa"`. Values are converted to millimetres,
//! newtons and megapascals on load.

use crate::coupled::{OverlapPair, Tube};
use crate::geometry::{inner_section, outer_section, CrossSection, GeometryError, InnerRobotSpec, OuterTubeSpec};
use crate::rod::orthonormality_error;
use crate::shooting::RobotModel;
use crate::tendon::{TendonOwner, TendonRoute};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const PARAMS_SCHEMA: &str = "tacter-params/1";
pub const SCHEDULE_SCHEMA: &str = "tacter-schedule/1";

/// The prototype's dimensions and materials, with placeholder lengths.
pub const PROTOTYPE_DOCUMENT: &str = include_str!("../data/prototype.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Unit { field: String, message: String },
    #[error("{field}: {message}")]
    Invariant { field: String, message: String },
    #[error("tendon routing angle {gamma} rad makes sin(2γ) vanish")]
    UndefinedRouting { gamma: f64 },
}

impl ConfigError {
    fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invariant {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    Length,
    Modulus,
    Force,
}

fn parse_quantity(field: &str, text: &str, kind: Quantity) -> Result<f64, ConfigError> {
    let err = |message: String| ConfigError::Unit {
        field: field.to_string(),
        message,
    };
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_whitespace() || (c.is_alphabetic() && c != 'e' && c != 'E') || c == 'µ')
        .ok_or_else(|| err(format!("`{text}` has no unit")))?;
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| err(format!("`{number}` is not a number")))?;
    if !value.is_finite() {
        return Err(err(format!("`{number}` is not finite")));
    }
    let unit = unit.trim();
    let scale = match (kind, unit) {
        (Quantity::Length, "mm") => 1.0,
        (Quantity::Length, "um" | "µm") => 1e-3,
        (Quantity::Length, "cm") => 10.0,
        (Quantity::Length, "m") => 1e3,
        (Quantity::Modulus, "MPa") => 1.0,
        (Quantity::Modulus, "GPa") => 1e3,
        (Quantity::Modulus, "kPa") => 1e-3,
        (Quantity::Modulus, "Pa") => 1e-6,
        (Quantity::Force, "N") => 1.0,
        (Quantity::Force, "mN") => 1e-3,
        _ => {
            let expected = match kind {
                Quantity::Length => "mm, um, cm or m",
                Quantity::Modulus => "Pa, kPa, MPa or GPa",
                Quantity::Force => "N or mN",
            };
            return Err(err(format!("unit `{unit}` not accepted here (expected {expected})")));
        }
    };
    Ok(value * scale)
}

/// Which side of the inner robot carries the tendon called "left".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeftSide {
    #[serde(rename = "+d2")]
    PlusD2,
    #[serde(rename = "-d2")]
    MinusD2,
}

impl LeftSide {
    fn sign(self) -> f64 {
        match self {
            LeftSide::PlusD2 => 1.0,
            LeftSide::MinusD2 => -1.0,
        }
    }
}

/// Fully resolved robot description.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub outer: OuterTubeSpec,
    pub inner: InnerRobotSpec,
    /// Replaces the computed outer tendon moment arm.
    pub outer_moment_arm: Option<f64>,
    /// Informational; the continuum model does not resolve single notches.
    pub notch_count: Option<u32>,
    /// Outer robot length `l1`.
    pub outer_length: f64,
    pub translation_range: f64,
    /// Inner-robot length that always protrudes beyond the outer tube.
    pub distal_tip: f64,
    pub left_side: LeftSide,
    /// Outer tendon tension in the bent (OB) configurations.
    pub bent_outer_tension: f64,
    /// Final inner tension of the standard ramps.
    pub inner_max_tension: f64,
    /// Steps of the standard ramps.
    pub steps: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ParamsDocument {
    schema: String,
    outer: OuterDocument,
    inner: InnerDocument,
    lengths: LengthsDocument,
    tendons: TendonsDocument,
    protocol: ProtocolDocument,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OuterDocument {
    notch_depth: String,
    notch_spacing: String,
    notch_width: String,
    outer_radius: String,
    inner_radius: String,
    tendon_radius: String,
    elastic_modulus: String,
    shear_modulus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moment_arm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notch_count: Option<u32>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct InnerDocument {
    rod_radius: String,
    outer_radius: String,
    inner_radius: String,
    tendon_radius: String,
    tendon_arm: String,
    elastic_modulus: String,
    shear_modulus: String,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct LengthsDocument {
    outer: String,
    translation_range: String,
    distal_tip: String,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TendonsDocument {
    left_side: LeftSide,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ProtocolDocument {
    bent_outer_tension: String,
    inner_max_tension: String,
    steps: usize,
}

fn geometry_error(section: &str, e: GeometryError) -> ConfigError {
    let field = match &e {
        GeometryError::NonPositive { name, .. } => format!("{section}.{name}"),
        _ => section.to_string(),
    };
    ConfigError::invariant(field, e.to_string())
}

/// Parses and validates a parameter document.
pub fn load_params(document: &str) -> Result<RobotParams, ConfigError> {
    let doc: ParamsDocument = toml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if doc.schema != PARAMS_SCHEMA {
        return Err(ConfigError::invariant(
            "schema",
            format!("expected `{PARAMS_SCHEMA}`, found `{}`", doc.schema),
        ));
    }
    let len = |f: &str, t: &str| parse_quantity(f, t, Quantity::Length);
    let modulus = |f: &str, t: &str| parse_quantity(f, t, Quantity::Modulus);
    let force = |f: &str, t: &str| parse_quantity(f, t, Quantity::Force);
    let o = &doc.outer;
    let outer = OuterTubeSpec {
        notch_depth: len("outer.notch_depth", &o.notch_depth)?,
        notch_spacing: len("outer.notch_spacing", &o.notch_spacing)?,
        notch_width: len("outer.notch_width", &o.notch_width)?,
        outer_radius: len("outer.outer_radius", &o.outer_radius)?,
        inner_radius: len("outer.inner_radius", &o.inner_radius)?,
        tendon_radius: len("outer.tendon_radius", &o.tendon_radius)?,
        elastic_modulus: modulus("outer.elastic_modulus", &o.elastic_modulus)?,
        shear_modulus: modulus("outer.shear_modulus", &o.shear_modulus)?,
    };
    let outer_moment_arm = o
        .moment_arm
        .as_deref()
        .map(|t| len("outer.moment_arm", t))
        .transpose()?;
    let i = &doc.inner;
    let inner = InnerRobotSpec {
        rod_radius: len("inner.rod_radius", &i.rod_radius)?,
        outer_radius: len("inner.outer_radius", &i.outer_radius)?,
        inner_radius: len("inner.inner_radius", &i.inner_radius)?,
        tendon_radius: len("inner.tendon_radius", &i.tendon_radius)?,
        tendon_arm: len("inner.tendon_arm", &i.tendon_arm)?,
        elastic_modulus: modulus("inner.elastic_modulus", &i.elastic_modulus)?,
        shear_modulus: modulus("inner.shear_modulus", &i.shear_modulus)?,
    };
    let params = RobotParams {
        outer,
        inner,
        outer_moment_arm,
        notch_count: o.notch_count,
        outer_length: len("lengths.outer", &doc.lengths.outer)?,
        translation_range: len("lengths.translation_range", &doc.lengths.translation_range)?,
        distal_tip: len("lengths.distal_tip", &doc.lengths.distal_tip)?,
        left_side: doc.tendons.left_side,
        bent_outer_tension: force("protocol.bent_outer_tension", &doc.protocol.bent_outer_tension)?,
        inner_max_tension: force("protocol.inner_max_tension", &doc.protocol.inner_max_tension)?,
        steps: doc.protocol.steps,
    };
    params.validate()?;
    Ok(params)
}

pub fn load_params_file(path: &Path) -> Result<RobotParams, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_params(&text)
}

fn mm(x: f64) -> String {
    format!("{x} mm")
}

fn mpa(x: f64) -> String {
    format!("{x} MPa")
}

fn newton(x: f64) -> String {
    format!("{x} N")
}

impl RobotParams {
    /// The bundled prototype parameters.
    pub fn prototype() -> Self {
        load_params(PROTOTYPE_DOCUMENT).expect("bundled parameter document is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.outer.validate().map_err(|e| geometry_error("outer", e))?;
        self.inner.validate().map_err(|e| geometry_error("inner", e))?;
        if let Some(arm) = self.outer_moment_arm {
            if !(arm > 0.0) {
                return Err(ConfigError::invariant("outer.moment_arm", "must be positive"));
            }
        }
        if !(self.outer_length > 0.0) {
            return Err(ConfigError::invariant("lengths.outer", "must be positive"));
        }
        if !(self.translation_range >= 0.0) {
            return Err(ConfigError::invariant("lengths.translation_range", "must be non-negative"));
        }
        if !(self.distal_tip >= 0.0) {
            return Err(ConfigError::invariant("lengths.distal_tip", "must be non-negative"));
        }
        if !(self.inner_length() > self.outer_length) {
            return Err(ConfigError::invariant(
                "lengths",
                "inner robot must be longer than the outer robot",
            ));
        }
        if !(self.bent_outer_tension >= 0.0) {
            return Err(ConfigError::invariant("protocol.bent_outer_tension", "must be non-negative"));
        }
        if !(self.inner_max_tension >= 0.0) {
            return Err(ConfigError::invariant("protocol.inner_max_tension", "must be non-negative"));
        }
        if self.steps == 0 {
            return Err(ConfigError::invariant("protocol.steps", "must be at least 1"));
        }
        self.outer_section()?;
        self.inner_section()?;
        Ok(())
    }

    /// Full inner-robot length `l2_max`.
    pub fn inner_length(&self) -> f64 {
        self.outer_length + self.translation_range + self.distal_tip
    }

    pub fn outer_section(&self) -> Result<CrossSection, ConfigError> {
        outer_section(&self.outer, self.outer_moment_arm).map_err(|e| geometry_error("outer", e))
    }

    pub fn inner_section(&self) -> Result<CrossSection, ConfigError> {
        inner_section(&self.inner).map_err(|e| geometry_error("inner", e))
    }

    /// Writes the parameters back as a document that [`load_params`] reads
    /// to an identical value.
    pub fn to_document(&self) -> String {
        let o = &self.outer;
        let i = &self.inner;
        let doc = ParamsDocument {
            schema: PARAMS_SCHEMA.into(),
            outer: OuterDocument {
                notch_depth: mm(o.notch_depth),
                notch_spacing: mm(o.notch_spacing),
                notch_width: mm(o.notch_width),
                outer_radius: mm(o.outer_radius),
                inner_radius: mm(o.inner_radius),
                tendon_radius: mm(o.tendon_radius),
                elastic_modulus: mpa(o.elastic_modulus),
                shear_modulus: mpa(o.shear_modulus),
                moment_arm: self.outer_moment_arm.map(mm),
                notch_count: self.notch_count,
            },
            inner: InnerDocument {
                rod_radius: mm(i.rod_radius),
                outer_radius: mm(i.outer_radius),
                inner_radius: mm(i.inner_radius),
                tendon_radius: mm(i.tendon_radius),
                tendon_arm: mm(i.tendon_arm),
                elastic_modulus: mpa(i.elastic_modulus),
                shear_modulus: mpa(i.shear_modulus),
            },
            lengths: LengthsDocument {
                outer: mm(self.outer_length),
                translation_range: mm(self.translation_range),
                distal_tip: mm(self.distal_tip),
            },
            tendons: TendonsDocument {
                left_side: self.left_side,
            },
            protocol: ProtocolDocument {
                bent_outer_tension: newton(self.bent_outer_tension),
                inner_max_tension: newton(self.inner_max_tension),
                steps: self.steps,
            },
        };
        toml::to_string(&doc).expect("parameter document serializes")
    }

    /// Builds the mechanical model for one actuation input.
    pub fn model(&self, input: &ActuationInput) -> Result<RobotModel, ConfigError> {
        input.validate(self)?;
        let inner_section = self.inner_section()?;
        let arm2 = self.inner.tendon_arm;
        let side = self.left_side.sign();
        let (l1, l2) = if input.outer_present {
            (self.outer_length, self.outer_length + input.translation + self.distal_tip)
        } else {
            (0.0, self.inner_length())
        };
        let inner = Tube {
            section: inner_section,
            tendons: vec![
                TendonRoute::new(TendonOwner::Inner, 0.0, side * arm2, input.inner_left_tension, l2),
                TendonRoute::new(TendonOwner::Inner, 0.0, -side * arm2, input.inner_right_tension, l2),
            ],
        };
        let overlap = if input.outer_present {
            let section = self.outer_section()?;
            let arm1 = section.tendon_arm;
            Some(OverlapPair {
                outer: Tube {
                    section,
                    // The outer tendon runs on the notched side.
                    tendons: vec![TendonRoute::new(TendonOwner::Outer, 0.0, -arm1, input.outer_tension, l1)],
                },
                inner: inner.clone(),
            })
        } else {
            None
        };
        Ok(RobotModel {
            overlap,
            inner,
            l1,
            l2,
            base_rotation: input.base_rotation,
            base_position: input.base_position,
            theta0: input.theta0,
        })
    }
}

/// Tensions, translation and base pose for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationInput {
    pub outer_tension: f64,
    pub inner_left_tension: f64,
    pub inner_right_tension: f64,
    /// Inner-robot translation beyond the fully sheathed position, mm.
    pub translation: f64,
    /// Base twist of the inner robot relative to the outer one, rad.
    pub theta0: f64,
    pub base_rotation: Matrix3<f64>,
    pub base_position: Vector3<f64>,
    /// `false` models the inner robot on its own over its full length.
    pub outer_present: bool,
}

impl Default for ActuationInput {
    fn default() -> Self {
        Self {
            outer_tension: 0.0,
            inner_left_tension: 0.0,
            inner_right_tension: 0.0,
            translation: 0.0,
            theta0: 0.0,
            base_rotation: Matrix3::identity(),
            base_position: Vector3::zeros(),
            outer_present: true,
        }
    }
}

impl ActuationInput {
    pub fn validate(&self, params: &RobotParams) -> Result<(), ConfigError> {
        for (field, t) in [
            ("outer_tension", self.outer_tension),
            ("inner_left_tension", self.inner_left_tension),
            ("inner_right_tension", self.inner_right_tension),
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ConfigError::invariant(field, format!("tension {t} must be finite and non-negative")));
            }
        }
        if self.outer_present
            && !(self.translation >= 0.0 && self.translation <= params.translation_range)
        {
            return Err(ConfigError::invariant(
                "translation",
                format!(
                    "{} mm is outside [0, {}] mm",
                    self.translation, params.translation_range
                ),
            ));
        }
        if !self.theta0.is_finite() {
            return Err(ConfigError::invariant("theta0", "must be finite"));
        }
        if !self.base_position.iter().all(|x| x.is_finite()) {
            return Err(ConfigError::invariant("base_position", "must be finite"));
        }
        if !(orthonormality_error(&self.base_rotation) < 1e-9 && self.base_rotation.determinant() > 0.0) {
            return Err(ConfigError::invariant("base_rotation", "must be a rotation matrix"));
        }
        Ok(())
    }

    /// The same input with every tension scaled by `k`.
    pub fn scaled_tensions(&self, k: f64) -> Self {
        Self {
            outer_tension: self.outer_tension * k,
            inner_left_tension: self.inner_left_tension * k,
            inner_right_tension: self.inner_right_tension * k,
            ..*self
        }
    }

    /// Linear blend of the tensions of `self` and `other` (`t = 0` gives `self`);
    /// everything else is taken from `other`.
    pub fn blend_tensions(&self, other: &Self, t: f64) -> Self {
        let mix = |a: f64, b: f64| a + (b - a) * t;
        Self {
            outer_tension: mix(self.outer_tension, other.outer_tension),
            inner_left_tension: mix(self.inner_left_tension, other.inner_left_tension),
            inner_right_tension: mix(self.inner_right_tension, other.inner_right_tension),
            ..*other
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OuterState {
    Straight,
    Bent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TranslationState {
    Sheathed,
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// One of the thirteen experiment configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfigurationLabel {
    Sheathed {
        outer: OuterState,
        translation: TranslationState,
        side: Side,
    },
    /// The inner robot without the outer tube, actuated by its left tendon.
    InnerOnly,
}

impl ConfigurationLabel {
    pub fn all() -> Vec<ConfigurationLabel> {
        let mut labels = Vec::with_capacity(13);
        for outer in [OuterState::Straight, OuterState::Bent] {
            for translation in [TranslationState::Sheathed, TranslationState::Half, TranslationState::Full] {
                for side in [Side::Left, Side::Right] {
                    labels.push(ConfigurationLabel::Sheathed {
                        outer,
                        translation,
                        side,
                    });
                }
            }
        }
        labels.push(ConfigurationLabel::InnerOnly);
        labels
    }

    /// Inner translation used in the experiments, mm.
    pub fn translation(&self) -> f64 {
        match self {
            ConfigurationLabel::Sheathed {
                outer, translation, ..
            } => match (outer, translation) {
                (_, TranslationState::Sheathed) => 0.0,
                (OuterState::Straight, TranslationState::Half) => 15.90,
                (OuterState::Straight, TranslationState::Full) => 30.22,
                (OuterState::Bent, TranslationState::Half) => 15.28,
                (OuterState::Bent, TranslationState::Full) => 30.36,
            },
            ConfigurationLabel::InnerOnly => 0.0,
        }
    }

    /// The actuated inner tendon.
    pub fn side(&self) -> Side {
        match self {
            ConfigurationLabel::Sheathed { side, .. } => *side,
            ConfigurationLabel::InnerOnly => Side::Left,
        }
    }

    /// Error-report cell, e.g. `OS-IN`; `IO` for the inner robot alone.
    pub fn cell(&self) -> String {
        match self {
            ConfigurationLabel::Sheathed {
                outer, translation, ..
            } => format!("{}-{}", outer_code(*outer), translation_code(*translation)),
            ConfigurationLabel::InnerOnly => "IO".into(),
        }
    }
}

fn outer_code(o: OuterState) -> &'static str {
    match o {
        OuterState::Straight => "OS",
        OuterState::Bent => "OB",
    }
}

fn translation_code(t: TranslationState) -> &'static str {
    match t {
        TranslationState::Sheathed => "IN",
        TranslationState::Half => "IH",
        TranslationState::Full => "IF",
    }
}

impl fmt::Display for ConfigurationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigurationLabel::Sheathed { side, .. } => {
                let s = match side {
                    Side::Left => "L",
                    Side::Right => "R",
                };
                write!(f, "{}-{s}", self.cell())
            }
            ConfigurationLabel::InnerOnly => f.write_str("IO"),
        }
    }
}

impl FromStr for ConfigurationLabel {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ConfigurationLabel::all()
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::invariant("configuration", format!("unknown label `{s}`")))
    }
}

impl Serialize for ConfigurationLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConfigurationLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Actuation of one pose of a configuration with inner tension `lambda`.
pub fn configuration_to_input(label: ConfigurationLabel, params: &RobotParams, lambda: f64) -> ActuationInput {
    let mut input = ActuationInput {
        translation: label.translation(),
        ..ActuationInput::default()
    };
    match label {
        ConfigurationLabel::Sheathed { outer, .. } => {
            input.outer_tension = match outer {
                OuterState::Straight => 0.0,
                OuterState::Bent => params.bent_outer_tension,
            };
        }
        ConfigurationLabel::InnerOnly => input.outer_present = false,
    }
    match label.side() {
        Side::Left => input.inner_left_tension = lambda,
        Side::Right => input.inner_right_tension = lambda,
    }
    input
}

/// Tendon tension from the force `F_B` read by the pulley load cell with
/// routing angle `γ`: `T = F_B / (2 sin 2γ)`.
pub fn tension_from_sensor(force: f64, gamma: f64) -> Result<f64, ConfigError> {
    let s = (2.0 * gamma).sin();
    if s.abs() < 1e-12 {
        return Err(ConfigError::UndefinedRouting { gamma });
    }
    Ok(force / (2.0 * s))
}

/// Inner-tendon tensions of one configuration's sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSchedule {
    pub label: ConfigurationLabel,
    pub tensions: Vec<f64>,
}

/// Tension schedules for a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule {
    pub sweeps: Vec<SweepSchedule>,
}

/// `steps` equal increments from 0 up to `max` (zero excluded).
pub fn ramp(max: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|k| max * k as f64 / steps as f64).collect()
}

impl ProtocolSchedule {
    /// Every configuration ramped to the configured maximum tension.
    pub fn standard(params: &RobotParams) -> Self {
        Self {
            sweeps: ConfigurationLabel::all()
                .into_iter()
                .map(|label| SweepSchedule {
                    label,
                    tensions: ramp(params.inner_max_tension, params.steps),
                })
                .collect(),
        }
    }

    pub fn pose_count(&self) -> usize {
        self.sweeps.iter().map(|s| s.tensions.len()).sum()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDocument {
    schema: String,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    max_tension: Option<String>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    sweep: Vec<SweepDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDocument {
    label: String,
    tensions: Vec<String>,
}

/// Reads a schedule document. Without `[[sweep]]` tables every listed label
/// (all thirteen by default) gets a ramp to `max_tension` in `steps` steps,
/// falling back to the values in `params`.
pub fn load_schedule(document: &str, params: &RobotParams) -> Result<ProtocolSchedule, ConfigError> {
    let doc: ScheduleDocument = toml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if doc.schema != SCHEDULE_SCHEMA {
        return Err(ConfigError::invariant(
            "schema",
            format!("expected `{SCHEDULE_SCHEMA}`, found `{}`", doc.schema),
        ));
    }
    let mut sweeps = Vec::new();
    for (k, s) in doc.sweep.iter().enumerate() {
        let label: ConfigurationLabel = s.label.parse()?;
        let tensions = s
            .tensions
            .iter()
            .enumerate()
            .map(|(j, t)| parse_quantity(&format!("sweep[{k}].tensions[{j}]"), t, Quantity::Force))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(t) = tensions.iter().find(|t| !(**t >= 0.0)) {
            return Err(ConfigError::invariant(format!("sweep[{k}].tensions"), format!("negative tension {t}")));
        }
        sweeps.push(SweepSchedule { label, tensions });
    }
    if sweeps.is_empty() {
        let max = match &doc.max_tension {
            Some(t) => parse_quantity("max_tension", t, Quantity::Force)?,
            None => params.inner_max_tension,
        };
        if !(max >= 0.0) {
            return Err(ConfigError::invariant("max_tension", "must be non-negative"));
        }
        let steps = doc.steps.unwrap_or(params.steps);
        if steps == 0 {
            return Err(ConfigError::invariant("steps", "must be at least 1"));
        }
        let labels = match &doc.labels {
            Some(list) => list.iter().map(|l| l.parse()).collect::<Result<Vec<_>, _>>()?,
            None => ConfigurationLabel::all(),
        };
        sweeps = labels
            .into_iter()
            .map(|label| SweepSchedule {
                label,
                tensions: ramp(max, steps),
            })
            .collect();
    }
    Ok(ProtocolSchedule { sweeps })
}
