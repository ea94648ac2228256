//! Experiment protocol runs and tip-error statistics against measured poses.

use crate::config::{configuration_to_input, ActuationInput, ConfigError, ConfigurationLabel, ProtocolSchedule, RobotParams};
use crate::shooting::{sweep, ShootingResult, SolverConfig, SweepMode};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use thiserror::Error;

/// First line of a measurement file.
pub const MEASUREMENTS_VERSION: &str = "# tacter-measurements v1";
const MEASUREMENT_HEADER: [&str; 6] = ["configuration", "step_index", "tension_n", "x_mm", "y_mm", "z_mm"];

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("measurement file must start with `{MEASUREMENTS_VERSION}`, found `{0}`")]
    Version(String),
    #[error("measurement file line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("measurements without a converged model pose: {}", .unmatched.join(", "))]
    Misaligned { unmatched: Vec<String> },
}

/// A measured tip position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredPose {
    pub configuration: ConfigurationLabel,
    pub step_index: usize,
    pub tip_position: Vector3<f64>,
    pub tendon_tension: f64,
}

/// A solved pose of a protocol run.
#[derive(Debug, Clone)]
pub struct PoseResult {
    pub configuration: ConfigurationLabel,
    pub step_index: usize,
    pub tension: f64,
    pub input: ActuationInput,
    pub result: ShootingResult,
}

/// Runs every sweep of the schedule: poses within one configuration are
/// solved in order with warm starts, configurations run in parallel.
/// Results come back in schedule order.
pub fn run_protocol(
    params: &RobotParams,
    schedule: &ProtocolSchedule,
    config: &SolverConfig,
) -> Result<Vec<PoseResult>, ConfigError> {
    use rayon::prelude::*;
    let mut jobs = Vec::with_capacity(schedule.sweeps.len());
    for s in &schedule.sweeps {
        let inputs: Vec<ActuationInput> = s
            .tensions
            .iter()
            .map(|&t| configuration_to_input(s.label, params, t))
            .collect();
        let models = inputs
            .iter()
            .map(|i| params.model(i))
            .collect::<Result<Vec<_>, _>>()?;
        jobs.push((s, inputs, models));
    }
    let solved: Vec<Vec<PoseResult>> = jobs
        .par_iter()
        .map(|(s, inputs, models)| {
            sweep(models, config, SweepMode::WarmStart)
                .into_iter()
                .enumerate()
                .map(|(k, result)| PoseResult {
                    configuration: s.label,
                    step_index: k,
                    tension: s.tensions[k],
                    input: inputs[k],
                    result,
                })
                .collect()
        })
        .collect();
    Ok(solved.into_iter().flatten().collect())
}

/// Error of one matched pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseError {
    pub configuration: ConfigurationLabel,
    pub step_index: usize,
    pub error_mm: f64,
}

/// Statistics of one report cell; left and right actuation are pooled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub cell: String,
    pub average_mm: f64,
    pub max_mm: f64,
    pub count: usize,
    /// Number of measured poses for each configuration in the cell.
    pub poses_per_configuration: BTreeMap<String, usize>,
}

/// Euclidean tip errors grouped by outer state and inner translation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub cells: Vec<CellStats>,
    pub poses: Vec<PoseError>,
}

const CELL_ORDER: [&str; 7] = ["OS-IN", "OS-IH", "OS-IF", "OB-IN", "OB-IH", "OB-IF", "IO"];

/// Matches measurements to model poses on (configuration, step index) and
/// computes per-cell average and maximum tip distance.
pub fn compute_errors(measurements: &[MeasuredPose], results: &[PoseResult]) -> Result<ErrorReport, ValidationError> {
    let index: HashMap<(ConfigurationLabel, usize), &PoseResult> =
        results.iter().map(|p| ((p.configuration, p.step_index), p)).collect();
    let mut unmatched = Vec::new();
    let mut poses = Vec::with_capacity(measurements.len());
    for m in measurements {
        let key = format!("{}#{}", m.configuration, m.step_index);
        match index.get(&(m.configuration, m.step_index)) {
            None => unmatched.push(format!("{key} (no model pose)")),
            Some(p) => match p.result.tip_position() {
                Some(tip) if p.result.converged => poses.push(PoseError {
                    configuration: m.configuration,
                    step_index: m.step_index,
                    error_mm: (m.tip_position - tip).norm(),
                }),
                _ => unmatched.push(format!("{key} (model did not converge)")),
            },
        }
    }
    if !unmatched.is_empty() {
        return Err(ValidationError::Misaligned { unmatched });
    }
    let mut grouped: BTreeMap<String, Vec<&PoseError>> = BTreeMap::new();
    for p in &poses {
        grouped.entry(p.configuration.cell()).or_default().push(p);
    }
    let cells = CELL_ORDER
        .iter()
        .filter_map(|name| {
            let group = grouped.get(*name)?;
            let sum: f64 = group.iter().map(|p| p.error_mm).sum();
            let max = group.iter().map(|p| p.error_mm).fold(0.0, f64::max);
            let mut per = BTreeMap::new();
            for p in group {
                *per.entry(p.configuration.to_string()).or_insert(0) += 1;
            }
            Some(CellStats {
                cell: name.to_string(),
                average_mm: sum / group.len() as f64,
                max_mm: max,
                count: group.len(),
                poses_per_configuration: per,
            })
        })
        .collect();
    Ok(ErrorReport { cells, poses })
}

impl ErrorReport {
    pub fn cell(&self, name: &str) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.cell == name)
    }

    /// Outer state by inner translation, average / max in mm.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let entry = |name: &str| match self.cell(name) {
            Some(c) => format!("{} / {}", crate::output::sig9(c.average_mm), crate::output::sig9(c.max_mm)),
            None => "-".to_string(),
        };
        let _ = writeln!(out, "tip error, average / max (mm)");
        let _ = writeln!(out, "{:<4} {:>33} {:>33} {:>33}", "", "IN", "IH", "IF");
        for outer in ["OS", "OB"] {
            let _ = writeln!(
                out,
                "{:<4} {:>33} {:>33} {:>33}",
                outer,
                entry(&format!("{outer}-IN")),
                entry(&format!("{outer}-IH")),
                entry(&format!("{outer}-IF")),
            );
        }
        if self.cell("IO").is_some() {
            let _ = writeln!(out, "{:<4} {:>33}", "IO", entry("IO"));
        }
        for c in &self.cells {
            let counts: Vec<String> = c
                .poses_per_configuration
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(out, "poses {}: {}", c.cell, counts.join(" "));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "cell": c.cell,
                    "average_mm": crate::output::sig9(c.average_mm),
                    "max_mm": crate::output::sig9(c.max_mm),
                    "count": c.count,
                    "poses_per_configuration": c.poses_per_configuration,
                })
            })
            .collect();
        let poses: Vec<serde_json::Value> = self
            .poses
            .iter()
            .map(|p| {
                serde_json::json!({
                    "configuration": p.configuration.to_string(),
                    "step_index": p.step_index,
                    "error_mm": crate::output::sig9(p.error_mm),
                })
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&serde_json::json!({ "cells": cells, "poses": poses }))
            .expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Deserialize)]
struct MeasurementRow {
    configuration: String,
    step_index: usize,
    tension_n: f64,
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
}

/// Reads a measurement file. Unknown configuration labels are reported as
/// misaligned entries.
pub fn parse_measurements(text: &str) -> Result<Vec<MeasuredPose>, ValidationError> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim_end_matches('\r');
    if first.trim() != MEASUREMENTS_VERSION {
        return Err(ValidationError::Version(first.to_string()));
    }
    let body = lines.next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| ValidationError::Parse {
        line: 2,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != MEASUREMENT_HEADER {
        return Err(ValidationError::Parse {
            line: 2,
            message: format!("header must be `{}`", MEASUREMENT_HEADER.join(",")),
        });
    }
    let mut poses = Vec::new();
    let mut unknown = Vec::new();
    for row in reader.deserialize::<MeasurementRow>() {
        let row = row.map_err(|e| ValidationError::Parse {
            line: e.position().map_or(0, |p| p.line() + 1),
            message: e.to_string(),
        })?;
        let values = [row.tension_n, row.x_mm, row.y_mm, row.z_mm];
        if !values.iter().all(|v| v.is_finite()) {
            return Err(ValidationError::Parse {
                line: 0,
                message: format!("non-finite value for {} step {}", row.configuration, row.step_index),
            });
        }
        match row.configuration.parse::<ConfigurationLabel>() {
            Ok(configuration) => poses.push(MeasuredPose {
                configuration,
                step_index: row.step_index,
                tip_position: Vector3::new(row.x_mm, row.y_mm, row.z_mm),
                tendon_tension: row.tension_n,
            }),
            Err(_) => unknown.push(format!("{}#{} (unknown configuration)", row.configuration, row.step_index)),
        }
    }
    if !unknown.is_empty() {
        return Err(ValidationError::Misaligned { unmatched: unknown });
    }
    Ok(poses)
}

/// Writes poses in the measurement format.
pub fn format_measurements(poses: &[MeasuredPose]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MEASUREMENTS_VERSION}");
    let _ = writeln!(out, "{}", MEASUREMENT_HEADER.join(","));
    for p in poses {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.configuration, p.step_index, p.tendon_tension, p.tip_position.x, p.tip_position.y, p.tip_position.z
        );
    }
    out
}

/// The model's own converged tips as measurements.
pub fn model_tips_as_measurements(results: &[PoseResult]) -> Vec<MeasuredPose> {
    results
        .iter()
        .filter(|p| p.result.converged)
        .filter_map(|p| {
            Some(MeasuredPose {
                configuration: p.configuration,
                step_index: p.step_index,
                tip_position: p.result.tip_position()?,
                tendon_tension: p.tension,
            })
        })
        .collect()
}
