//! Calibration routines, randomized benchmarking and the CHSH experiment.
//!
//! Every routine is a pure function of the platform state (including the
//! emulator seed) and its arguments, and returns a [`Report`]-able outcome.
//! Platform parameters are only written after a successful fit.

mod calibration;
mod chsh;
mod clifford;
mod rb;

pub use calibration::*;
pub use chsh::*;
pub use clifford::{Clifford, CliffordTable};
pub use rb::*;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionType, AveragingMode, Classification, ExecutionOptions};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::QubitId;

/// Shots and wait time per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSettings {
    pub nshots: u32,
    /// ns
    pub relaxation_time: u64,
}

impl ShotSettings {
    /// 4096 shots, 5 us relaxation.
    pub const SPECTROSCOPY: ShotSettings = ShotSettings { nshots: 4096, relaxation_time: 5_000 };
    /// 4096 shots, 300 us relaxation.
    pub const STANDARD: ShotSettings = ShotSettings { nshots: 4096, relaxation_time: 300_000 };

    pub fn options(&self, acquisition: AcquisitionType, averaging: AveragingMode) -> ExecutionOptions {
        ExecutionOptions::new(self.nshots, acquisition, averaging).with_relaxation(self.relaxation_time)
    }

    /// Integrated, hardware-averaged IQ.
    pub fn averaged_iq(&self) -> ExecutionOptions {
        self.options(AcquisitionType::Integrated, AveragingMode::Cyclic)
    }
}

/// Measured points behind a fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Points {
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Points {
    pub fn new(x_label: &str, y_label: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Points { x_label: x_label.into(), y_label: y_label.into(), x, y }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.x_label, self.y_label);
        for (x, y) in self.x.iter().zip(&self.y) {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// Common JSON report: `{routine, inputs, fit, updated_parameters}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub routine: String,
    pub inputs: serde_json::Value,
    pub fit: serde_json::Value,
    pub updated_parameters: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Estimated excited-state population from an averaged IQ point, by
/// projection onto the line joining the two blob centres.
pub fn excited_population(iq: Complex64, classification: &Classification) -> f64 {
    let m0 = classification.mean(0);
    let d = classification.mean(1) - m0;
    let n = d.norm_sqr();
    if n == 0.0 {
        return 0.0;
    }
    ((iq - m0) * d.conj()).re / n
}

/// Write `updates` (dotted paths relative to the qubit) to the platform and
/// return them keyed as `"<qubit>.<path>"`.
fn apply_updates(
    platform: &mut Platform,
    qubit: QubitId,
    updates: Vec<(&str, serde_json::Value)>,
) -> Result<BTreeMap<String, serde_json::Value>> {
    let mut done = BTreeMap::new();
    for (path, value) in updates {
        platform.update_parameter(qubit, path, value.clone())?;
        done.insert(format!("{qubit}.{path}"), value);
    }
    Ok(done)
}

fn require_points(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("{what} needs at least {min} points, got {n}")));
    }
    Ok(())
}
