use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::Classification;
use crate::emulator::{OverheadModel, VirtualQpu};
use crate::error::{Error, Result};
use crate::pulse::EnvelopeShape;
use crate::QubitId;

/// Platform description: static wiring (`instruments`, `channels`, `qubits`,
/// `pairs`) plus calibrated `parameters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    pub name: String,
    pub instruments: BTreeMap<String, InstrumentConfig>,
    pub channels: BTreeMap<String, ChannelConfig>,
    pub qubits: BTreeMap<QubitId, QubitWiring>,
    #[serde(default)]
    pub pairs: Vec<[QubitId; 2]>,
    pub parameters: Parameters,
}

impl PlatformConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read platform file {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstrumentConfig {
    /// Virtual-transmon controller.
    Emulator {
        #[serde(default)]
        address: String,
        qpu: QpuSource,
        #[serde(default)]
        overhead: OverheadModel,
    },
    LocalOscillator {
        #[serde(default)]
        address: String,
        frequency: f64,
        #[serde(default)]
        power: f64,
    },
}

/// Device truth given inline or as a path relative to the platform file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QpuSource {
    Inline(Box<VirtualQpu>),
    Path(PathBuf),
}

// Goes through `Value` because buffered (tagged/untagged) content cannot
// turn the string keys of the qubit map back into integers.
impl<'de> Deserialize<'de> for QpuSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(p) => Ok(QpuSource::Path(p.into())),
            v => serde_json::from_value(v).map(|q| QpuSource::Inline(Box::new(q))).map_err(serde::de::Error::custom),
        }
    }
}

impl QpuSource {
    pub fn resolve(&self, base: Option<&Path>) -> Result<VirtualQpu> {
        match self {
            QpuSource::Inline(q) => Ok((**q).clone()),
            QpuSource::Path(p) => {
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("cannot read QPU file {}: {e}", full.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", full.display())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub instrument: String,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub port: Port,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_oscillator: Option<String>,
}

/// Channel assigned to each role of a qubit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitWiring {
    pub readout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twpa: Option<String>,
}

impl QubitWiring {
    pub fn roles(&self) -> impl Iterator<Item = (&'static str, &String)> {
        [
            ("readout", &self.readout),
            ("feedback", &self.feedback),
            ("drive", &self.drive),
            ("flux", &self.flux),
            ("twpa", &self.twpa),
        ]
        .into_iter()
        .filter_map(|(role, ch)| ch.as_ref().map(|c| (role, c)))
    }
}

/// Calibrated, runtime-updatable values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub settings: Settings,
    pub qubits: BTreeMap<QubitId, QubitParams>,
    #[serde(default)]
    pub pairs: Vec<PairParams>,
}

impl Parameters {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Samples per second of every waveform generator.
    pub sampling_rate: f64,
    /// Pulse start times are rounded up to a multiple of this, ns.
    pub granularity_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    /// Bare (undressed) resonator frequency, Hz.
    pub bare_frequency: f64,
    pub drive_frequency: f64,
    pub readout_frequency: f64,
    /// ns
    pub t1: f64,
    /// ns
    pub t2: f64,
    pub pi_pulse: PiPulse,
    pub readout_pulse: ReadoutPulse,
    pub classification: Classification,
}

impl QubitParams {
    pub fn validate(&self, id: QubitId) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("qubit {id}: {what}")));
        if !(self.t1 > 0.0 && self.t2 > 0.0) {
            return bad("T1 and T2 must be positive".into());
        }
        if self.t2 > 2.0 * self.t1 {
            return bad(format!("T2 = {} exceeds 2 T1 = {}", self.t2, 2.0 * self.t1));
        }
        if self.pi_pulse.amplitude.abs() > 1.0 || self.readout_pulse.amplitude.abs() > 1.0 {
            return bad("pulse amplitude outside [-1, 1]".into());
        }
        if self.pi_pulse.duration == 0 || self.readout_pulse.duration == 0 {
            return bad("pulse duration must be positive".into());
        }
        self.pi_pulse.shape.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiPulse {
    pub amplitude: f64,
    pub duration: u64,
    pub shape: EnvelopeShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutPulse {
    pub amplitude: f64,
    pub duration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    pub qubits: [QubitId; 2],
    pub cz: CzParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzParams {
    /// Qubit whose flux line carries the pulse.
    pub flux_qubit: QubitId,
    pub amplitude: f64,
    pub duration: u64,
    /// Virtual Z rotation applied after the gate to each qubit of the pair,
    /// in the order of `qubits`.
    pub phase_corrections: [f64; 2],
}
