use std::any::Any;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::acquisition::{Classification, ExecutionOptions, ResultSet};
use crate::error::Result;
use crate::pulse::PulseSequence;
use crate::sweep::Sweeper;
use crate::QubitId;

/// Driver feature flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    ArbitraryPulseSequences,
    MultiplexedReadout,
    HardwareClassification,
    FastReset,
    DeviceSimulation,
    RtsFrequency,
    RtsAmplitude,
    RtsDuration,
    RtsStart,
    RtsRelativePhase,
    Rts2d,
    SequenceUnrolling,
    HardwareAveraging,
    Singleshot,
    IntegratedAcquisition,
    ClassifiedAcquisition,
    RawWaveformAcquisition,
}

/// Anything wired into the platform.
pub trait Instrument: Send + Sync {
    fn id(&self) -> &str;
    fn kind(&self) -> &'static str;
    fn address(&self) -> &str;
    fn capabilities(&self) -> &'static [Capability] {
        &[]
    }
    /// Current settings, for inspection and dumps.
    fn settings(&self) -> serde_json::Value;
    fn as_controller(&self) -> Option<&dyn Controller> {
        None
    }
    fn as_controller_mut(&mut self) -> Option<&mut dyn Controller> {
        None
    }
    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Platform state a controller needs besides the pulses.
#[derive(Debug, Clone, Default)]
pub struct ExecutionContext {
    pub sampling_rate: f64,
    /// Discriminator per qubit, for on-device classification.
    pub classification: BTreeMap<QubitId, Classification>,
    /// Local-oscillator frequency per channel, Hz. Readout tones are
    /// synthesized at the pulse frequency minus this value.
    pub lo_frequency: BTreeMap<String, f64>,
}

/// Execution time of one controller round trip, ns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Timing {
    /// `nshots * sum(T_sequence + T_relaxation)` over all points.
    pub ideal_ns: u64,
    /// Simulated instrument and compilation overhead.
    pub overhead_ns: u64,
    pub points: u64,
}

impl Timing {
    pub fn real_ns(&self) -> u64 {
        self.ideal_ns + self.overhead_ns
    }
}

pub struct ControllerOutput {
    /// One result set per input sequence.
    pub results: Vec<ResultSet>,
    pub timing: Timing,
}

/// Instrument with waveform generators and acquisition: plays sequences,
/// sweeps and acquires.
pub trait Controller: Send + Sync {
    /// Play `batch` in one round trip. With sweepers, `batch` must hold a
    /// single sequence and its result gains one axis per sweeper.
    fn execute(
        &self,
        ctx: &ExecutionContext,
        batch: &[PulseSequence],
        sweepers: &[Sweeper],
        options: &ExecutionOptions,
    ) -> Result<ControllerOutput>;

    /// Timing of [`Controller::execute`] without running it.
    fn timing(&self, batch: &[PulseSequence], sweepers: &[Sweeper], options: &ExecutionOptions) -> Result<Timing>;

    fn set_seed(&mut self, seed: u64);
}

/// A local oscillator only stores its settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOscillator {
    pub id: String,
    pub address: String,
    pub frequency: f64,
    pub power: f64,
}

impl Instrument for LocalOscillator {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> &'static str {
        "local_oscillator"
    }

    fn address(&self) -> &str {
        &self.address
    }

    fn settings(&self) -> serde_json::Value {
        serde_json::json!({ "frequency": self.frequency, "power": self.power })
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
