//! Qubits, channels and instruments, and the single entry point for running
//! pulse sequences on them.

mod config;
mod instrument;

pub use config::*;
pub use instrument::*;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use crate::acquisition::{ExecutionOptions, ResultSet};
use crate::emulator::Emulator;
use crate::error::{Error, Result};
use crate::pulse::{Pulse, PulseKind, PulseSequence};
use crate::sweep::{self, Sweeper};
use crate::transpiler::Connectivity;
use crate::QubitId;

/// A qubit: its wiring and current calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Qubit {
    pub id: QubitId,
    pub wiring: QubitWiring,
    pub params: QubitParams,
}

impl Qubit {
    pub fn drive_channel(&self) -> Result<&str> {
        self.wiring
            .drive
            .as_deref()
            .ok_or_else(|| Error::Config(format!("qubit {} has no drive channel", self.id)))
    }

    pub fn flux_channel(&self) -> Result<&str> {
        self.wiring
            .flux
            .as_deref()
            .ok_or_else(|| Error::Config(format!("qubit {} has no flux channel", self.id)))
    }

    pub fn readout_channel(&self) -> Result<&str> {
        self.wiring
            .readout
            .as_deref()
            .ok_or_else(|| Error::Config(format!("qubit {} has no readout channel", self.id)))
    }

    /// Calibrated pi pulse at `start`.
    pub fn pi_pulse(&self, start: u64) -> Result<Pulse> {
        let pi = &self.params.pi_pulse;
        Ok(Pulse::drive(self.id, self.drive_channel()?, start, pi.duration)
            .with_amplitude(pi.amplitude)
            .with_frequency(self.params.drive_frequency)
            .with_shape(pi.shape))
    }

    /// Calibrated pi/2 pulse at `start`: pi pulse at half amplitude.
    pub fn half_pi_pulse(&self, start: u64) -> Result<Pulse> {
        let p = self.pi_pulse(start)?;
        let amplitude = p.amplitude / 2.0;
        Ok(p.with_amplitude(amplitude))
    }

    /// Calibrated measurement tone at `start`.
    pub fn readout_pulse(&self, start: u64, acquisition_id: u32) -> Result<Pulse> {
        let ro = &self.params.readout_pulse;
        Ok(Pulse::readout(self.id, self.readout_channel()?, start, ro.duration, acquisition_id)
            .with_amplitude(ro.amplitude)
            .with_frequency(self.params.readout_frequency))
    }
}

/// One `execute`/`execute_batch`/`sweep` call as seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExecutionRecord {
    pub timing: Timing,
    pub sequences: usize,
    pub wall_ns: u64,
}

pub struct Platform {
    name: String,
    instrument_configs: BTreeMap<String, InstrumentConfig>,
    instruments: BTreeMap<String, Box<dyn Instrument>>,
    controller: String,
    channels: BTreeMap<String, ChannelConfig>,
    qubits: BTreeMap<QubitId, Qubit>,
    pairs: Vec<[QubitId; 2]>,
    pair_params: Vec<PairParams>,
    settings: Settings,
    topology: Connectivity,
    base_dir: Option<PathBuf>,
    log: Mutex<Vec<ExecutionRecord>>,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform")
            .field("name", &self.name)
            .field("controller", &self.controller)
            .field("qubits", &self.qubits.keys().collect::<Vec<_>>())
            .field("pairs", &self.pairs)
            .finish()
    }
}

impl Platform {
    /// Build from a config. Relative QPU paths resolve against `base_dir`.
    pub fn build(config: PlatformConfig, base_dir: Option<&Path>) -> Result<Self> {
        let PlatformConfig { name, instruments: instrument_configs, channels, qubits: wiring, pairs, parameters } = config;

        let mut instruments: BTreeMap<String, Box<dyn Instrument>> = BTreeMap::new();
        let mut controllers = Vec::new();
        for (id, ic) in &instrument_configs {
            let inst: Box<dyn Instrument> = match ic {
                InstrumentConfig::Emulator { address, qpu, overhead } => {
                    controllers.push(id.clone());
                    Box::new(Emulator::new(id.clone(), address.clone(), qpu.resolve(base_dir)?, *overhead)?)
                }
                InstrumentConfig::LocalOscillator { address, frequency, power } => Box::new(LocalOscillator {
                    id: id.clone(),
                    address: address.clone(),
                    frequency: *frequency,
                    power: *power,
                }),
            };
            instruments.insert(id.clone(), inst);
        }
        let controller = match controllers.as_slice() {
            [one] => one.clone(),
            [] => return Err(Error::Config("platform has no controller instrument".into())),
            _ => return Err(Error::Config(format!("platform has several controllers: {controllers:?}"))),
        };

        for (ch, cfg) in &channels {
            if !instruments.contains_key(&cfg.port.instrument) {
                return Err(Error::Config(format!(
                    "channel `{ch}` is connected to unknown instrument `{}`",
                    cfg.port.instrument
                )));
            }
            if let Some(lo) = &cfg.local_oscillator {
                match instrument_configs.get(lo) {
                    Some(InstrumentConfig::LocalOscillator { .. }) => {}
                    _ => return Err(Error::Config(format!("channel `{ch}` names `{lo}` as LO, which is not one"))),
                }
            }
        }

        if wiring.keys().copied().ne(0..wiring.len()) {
            return Err(Error::Config("qubit ids must be 0, 1, ..., n-1".into()));
        }
        let mut qubits = BTreeMap::new();
        for (&id, w) in &wiring {
            if w.readout.is_none() {
                return Err(Error::Config(format!("qubit {id} has no readout channel")));
            }
            for (role, ch) in w.roles() {
                if !channels.contains_key(ch) {
                    return Err(Error::Config(format!("qubit {id} {role} channel `{ch}` is not declared")));
                }
            }
            let params = parameters
                .qubits
                .get(&id)
                .cloned()
                .ok_or_else(|| Error::Config(format!("qubit {id} has no parameters")))?;
            params.validate(id)?;
            qubits.insert(id, Qubit { id, wiring: w.clone(), params });
        }
        if let Some(extra) = parameters.qubits.keys().find(|q| !wiring.contains_key(q)) {
            return Err(Error::Config(format!("parameters given for unknown qubit {extra}")));
        }

        let edges: Vec<(QubitId, QubitId)> = pairs.iter().map(|&[a, b]| (a, b)).collect();
        let topology = Connectivity::new(qubits.len(), &edges)
            .map_err(|e| Error::Config(format!("pair list: {e}")))?;
        validate_pair_params(&pairs, &parameters.pairs, &qubits)?;

        Ok(Platform {
            name,
            instrument_configs,
            instruments,
            controller,
            channels,
            qubits,
            pairs,
            pair_params: parameters.pairs,
            settings: parameters.settings,
            topology,
            base_dir: base_dir.map(Path::to_path_buf),
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::build(PlatformConfig::load(path)?, path.parent())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn qubits(&self) -> impl Iterator<Item = &Qubit> {
        self.qubits.values()
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, id: QubitId) -> Result<&Qubit> {
        self.qubits.get(&id).ok_or_else(|| Error::InvalidArgument(format!("platform has no qubit {id}")))
    }

    pub fn pairs(&self) -> &[[QubitId; 2]] {
        &self.pairs
    }

    /// CZ calibration for the unordered pair `{a, b}`.
    pub fn cz(&self, a: QubitId, b: QubitId) -> Option<&PairParams> {
        self.pair_params.iter().find(|p| p.qubits == [a, b] || p.qubits == [b, a])
    }

    pub fn topology(&self) -> &Connectivity {
        &self.topology
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelConfig> {
        self.channels.get(name)
    }

    pub fn instrument(&self, id: &str) -> Option<&dyn Instrument> {
        self.instruments.get(id).map(|b| b.as_ref())
    }

    pub fn instruments(&self) -> impl Iterator<Item = &dyn Instrument> {
        self.instruments.values().map(|b| b.as_ref())
    }

    /// The emulator, when it is the controller.
    pub fn emulator(&self) -> Option<&Emulator> {
        self.instruments.get(&self.controller)?.as_any().downcast_ref()
    }

    pub fn emulator_mut(&mut self) -> Option<&mut Emulator> {
        self.instruments.get_mut(&self.controller)?.as_any_mut().downcast_mut()
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Some(c) = self.instruments.get_mut(&self.controller).and_then(|i| i.as_controller_mut()) {
            c.set_seed(seed);
        }
    }

    fn controller(&self) -> &dyn Controller {
        self.instruments[&self.controller].as_controller().expect("controller instrument implements Controller")
    }

    pub fn parameters(&self) -> Parameters {
        Parameters {
            settings: self.settings,
            qubits: self.qubits.iter().map(|(&id, q)| (id, q.params.clone())).collect(),
            pairs: self.pair_params.clone(),
        }
    }

    /// Replace all calibrated values. The qubit set must not change.
    pub fn set_parameters(&mut self, parameters: Parameters) -> Result<()> {
        if parameters.qubits.keys().ne(self.qubits.keys()) {
            return Err(Error::Config("parameters must cover exactly the platform qubits".into()));
        }
        for (&id, p) in &parameters.qubits {
            p.validate(id)?;
        }
        validate_pair_params(&self.pairs, &parameters.pairs, &self.qubits)?;
        for (id, p) in parameters.qubits {
            self.qubits.get_mut(&id).expect("checked above").params = p;
        }
        self.pair_params = parameters.pairs;
        self.settings = parameters.settings;
        Ok(())
    }

    /// Full configuration, round-trippable through [`Platform::build`].
    pub fn to_config(&self) -> PlatformConfig {
        PlatformConfig {
            name: self.name.clone(),
            instruments: self.instrument_configs.clone(),
            channels: self.channels.clone(),
            qubits: self.qubits.iter().map(|(&id, q)| (id, q.wiring.clone())).collect(),
            pairs: self.pairs.clone(),
            parameters: self.parameters(),
        }
    }

    /// Write the current configuration to `path`. Relative QPU file
    /// references are rewritten so they still resolve from the new location.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut config = self.to_config();
        let target_dir = path.parent().map(|d| d.canonicalize().unwrap_or_else(|_| d.to_path_buf()));
        let base = self.base_dir.as_ref().map(|d| d.canonicalize().unwrap_or_else(|_| d.clone()));
        for ic in config.instruments.values_mut() {
            if let InstrumentConfig::Emulator { qpu: QpuSource::Path(p), .. } = ic {
                if let Some(base) = base.as_ref().filter(|b| p.is_relative() && target_dir.as_ref() != Some(*b)) {
                    *p = base.join(&*p);
                }
            }
        }
        std::fs::write(path, config.to_json()?)
            .map_err(|e| Error::Config(format!("cannot write platform file {}: {e}", path.display())))
    }

    /// Set one qubit parameter by dotted path, e.g. `pi_pulse.amplitude`.
    pub fn update_parameter(&mut self, qubit: QubitId, path: &str, value: serde_json::Value) -> Result<()> {
        let q = self.qubits.get_mut(&qubit).ok_or_else(|| Error::UnknownParameter(format!("{qubit}.{path}")))?;
        let mut tree = serde_json::to_value(&q.params)?;
        let mut node = &mut tree;
        for key in path.split('.') {
            node = node
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| Error::UnknownParameter(format!("{qubit}.{path}")))?;
        }
        *node = value;
        let params: QubitParams = serde_json::from_value(tree)
            .map_err(|e| Error::InvalidArgument(format!("bad value for {qubit}.{path}: {e}")))?;
        params.validate(qubit)?;
        q.params = params;
        Ok(())
    }

    fn context(&self) -> ExecutionContext {
        let lo_frequency = self
            .channels
            .iter()
            .filter_map(|(name, ch)| {
                let lo = ch.local_oscillator.as_ref()?;
                let inst = self.instruments.get(lo)?.as_any().downcast_ref::<LocalOscillator>()?;
                Some((name.clone(), inst.frequency))
            })
            .collect();
        ExecutionContext {
            sampling_rate: self.settings.sampling_rate,
            classification: self.qubits.iter().map(|(&id, q)| (id, q.params.classification)).collect(),
            lo_frequency,
        }
    }

    fn check_sequence(&self, seq: &PulseSequence) -> Result<()> {
        for p in seq.pulses() {
            let q = self.qubit(p.qubit)?;
            let wired = match p.kind {
                PulseKind::Drive => q.wiring.drive.as_ref(),
                PulseKind::Readout => q.wiring.readout.as_ref(),
                PulseKind::Flux => q.wiring.flux.as_ref(),
            };
            if wired != Some(&p.channel) {
                return Err(Error::InvalidPulse(format!(
                    "{} pulse for qubit {} on channel `{}`, which is not its {} line",
                    p.kind, p.qubit, p.channel, p.kind
                )));
            }
        }
        Ok(())
    }

    fn run(&self, batch: &[PulseSequence], sweepers: &[Sweeper], options: &ExecutionOptions) -> Result<Vec<ResultSet>> {
        options.validate()?;
        for seq in batch {
            self.check_sequence(seq)?;
        }
        if !sweepers.is_empty() {
            sweep::validate(&batch[0], sweepers)?;
        }
        let started = crate::clock::Stopwatch::start();
        let out = self
            .controller()
            .execute(&self.context(), batch, sweepers, options)
            .map_err(|e| Error::Controller { instrument: self.controller.clone(), source: Box::new(e) })?;
        let record = ExecutionRecord {
            timing: out.timing,
            sequences: batch.len(),
            wall_ns: started.elapsed_ns(),
        };
        log::debug!("executed {} sequence(s): {:?}", batch.len(), record.timing);
        self.log.lock().unwrap_or_else(|p| p.into_inner()).push(record);
        Ok(out.results)
    }

    /// Run one sequence.
    pub fn execute(&self, seq: &PulseSequence, options: &ExecutionOptions) -> Result<ResultSet> {
        Ok(self.run(std::slice::from_ref(seq), &[], options)?.remove(0))
    }

    /// Run several sequences in one controller round trip.
    pub fn execute_batch(&self, batch: &[PulseSequence], options: &ExecutionOptions) -> Result<Vec<ResultSet>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        self.run(batch, &[], options)
    }

    /// Run a real-time sweep: one round trip, results gain one axis per
    /// sweeper (outer first).
    pub fn sweep(&self, seq: &PulseSequence, sweepers: &[Sweeper], options: &ExecutionOptions) -> Result<ResultSet> {
        if sweepers.is_empty() {
            return self.execute(seq, options);
        }
        Ok(self.run(std::slice::from_ref(seq), sweepers, options)?.remove(0))
    }

    /// Timing of a run without executing it.
    pub fn timing(&self, batch: &[PulseSequence], sweepers: &[Sweeper], options: &ExecutionOptions) -> Result<Timing> {
        self.controller().timing(batch, sweepers, options)
    }

    pub fn execution_log(&self) -> Vec<ExecutionRecord> {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clear();
    }
}

fn validate_pair_params(pairs: &[[QubitId; 2]], params: &[PairParams], qubits: &BTreeMap<QubitId, Qubit>) -> Result<()> {
    for p in params {
        let [a, b] = p.qubits;
        if !pairs.iter().any(|&[x, y]| (x, y) == (a, b) || (x, y) == (b, a)) {
            return Err(Error::Config(format!("CZ parameters for uncoupled pair {a}-{b}")));
        }
        if !p.qubits.contains(&p.cz.flux_qubit) {
            return Err(Error::Config(format!("CZ flux qubit {} is not in pair {a}-{b}", p.cz.flux_qubit)));
        }
        if qubits[&p.cz.flux_qubit].wiring.flux.is_none() {
            return Err(Error::Config(format!("CZ flux qubit {} has no flux channel", p.cz.flux_qubit)));
        }
        if p.cz.duration == 0 {
            return Err(Error::Config(format!("CZ on {a}-{b} has zero duration")));
        }
    }
    Ok(())
}
