//! Shipped virtual devices and their matching platform configurations.
//!
//! Calibrated parameters in the configs equal the device truth, so every
//! calibration routine starts from a working point.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::acquisition::Classification;
use crate::emulator::{OverheadModel, PairModel, QubitModel, VirtualQpu};
use crate::platform::{
    ChannelConfig, CzParams, InstrumentConfig, PairParams, Parameters, PiPulse, PlatformConfig, Port, QpuSource,
    QubitParams, QubitWiring, ReadoutPulse, Settings,
};
use crate::pulse::{render_envelope, EnvelopeShape};
use crate::QubitId;

pub const SAMPLING_RATE: f64 = 1e9;
pub const GRANULARITY_NS: u64 = 4;
pub const PI_AMPLITUDE: f64 = 0.4;
pub const PI_DURATION: u64 = 40;
pub const READOUT_AMPLITUDE: f64 = 0.5;
pub const READOUT_DURATION: u64 = 2000;
pub const CZ_AMPLITUDE: f64 = 0.35;
pub const CZ_DURATION: u64 = 40;
/// Per-pulse depolarizing strength of the single-qubit device; two pulses
/// per Clifford give a survival decay of about 0.9971 per Clifford.
pub const SINGLE_QUBIT_DEPOLARIZING: f64 = 0.00145;

const CONTROLLER: &str = "emulator";
const READOUT_LO: &str = "lo_readout";

/// Shipped device layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    SingleQubit,
    /// Centre qubit 0 coupled to leaves 1..=4.
    Star5,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::SingleQubit, Preset::Star5];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SingleQubit => "single_qubit",
            Preset::Star5 => "star5",
        }
    }

    /// File name the device truth is shipped under, next to the platform file.
    pub fn qpu_file(self) -> String {
        format!("{}_qpu.json", self.name())
    }

    pub fn n_qubits(self) -> usize {
        match self {
            Preset::SingleQubit => 1,
            Preset::Star5 => 5,
        }
    }

    pub fn pairs(self) -> Vec<[QubitId; 2]> {
        match self {
            Preset::SingleQubit => vec![],
            Preset::Star5 => (1..5).map(|l| [0, l]).collect(),
        }
    }

    pub fn qpu(self) -> VirtualQpu {
        let g = rabi_coupling_for(PI_AMPLITUDE);
        let qubits = (0..self.n_qubits())
            .map(|q| {
                let k = q as f64;
                let model = QubitModel {
                    frequency: 5.0e9 + 0.1e9 * k,
                    resonator_frequency: 7.0e9 + 0.05e9 * k,
                    resonator_linewidth: 2e6,
                    dispersive_shift: 0.5e6,
                    rabi_coupling: g,
                    t1: 30e3 + 2e3 * k,
                    t2: 20e3 + 1e3 * k,
                    readout_gain: 1.0,
                    noise_sigma: 0.08,
                    e01: 0.0,
                    e10: 0.0,
                    depolarizing: if self == Preset::SingleQubit { SINGLE_QUBIT_DEPOLARIZING } else { 0.0 },
                };
                (q, model)
            })
            .collect();
        let pairs = self
            .pairs()
            .into_iter()
            .map(|qubits| {
                let l = qubits[1] as f64;
                PairModel {
                    qubits,
                    cz_amplitude: CZ_AMPLITUDE,
                    cz_duration: CZ_DURATION,
                    conditional_phase: PI,
                    dynamic_phases: [0.1 * l, -0.05 * l],
                }
            })
            .collect();
        VirtualQpu { seed: 0, qubits, pairs }
    }

    /// Platform config whose parameters match [`Preset::qpu`] exactly.
    pub fn config(self, qpu: QpuSource) -> PlatformConfig {
        let truth = self.qpu();
        let mut instruments = BTreeMap::new();
        instruments.insert(
            CONTROLLER.to_string(),
            InstrumentConfig::Emulator {
                address: "emulator://localhost".into(),
                qpu,
                overhead: OverheadModel { instrument_ns: 50_000_000, compile_ns_per_point: 20_000 },
            },
        );
        instruments.insert(
            READOUT_LO.to_string(),
            InstrumentConfig::LocalOscillator { address: "lo://readout".into(), frequency: 7.2e9, power: 10.0 },
        );

        let port = |index| Port { instrument: CONTROLLER.into(), index };
        let mut channels = BTreeMap::new();
        channels.insert("readout".to_string(), ChannelConfig { port: port(0), local_oscillator: Some(READOUT_LO.into()) });
        channels.insert("feedback".to_string(), ChannelConfig { port: port(1), local_oscillator: None });
        let mut qubits = BTreeMap::new();
        let flux_qubits: Vec<QubitId> = self.pairs().iter().map(|p| p[1]).collect();
        for q in 0..self.n_qubits() {
            let drive = format!("drive_{q}");
            channels.insert(drive.clone(), ChannelConfig { port: port(2 + 2 * q as u32), local_oscillator: None });
            let flux = flux_qubits.contains(&q).then(|| {
                let name = format!("flux_{q}");
                channels.insert(name.clone(), ChannelConfig { port: port(3 + 2 * q as u32), local_oscillator: None });
                name
            });
            qubits.insert(
                q,
                QubitWiring {
                    readout: Some("readout".into()),
                    feedback: Some("feedback".into()),
                    drive: Some(drive),
                    flux,
                    twpa: None,
                },
            );
        }

        let qubit_params = truth
            .qubits
            .iter()
            .map(|(&q, m)| {
                let m0 = m.blob_mean(0, m.resonator_frequency, READOUT_AMPLITUDE);
                let m1 = m.blob_mean(1, m.resonator_frequency, READOUT_AMPLITUDE);
                let params = QubitParams {
                    bare_frequency: m.resonator_frequency - m.dispersive_shift,
                    drive_frequency: m.frequency,
                    readout_frequency: m.resonator_frequency,
                    t1: m.t1,
                    t2: m.t2,
                    pi_pulse: PiPulse { amplitude: PI_AMPLITUDE, duration: PI_DURATION, shape: EnvelopeShape::gaussian() },
                    readout_pulse: ReadoutPulse { amplitude: READOUT_AMPLITUDE, duration: READOUT_DURATION },
                    classification: Classification::from_means(m0, m1),
                };
                (q, params)
            })
            .collect();
        let pair_params = truth
            .pairs
            .iter()
            .map(|p| PairParams {
                qubits: p.qubits,
                cz: CzParams {
                    flux_qubit: p.qubits[1],
                    amplitude: p.cz_amplitude,
                    duration: p.cz_duration,
                    phase_corrections: [-p.dynamic_phases[0], -p.dynamic_phases[1]],
                },
            })
            .collect();

        PlatformConfig {
            name: self.name().into(),
            instruments,
            channels,
            qubits,
            pairs: self.pairs(),
            parameters: Parameters {
                settings: Settings { sampling_rate: SAMPLING_RATE, granularity_ns: GRANULARITY_NS },
                qubits: qubit_params,
                pairs: pair_params,
            },
        }
    }

    /// Config with the device truth inline, for building in memory.
    pub fn inline_config(self) -> PlatformConfig {
        self.config(QpuSource::Inline(Box::new(self.qpu())))
    }

    /// Config referencing the shipped device file.
    pub fn file_config(self) -> PlatformConfig {
        self.config(QpuSource::Path(PathBuf::from(self.qpu_file())))
    }
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown preset `{s}`")))
    }
}

/// Coupling that makes a default Gaussian pulse of [`PI_DURATION`] ns and the
/// given amplitude a pi rotation. Rounded to 12 significant digits so the
/// shipped files are stable.
pub fn rabi_coupling_for(pi_amplitude: f64) -> f64 {
    let area = render_envelope(EnvelopeShape::gaussian(), pi_amplitude, PI_DURATION as f64, SAMPLING_RATE)
        .expect("valid default envelope")
        .area()
        .norm();
    let g = PI / area;
    let scale = 10f64.powi(11 - g.abs().log10().floor() as i32);
    (g * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::Platform;

    #[test]
    fn presets_build() {
        for p in Preset::ALL {
            let platform = Platform::build(p.inline_config(), None).unwrap();
            assert_eq!(platform.n_qubits(), p.n_qubits());
            assert_eq!(platform.topology().edges().len(), p.pairs().len());
        }
    }

    #[test]
    fn coupling_gives_pi() {
        let g = rabi_coupling_for(PI_AMPLITUDE);
        let area = render_envelope(EnvelopeShape::gaussian(), PI_AMPLITUDE, 40.0, SAMPLING_RATE).unwrap().area();
        assert!((g * area.norm() - PI).abs() < 1e-9);
    }
}
