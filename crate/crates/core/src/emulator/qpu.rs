use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::QubitId;

/// Physical ground truth of one emulated transmon and its readout resonator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitModel {
    /// Qubit transition frequency, Hz.
    pub frequency: f64,
    /// Resonator dip frequency with the qubit in `|0>`, Hz.
    pub resonator_frequency: f64,
    /// Resonator linewidth (kappa), Hz.
    pub resonator_linewidth: f64,
    /// Dispersive shift (chi), Hz. The `|1>` dip sits `2 chi` below the `|0>` dip.
    pub dispersive_shift: f64,
    /// Rotation angle per unit of envelope area, rad / (amplitude ns).
    pub rabi_coupling: f64,
    /// Energy relaxation time, ns.
    pub t1: f64,
    /// Coherence time, ns.
    pub t2: f64,
    /// IQ voltage per unit readout amplitude at full transmission.
    pub readout_gain: f64,
    /// Standard deviation of the integrated IQ noise per quadrature.
    pub noise_sigma: f64,
    /// Probability of reporting 1 when the qubit is in `|0>`.
    #[serde(default)]
    pub e01: f64,
    /// Probability of reporting 0 when the qubit is in `|1>`.
    #[serde(default)]
    pub e10: f64,
    /// Depolarizing strength applied after every drive pulse.
    #[serde(default)]
    pub depolarizing: f64,
}

/// CZ activation of a coupled pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub qubits: [QubitId; 2],
    /// Flux amplitude that activates the interaction.
    pub cz_amplitude: f64,
    /// Flux duration, ns.
    pub cz_duration: u64,
    /// Phase acquired by `|11>`.
    pub conditional_phase: f64,
    /// Single-qubit Z phases acquired during the flux pulse, in the order of
    /// `qubits`.
    #[serde(default)]
    pub dynamic_phases: [f64; 2],
}

impl PairModel {
    pub fn contains(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }

    /// Whether a flux pulse with these settings triggers the gate: amplitude
    /// within 1 %, exact duration.
    pub fn matches(&self, amplitude: f64, duration: u64) -> bool {
        duration == self.cz_duration && (amplitude - self.cz_amplitude).abs() <= 0.01 * self.cz_amplitude.abs()
    }
}

/// Ground truth of the emulated device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualQpu {
    pub seed: u64,
    pub qubits: BTreeMap<QubitId, QubitModel>,
    #[serde(default)]
    pub pairs: Vec<PairModel>,
}

impl VirtualQpu {
    pub fn validate(&self) -> Result<()> {
        for (id, q) in &self.qubits {
            let bad = |what: &str| Err(Error::Config(format!("virtual qubit {id}: {what}")));
            if !(q.resonator_linewidth > 0.0) {
                return bad("resonator linewidth must be positive");
            }
            if !(q.noise_sigma >= 0.0) {
                return bad("noise sigma must be non-negative");
            }
            if !(q.t1 > 0.0 && q.t2 > 0.0) {
                return bad("T1 and T2 must be positive");
            }
            if q.t2 > 2.0 * q.t1 {
                return bad("T2 exceeds 2 T1");
            }
            if !(0.0..0.5).contains(&q.e01) || !(0.0..0.5).contains(&q.e10) {
                return bad("assignment errors must lie in [0, 0.5)");
            }
            if !(0.0..1.0).contains(&q.depolarizing) {
                return bad("depolarizing strength must lie in [0, 1)");
            }
        }
        for p in &self.pairs {
            let [a, b] = p.qubits;
            if a == b || !self.qubits.contains_key(&a) || !self.qubits.contains_key(&b) {
                return Err(Error::Config(format!("virtual pair {a}-{b} references unknown qubits")));
            }
        }
        Ok(())
    }

    pub fn qubit(&self, id: QubitId) -> Result<&QubitModel> {
        self.qubits.get(&id).ok_or_else(|| Error::Emulation(format!("qubit {id} is not emulated")))
    }

    pub fn pairs_of(&self, q: QubitId) -> impl Iterator<Item = &PairModel> {
        self.pairs.iter().filter(move |p| p.contains(q))
    }
}

impl QubitModel {
    /// Resonator transmission `S21(f) = 1 - (k/2) / (k/2 + i (f - f_s))`
    /// where `f_s` is the dip for the given qubit state.
    pub fn resonator_response(&self, state: u8, frequency: f64) -> Complex64 {
        let dip = self.resonator_frequency - 2.0 * self.dispersive_shift * f64::from(state);
        let half = Complex64::new(self.resonator_linewidth / 2.0, 0.0);
        Complex64::new(1.0, 0.0) - half / (half + Complex64::new(0.0, frequency - dip))
    }

    /// Mean integrated IQ point for a readout at `frequency` and `amplitude`.
    pub fn blob_mean(&self, state: u8, frequency: f64, amplitude: f64) -> Complex64 {
        self.resonator_response(state, frequency) * (amplitude * self.readout_gain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> QubitModel {
        QubitModel {
            frequency: 5e9,
            resonator_frequency: 7e9,
            resonator_linewidth: 2e6,
            dispersive_shift: 0.5e6,
            rabi_coupling: 0.1,
            t1: 30e3,
            t2: 20e3,
            readout_gain: 1.0,
            noise_sigma: 0.01,
            e01: 0.0,
            e10: 0.0,
            depolarizing: 0.0,
        }
    }

    #[test]
    fn resonator_dips() {
        let q = model();
        assert!(q.resonator_response(0, 7e9).norm() < 1e-12);
        assert!(q.resonator_response(1, 7e9 - 1e6).norm() < 1e-12);
        // half depth one half-linewidth away: |1 - 1/(1+i)| = 1/sqrt(2)
        assert!((q.resonator_response(0, 7e9 + 1e6).norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((q.resonator_response(0, 9e9).norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn validation() {
        let mut qpu = VirtualQpu { seed: 0, qubits: BTreeMap::from([(0, model())]), pairs: vec![] };
        assert!(qpu.validate().is_ok());
        qpu.qubits.get_mut(&0).unwrap().t2 = 70e3;
        assert!(qpu.validate().is_err());
        qpu.qubits.get_mut(&0).unwrap().t2 = 20e3;
        qpu.pairs.push(PairModel { qubits: [0, 1], cz_amplitude: 0.3, cz_duration: 40, conditional_phase: 3.1, dynamic_phases: [0.0; 2] });
        assert!(qpu.validate().is_err());
    }

    #[test]
    fn cz_matching_window() {
        let p = PairModel { qubits: [0, 1], cz_amplitude: 0.5, cz_duration: 40, conditional_phase: 3.1, dynamic_phases: [0.0; 2] };
        assert!(p.matches(0.504, 40));
        assert!(!p.matches(0.506, 40));
        assert!(!p.matches(0.5, 44));
    }
}
