//! Lowering of native-gate circuits to pulse sequences.
//!
//! Z rotations are virtual: `RZ(t)` adds `t` to a per-qubit phase ledger and
//! every later drive pulse on that qubit is emitted with
//! `relative_phase = -ledger`. A pulse of phase `p` rotates about
//! `cos(p) X + sin(p) Y`, i.e. implements `RZ(p) RX(a) RZ(-p)`, so the
//! physical sequence equals the circuit up to Z rotations right before
//! measurement, which do not change outcomes.
//!
//! `U3(t, p, l)` is played as `RZ(l)`, `RX(pi/2)`, `RZ(t)`, `RX(-pi/2)`,
//! `RZ(p)` in time order, so it always costs two drive pulses.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::pulse::{Pulse, PulseSequence};
use crate::QubitId;

/// Which qubit a readout acquisition belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub acquisition_id: u32,
    pub qubit: QubitId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub sequence: PulseSequence,
    /// In measurement order.
    pub measurements: Vec<Measurement>,
    /// Virtual Z phase left on each touched qubit at the end.
    pub phases: BTreeMap<QubitId, f64>,
}

impl Compiled {
    pub fn acquisition_of(&self, qubit: QubitId) -> Option<u32> {
        self.measurements.iter().find(|m| m.qubit == qubit).map(|m| m.acquisition_id)
    }

    /// `{duration, pulses, measurements, phases}`; `phases` is keyed by qubit.
    pub fn to_json(&self) -> Result<String> {
        let pulses: Vec<&Pulse> = self.sequence.pulses().collect();
        let v = serde_json::json!({
            "duration": self.sequence.duration(),
            "pulses": pulses,
            "measurements": self.measurements,
            "phases": self.phases,
        });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

struct Scheduler<'a> {
    platform: &'a Platform,
    granularity: u64,
    cursor: BTreeMap<QubitId, u64>,
    ledger: BTreeMap<QubitId, f64>,
    sequence: PulseSequence,
    measurements: Vec<Measurement>,
}

impl<'a> Scheduler<'a> {
    fn slot(&self, qubits: &[QubitId]) -> u64 {
        let t = qubits.iter().map(|q| self.cursor.get(q).copied().unwrap_or(0)).max().unwrap_or(0);
        t.div_ceil(self.granularity) * self.granularity
    }

    fn rz(&mut self, q: QubitId, theta: f64) {
        *self.ledger.entry(q).or_insert(0.0) += theta;
    }

    fn rx(&mut self, q: QubitId, theta: f64) -> Result<()> {
        let theta = wrap_angle(theta);
        if theta == 0.0 {
            return Ok(());
        }
        let qubit = self.platform.qubit(q)?;
        let start = self.slot(&[q]);
        let pi = qubit.pi_pulse(start)?;
        let mut phase = -self.ledger.get(&q).copied().unwrap_or(0.0);
        if theta < 0.0 {
            phase += PI;
        }
        let amplitude = pi.amplitude * (theta.abs() / PI);
        let pulse = pi.with_amplitude(amplitude).with_phase(phase);
        self.cursor.insert(q, pulse.finish());
        self.sequence.add(pulse)?;
        Ok(())
    }

    fn cz(&mut self, a: QubitId, b: QubitId) -> Result<()> {
        let pair = self
            .platform
            .cz(a, b)
            .ok_or_else(|| Error::Compile(format!("no CZ calibration for pair {a}-{b}")))?
            .clone();
        let start = self.slot(&[a, b]);
        let flux = self.platform.qubit(pair.cz.flux_qubit)?;
        let pulse = Pulse::flux(flux.id, flux.flux_channel()?, start, pair.cz.duration).with_amplitude(pair.cz.amplitude);
        let finish = pulse.finish();
        self.sequence.add(pulse)?;
        self.cursor.insert(a, finish);
        self.cursor.insert(b, finish);
        for (q, correction) in pair.qubits.iter().zip(pair.cz.phase_corrections) {
            self.rz(*q, correction);
        }
        Ok(())
    }

    fn measure(&mut self, qubits: &[QubitId]) -> Result<()> {
        let start = self.slot(qubits);
        for &q in qubits {
            let acquisition_id = self.measurements.len() as u32;
            let pulse = self.platform.qubit(q)?.readout_pulse(start, acquisition_id)?;
            self.cursor.insert(q, pulse.finish());
            self.sequence.add(pulse)?;
            self.measurements.push(Measurement { acquisition_id, qubit: q });
        }
        Ok(())
    }

    fn gate(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::X(q) => self.rx(q, PI),
            Gate::Rx(q, theta) => self.rx(q, theta),
            Gate::Z(q) => {
                self.rz(q, PI);
                Ok(())
            }
            Gate::Rz(q, theta) => {
                self.rz(q, theta);
                Ok(())
            }
            Gate::U3(q, theta, phi, lambda) => {
                self.rz(q, lambda);
                self.rx(q, FRAC_PI_2)?;
                self.rz(q, theta);
                self.rx(q, -FRAC_PI_2)?;
                self.rz(q, phi);
                Ok(())
            }
            Gate::Cz(a, b) => self.cz(a, b),
            Gate::Measure(ref qs) => self.measure(qs),
            Gate::ISwap(..) => Err(Error::Compile("the platform has no iSWAP calibration".into())),
            _ => Err(Error::Compile(format!("`{}` is not a native gate; unroll the circuit first", gate.name()))),
        }
    }
}

/// Schedule a native circuit on `platform`. Circuit qubit `k` is platform
/// qubit `k`.
pub fn compile(circuit: &Circuit, platform: &Platform) -> Result<Compiled> {
    if circuit.n_qubits() > platform.n_qubits() {
        return Err(Error::Compile(format!(
            "circuit uses {} qubits, platform has {}",
            circuit.n_qubits(),
            platform.n_qubits()
        )));
    }
    let mut s = Scheduler {
        platform,
        granularity: platform.settings().granularity_ns.max(1),
        cursor: BTreeMap::new(),
        ledger: BTreeMap::new(),
        sequence: PulseSequence::new(),
        measurements: Vec::new(),
    };
    for gate in circuit.gates() {
        s.gate(gate)?;
    }
    Ok(Compiled { sequence: s.sequence, measurements: s.measurements, phases: s.ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;
    use crate::pulse::PulseKind;

    fn platform() -> Platform {
        Platform::build(Preset::Star5.inline_config(), None).unwrap()
    }

    fn circuit(n: usize, gates: Vec<Gate>) -> Circuit {
        gates.into_iter().fold(Circuit::new(n), |c, g| c.with(g).unwrap())
    }

    #[test]
    fn measure_only() {
        let p = platform();
        let c = compile(&circuit(1, vec![Gate::Measure(vec![0])]), &p).unwrap();
        assert_eq!(c.sequence.len(), 1);
        assert_eq!(c.sequence.duration(), p.qubit(0).unwrap().params.readout_pulse.duration);
        assert_eq!(c.measurements, vec![Measurement { acquisition_id: 0, qubit: 0 }]);
    }

    #[test]
    fn x_then_measure_is_serialized() {
        let p = platform();
        let c = compile(&circuit(1, vec![Gate::X(0), Gate::Measure(vec![0])]), &p).unwrap();
        let pulses: Vec<_> = c.sequence.pulses().collect();
        assert_eq!(pulses[0].kind, PulseKind::Drive);
        assert_eq!(pulses[0].amplitude, p.qubit(0).unwrap().params.pi_pulse.amplitude);
        assert_eq!(pulses[1].kind, PulseKind::Readout);
        assert_eq!(pulses[1].start, pulses[0].finish());
    }

    #[test]
    fn rz_only_shifts_the_phase() {
        let p = platform();
        let plain = compile(&circuit(1, vec![Gate::Rx(0, FRAC_PI_2)]), &p).unwrap();
        let shifted = compile(&circuit(1, vec![Gate::Rz(0, 0.7), Gate::Rx(0, FRAC_PI_2)]), &p).unwrap();
        let a = plain.sequence.pulses().next().unwrap().clone();
        let b = shifted.sequence.pulses().next().unwrap().clone();
        assert_eq!(b.relative_phase, a.relative_phase - 0.7);
        assert_eq!(Pulse { relative_phase: a.relative_phase, ..b }, a);
    }

    #[test]
    fn u3_costs_two_pulses() {
        let p = platform();
        for (t, ph, l) in [(0.0, 0.0, 0.0), (1.0, 2.0, 3.0), (PI, 0.0, PI)] {
            let c = compile(&circuit(1, vec![Gate::U3(0, t, ph, l)]), &p).unwrap();
            assert_eq!(c.sequence.len(), 2);
        }
    }

    #[test]
    fn rz_and_z_emit_nothing() {
        let p = platform();
        let c = compile(&circuit(1, vec![Gate::Rz(0, 1.0), Gate::Z(0)]), &p).unwrap();
        assert!(c.sequence.is_empty());
        assert!((c.phases[&0] - (1.0 + PI)).abs() < 1e-15);
    }

    #[test]
    fn cz_synchronizes_and_corrects() {
        let p = platform();
        let c = compile(&circuit(2, vec![Gate::X(1), Gate::Cz(0, 1), Gate::X(0)]), &p).unwrap();
        let pulses: Vec<_> = c.sequence.pulses().cloned().collect();
        let flux = pulses.iter().find(|p| p.kind == PulseKind::Flux).unwrap();
        assert_eq!(flux.qubit, 1);
        assert_eq!(flux.start, 40);
        let x0 = pulses.iter().find(|p| p.qubit == 0 && p.kind == PulseKind::Drive).unwrap();
        assert_eq!(x0.start, flux.finish());
        let corr = p.cz(0, 1).unwrap().cz.phase_corrections;
        assert!((x0.relative_phase + corr[0]).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_native_and_uncalibrated() {
        let p = platform();
        assert!(matches!(compile(&circuit(1, vec![Gate::H(0)]), &p), Err(Error::Compile(_))));
        assert!(matches!(compile(&circuit(2, vec![Gate::ISwap(0, 1)]), &p), Err(Error::Compile(_))));
        assert!(matches!(compile(&circuit(3, vec![Gate::Cz(1, 2)]), &p), Err(Error::Compile(_))));
    }

    #[test]
    fn negative_angle_flips_axis() {
        let p = platform();
        let c = compile(&circuit(1, vec![Gate::Rx(0, -FRAC_PI_2)]), &p).unwrap();
        let pulse = c.sequence.pulses().next().unwrap();
        assert!((pulse.relative_phase - PI).abs() < 1e-15);
        assert!((pulse.amplitude - 0.2).abs() < 1e-15);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
