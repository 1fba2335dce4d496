//! Virtual-transmon controller.
//!
//! The emulator evolves a density matrix over the qubits a sequence touches:
//! drive pulses are exact two-level rotations in the qubit frame (including
//! detuning), idle gaps apply amplitude damping and dephasing, matching flux
//! pulses apply the pair's controlled phase. Readout is terminal: the joint
//! outcome distribution is sampled per shot and mapped to IQ points through
//! the dispersive resonator response.
//!
//! Decoherence acts only between pulses; gate errors during pulses are
//! modelled by an optional per-pulse depolarizing channel.

mod density;
mod qpu;
mod timing;

pub use density::DensityMatrix;
pub use qpu::{PairModel, QubitModel, VirtualQpu};
pub use timing::{ideal_time_ns, timing_model, OverheadModel};

use std::any::Any;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::acquisition::{
    average, classify, AcquisitionResult, AcquisitionType, ExecutionOptions, ResultSet, Values,
};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C1};
use crate::platform::{Capability, Controller, ControllerOutput, ExecutionContext, Instrument, Timing};
use crate::pulse::{Pulse, PulseKind, PulseSequence};
use crate::rng::shot_rng;
use crate::sweep::{self, Sweeper};
use crate::QubitId;

pub struct Emulator {
    id: String,
    address: String,
    qpu: VirtualQpu,
    overhead: OverheadModel,
}

const CAPABILITIES: &[Capability] = &[
    Capability::ArbitraryPulseSequences,
    Capability::MultiplexedReadout,
    Capability::HardwareClassification,
    Capability::FastReset,
    Capability::DeviceSimulation,
    Capability::RtsFrequency,
    Capability::RtsAmplitude,
    Capability::RtsDuration,
    Capability::RtsStart,
    Capability::RtsRelativePhase,
    Capability::Rts2d,
    Capability::SequenceUnrolling,
    Capability::HardwareAveraging,
    Capability::Singleshot,
    Capability::IntegratedAcquisition,
    Capability::ClassifiedAcquisition,
    Capability::RawWaveformAcquisition,
];

/// Rotation produced by a drive pulse on resonance: `(axis_phase, angle)`.
///
/// The angle is `rabi_coupling * |area|` with `area` the complex integral of
/// the rendered envelope; the axis sits at `relative_phase + arg(area)` in
/// the equatorial plane.
pub fn pulse_rotation(model: &QubitModel, pulse: &Pulse, sampling_rate: f64) -> Result<(f64, f64)> {
    if pulse.kind != PulseKind::Drive {
        return Err(Error::Emulation(format!("{} pulse is not a drive pulse", pulse.kind)));
    }
    if pulse.duration == 0 {
        return Err(Error::Emulation("zero-duration drive pulse".into()));
    }
    let area = pulse.envelope(sampling_rate)?.area();
    Ok((pulse.relative_phase + area.arg(), model.rabi_coupling * area.norm()))
}

fn rz(angle: f64) -> CMatrix {
    let mut m = CMatrix::zeros(2);
    m[(0, 0)] = Complex64::from_polar(1.0, -angle / 2.0);
    m[(1, 1)] = Complex64::from_polar(1.0, angle / 2.0);
    m
}

/// Qubit-frame propagator of a drive pulse.
///
/// In the frame of the drive the Hamiltonian is
/// `(W/2)(cos p X + sin p Y) - (D/2) Z` with `W = angle / duration` and
/// `D = 2 pi (f_qubit - f_drive)`; the frame change back to the qubit
/// frame contributes `RZ(D t_end)` and `RZ(-D t_start)`.
pub fn drive_unitary(model: &QubitModel, pulse: &Pulse, sampling_rate: f64) -> Result<CMatrix> {
    let (phase, angle) = pulse_rotation(model, pulse, sampling_rate)?;
    let d = pulse.duration as f64;
    let omega = angle / d;
    let delta = 2.0 * PI * (model.frequency - pulse.frequency) * 1e-9;
    let w = omega.hypot(delta);
    if w == 0.0 {
        return Ok(CMatrix::identity(2));
    }
    let (s, c) = (w * d / 2.0).sin_cos();
    let (nx, ny, nz) = (omega * phase.cos() / w, omega * phase.sin() / w, -delta / w);
    let mi = Complex64::new(0.0, -s);
    let core = CMatrix::from_rows([
        [Complex64::new(c, 0.0) + mi * nz, mi * Complex64::new(nx, -ny)],
        [mi * Complex64::new(nx, ny), Complex64::new(c, 0.0) - mi * nz],
    ]);
    let t0 = pulse.start as f64;
    Ok(&(&rz(delta * (t0 + d)) * &core) * &rz(-delta * t0))
}

/// Deterministic part of one sequence: the state right before readout.
struct Evolved<'a> {
    rho: DensityMatrix,
    positions: BTreeMap<QubitId, usize>,
    readouts: Vec<&'a Pulse>,
}

impl Emulator {
    pub fn new(id: impl Into<String>, address: impl Into<String>, qpu: VirtualQpu, overhead: OverheadModel) -> Result<Self> {
        qpu.validate()?;
        Ok(Emulator { id: id.into(), address: address.into(), qpu, overhead })
    }

    pub fn qpu(&self) -> &VirtualQpu {
        &self.qpu
    }

    /// Mutable ground truth, for tests and what-if studies.
    pub fn qpu_mut(&mut self) -> &mut VirtualQpu {
        &mut self.qpu
    }

    pub fn overhead(&self) -> OverheadModel {
        self.overhead
    }

    fn matching_pair(&self, pulse: &Pulse) -> Result<Option<&PairModel>> {
        let mut pairs = self.qpu.pairs_of(pulse.qubit).peekable();
        if pairs.peek().is_none() {
            return Err(Error::Emulation(format!("flux pulse on qubit {} which has no coupled pair", pulse.qubit)));
        }
        let found = pairs.find(|p| p.matches(pulse.amplitude, pulse.duration));
        if found.is_none() {
            log::warn!(
                "flux pulse on qubit {} (amplitude {}, {} ns) matches no CZ activation; ignored",
                pulse.qubit,
                pulse.amplitude,
                pulse.duration
            );
        }
        Ok(found)
    }

    fn evolve<'a>(&self, seq: &'a PulseSequence, sampling_rate: f64) -> Result<Evolved<'a>> {
        let mut flux: Vec<Option<&PairModel>> = Vec::new();
        let mut touched: Vec<QubitId> = Vec::new();
        for p in seq.pulses() {
            self.qpu.qubit(p.qubit)?;
            touched.push(p.qubit);
            if p.kind == PulseKind::Flux {
                let pair = self.matching_pair(p)?;
                if let Some(pair) = pair {
                    touched.extend(pair.qubits);
                }
                flux.push(pair);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let positions: BTreeMap<QubitId, usize> = touched.iter().enumerate().map(|(k, q)| (*q, k)).collect();
        let mut rho = DensityMatrix::ground(touched.len());
        let mut clock: BTreeMap<QubitId, u64> = touched.iter().map(|q| (*q, 0)).collect();
        let mut measured: Vec<QubitId> = Vec::new();
        let mut readouts = Vec::new();
        let mut flux = flux.into_iter();

        let idle = |rho: &mut DensityMatrix, clock: &mut BTreeMap<QubitId, u64>, q: QubitId, until: u64| {
            let c = clock.get_mut(&q).expect("touched qubit");
            if until > *c {
                let m = &self.qpu.qubits[&q];
                let dt = (until - *c) as f64;
                rho.relax(positions[&q], 1.0 - (-dt / m.t1).exp(), (-dt / m.t2).exp());
                *c = until;
            }
        };

        for p in seq.pulses() {
            let pair = if p.kind == PulseKind::Flux { flux.next().expect("one entry per flux pulse") } else { None };
            let mut involved = vec![p.qubit];
            if let Some(pair) = pair {
                involved.extend(pair.qubits);
            }
            if let Some(q) = involved.iter().find(|q| measured.contains(q)) {
                return Err(Error::Emulation(format!(
                    "pulse at {} ns acts on qubit {q} after its readout; readout must be terminal",
                    p.start
                )));
            }
            match p.kind {
                PulseKind::Drive => {
                    let model = &self.qpu.qubits[&p.qubit];
                    idle(&mut rho, &mut clock, p.qubit, p.start);
                    let pos = positions[&p.qubit];
                    rho.apply_1q(pos, &drive_unitary(model, p, sampling_rate)?);
                    if model.depolarizing > 0.0 {
                        rho.depolarize(pos, model.depolarizing);
                    }
                    clock.insert(p.qubit, p.finish());
                }
                PulseKind::Flux => {
                    if let Some(pair) = pair {
                        let [a, b] = pair.qubits;
                        idle(&mut rho, &mut clock, a, p.start);
                        idle(&mut rho, &mut clock, b, p.start);
                        let za = Complex64::from_polar(1.0, pair.dynamic_phases[0]);
                        let zb = Complex64::from_polar(1.0, pair.dynamic_phases[1]);
                        let cp = Complex64::from_polar(1.0, pair.conditional_phase);
                        rho.apply_diagonal_2q(positions[&a], positions[&b], [C1, zb, za, za * zb * cp]);
                        clock.insert(a, p.finish());
                        clock.insert(b, p.finish());
                    }
                }
                PulseKind::Readout => {
                    idle(&mut rho, &mut clock, p.qubit, p.start);
                    measured.push(p.qubit);
                    readouts.push(p);
                }
            }
        }
        Ok(Evolved { rho, positions, readouts })
    }

    /// Shots of one sequence at random-stream index `point`. Returns, per
    /// acquisition id, the shot-major values and the samples per shot.
    fn run_point(
        &self,
        ctx: &ExecutionContext,
        seq: &PulseSequence,
        options: &ExecutionOptions,
        point: u64,
    ) -> Result<PointData> {
        let ev = self.evolve(seq, ctx.sampling_rate)?;
        if ev.readouts.is_empty() {
            return Ok(BTreeMap::new());
        }
        let positions: Vec<usize> = ev.readouts.iter().map(|p| ev.positions[&p.qubit]).collect();
        let probs = ev.rho.marginal(&positions);
        let m = ev.readouts.len();

        let mut discriminators = Vec::with_capacity(m);
        let mut samples = Vec::with_capacity(m);
        for p in &ev.readouts {
            if options.acquisition == AcquisitionType::Classified {
                let d = ctx.classification.get(&p.qubit).ok_or_else(|| {
                    Error::Emulation(format!("no discriminator calibrated for qubit {}", p.qubit))
                })?;
                discriminators.push(Some(*d));
            } else {
                discriminators.push(None);
            }
            let n = (p.duration as f64 * ctx.sampling_rate * 1e-9).round() as usize;
            samples.push(if options.acquisition == AcquisitionType::Raw { n.max(1) } else { 1 });
        }

        let nshots = options.nshots as usize;
        let mut iq: Vec<Vec<[f64; 2]>> = ev.readouts.iter().zip(&samples).map(|(_, n)| Vec::with_capacity(nshots * n)).collect();
        let mut bits: Vec<Vec<u8>> = vec![Vec::with_capacity(nshots); m];
        for shot in 0..nshots {
            let mut rng = shot_rng(self.qpu.seed, point, shot as u64);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut outcome = probs.len() - 1;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    outcome = k;
                    break;
                }
            }
            for (k, p) in ev.readouts.iter().enumerate() {
                let model = &self.qpu.qubits[&p.qubit];
                let state = ((outcome >> (m - 1 - k)) & 1) as u8;
                let flip: f64 = rng.random();
                let reported = match state {
                    0 if flip < model.e01 => 1,
                    1 if flip < model.e10 => 0,
                    s => s,
                };
                let mean = model.blob_mean(reported, p.frequency, p.amplitude);
                match options.acquisition {
                    AcquisitionType::Raw => {
                        let n = samples[k];
                        let sigma = model.noise_sigma * (n as f64).sqrt();
                        let lo = ctx.lo_frequency.get(&p.channel).copied().unwrap_or(0.0);
                        let step = 2.0 * PI * (p.frequency - lo) / ctx.sampling_rate;
                        for j in 0..n {
                            let tone = mean * Complex64::from_polar(1.0, step * j as f64);
                            let (ni, nq): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                            iq[k].push([tone.re + sigma * ni, tone.im + sigma * nq]);
                        }
                    }
                    _ => {
                        let (ni, nq): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                        let point = Complex64::new(mean.re + model.noise_sigma * ni, mean.im + model.noise_sigma * nq);
                        match discriminators[k] {
                            Some(d) => bits[k].push(classify(point, &d)),
                            None => iq[k].push([point.re, point.im]),
                        }
                    }
                }
            }
        }

        let mut out = BTreeMap::new();
        for (k, p) in ev.readouts.iter().enumerate() {
            let id = p.acquisition_id.expect("readout pulses carry an acquisition id");
            let values = match options.acquisition {
                AcquisitionType::Classified => Values::Bits(std::mem::take(&mut bits[k])),
                _ => Values::Iq(std::mem::take(&mut iq[k])),
            };
            out.insert(id, (values, samples[k]));
        }
        Ok(out)
    }

    fn run_all(
        &self,
        ctx: &ExecutionContext,
        seqs: &[PulseSequence],
        options: &ExecutionOptions,
    ) -> Result<Vec<PointData>> {
        let first = options.point_offset;
        map_indexed(seqs, |k, s| self.run_point(ctx, s, options, first + k as u64)).into_iter().collect()
    }
}

type PointData = BTreeMap<u32, (Values, usize)>;

/// Lay per-point data out along the sweep `axes`.
fn assemble(per_point: &[PointData], axes: &[usize], options: &ExecutionOptions) -> Result<ResultSet> {
    let mut out = ResultSet::new();
    let Some(reference) = per_point.first() else { return Ok(out) };
    for (&id, (_, n)) in reference {
        let mut data: Option<Values> = None;
        for point in per_point {
            let (values, n_here) = point
                .get(&id)
                .ok_or_else(|| Error::Emulation(format!("acquisition {id} missing at some sweep points")))?;
            if n_here != n {
                return Err(Error::Emulation("raw acquisition length changes across the sweep".into()));
            }
            match (&mut data, values) {
                (None, v) => data = Some(v.clone()),
                (Some(Values::Iq(a)), Values::Iq(b)) => a.extend_from_slice(b),
                (Some(Values::Bits(a)), Values::Bits(b)) => a.extend_from_slice(b),
                _ => unreachable!("one acquisition mode per execution"),
            }
        }
        let mut shape = axes.to_vec();
        shape.push(options.nshots as usize);
        if options.acquisition == AcquisitionType::Raw {
            shape.push(*n);
        }
        let single = AcquisitionResult::new(options.acquisition, false, axes.len(), shape, data.expect("at least one point"))?;
        out.insert(id, if options.averaged() { average(&single)? } else { single });
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn map_indexed<T: Sync, R: Send>(items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(k, t)| f(k, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, R>(items: &[T], f: impl Fn(usize, &T) -> R) -> Vec<R> {
    items.iter().enumerate().map(|(k, t)| f(k, t)).collect()
}

impl Controller for Emulator {
    fn execute(
        &self,
        ctx: &ExecutionContext,
        batch: &[PulseSequence],
        sweepers: &[Sweeper],
        options: &ExecutionOptions,
    ) -> Result<ControllerOutput> {
        options.validate()?;
        let timing = self.timing(batch, sweepers, options)?;
        let results = if sweepers.is_empty() {
            // one round trip, but every sequence keeps its own result
            let per_seq = self.run_all(ctx, batch, options)?;
            per_seq.iter().map(|p| assemble(std::slice::from_ref(p), &[], options)).collect::<Result<Vec<_>>>()?
        } else {
            if batch.len() != 1 {
                return Err(Error::Sweep("sweeps run on exactly one sequence".into()));
            }
            let points = sweep::expand(&batch[0], sweepers)?;
            vec![assemble(&self.run_all(ctx, &points, options)?, &sweep::shape(sweepers), options)?]
        };
        Ok(ControllerOutput { results, timing })
    }

    fn timing(&self, batch: &[PulseSequence], sweepers: &[Sweeper], options: &ExecutionOptions) -> Result<Timing> {
        let durations: Vec<u64> = if sweepers.is_empty() {
            batch.iter().map(PulseSequence::duration).collect()
        } else {
            let seq = batch.first().ok_or_else(|| Error::Sweep("no sequence to sweep".into()))?;
            sweep::expand(seq, sweepers)?.iter().map(PulseSequence::duration).collect()
        };
        Ok(timing_model(&durations, options, &self.overhead))
    }

    fn set_seed(&mut self, seed: u64) {
        self.qpu.seed = seed;
    }
}

impl Instrument for Emulator {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> &'static str {
        "emulator"
    }

    fn address(&self) -> &str {
        &self.address
    }

    fn capabilities(&self) -> &'static [Capability] {
        CAPABILITIES
    }

    fn settings(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.qpu.seed,
            "qubits": self.qpu.qubits.len(),
            "overhead": self.overhead,
        })
    }

    fn as_controller(&self) -> Option<&dyn Controller> {
        Some(self)
    }

    fn as_controller_mut(&mut self) -> Option<&mut dyn Controller> {
        Some(self)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
