//! Pulses, envelope shapes and pulse sequences.
//!
//! Times are integer nanoseconds measured from the start of the sequence.
//! Amplitudes are normalized to the full-scale output of the instrument, so
//! every pulse satisfies `|amplitude| <= 1`.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::QubitId;

/// Default duration/sigma ratio for Gaussian and DRAG envelopes.
pub const DEFAULT_REL_SIGMA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Drive,
    Readout,
    Flux,
}

impl fmt::Display for PulseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseKind::Drive => write!(f, "drive"),
            PulseKind::Readout => write!(f, "readout"),
            PulseKind::Flux => write!(f, "flux"),
        }
    }
}

/// Envelope of a pulse.
///
/// `rel_sigma` is the ratio `duration / sigma`. The DRAG quadrature is
/// `beta * d(i)/dt` with `t` in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeShape {
    #[default]
    Rectangular,
    Gaussian { rel_sigma: f64 },
    Drag { rel_sigma: f64, beta: f64 },
}

impl EnvelopeShape {
    pub fn gaussian() -> Self {
        EnvelopeShape::Gaussian { rel_sigma: DEFAULT_REL_SIGMA }
    }

    pub fn drag(beta: f64) -> Self {
        EnvelopeShape::Drag { rel_sigma: DEFAULT_REL_SIGMA, beta }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnvelopeShape::Rectangular => Ok(()),
            EnvelopeShape::Gaussian { rel_sigma } | EnvelopeShape::Drag { rel_sigma, .. } => {
                if rel_sigma.is_finite() && rel_sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!("rel_sigma must be positive, got {rel_sigma}")))
                }
            }
        }
    }

    fn rank(&self) -> u8 {
        match self {
            EnvelopeShape::Rectangular => 0,
            EnvelopeShape::Gaussian { .. } => 1,
            EnvelopeShape::Drag { .. } => 2,
        }
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        use EnvelopeShape::*;
        match (self, other) {
            (Gaussian { rel_sigma: a }, Gaussian { rel_sigma: b }) => a.total_cmp(b),
            (Drag { rel_sigma: a, beta: x }, Drag { rel_sigma: b, beta: y }) => {
                a.total_cmp(b).then(x.total_cmp(y))
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

/// Sampled complex envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub i: Vec<f64>,
    pub q: Vec<f64>,
    /// Samples per second.
    pub sampling_rate: f64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    /// Sample period in nanoseconds.
    pub fn dt_ns(&self) -> f64 {
        1e9 / self.sampling_rate
    }

    /// Time integral of `i + iq`, in amplitude x nanoseconds.
    pub fn area(&self) -> Complex64 {
        let dt = self.dt_ns();
        let (si, sq) = self
            .i
            .iter()
            .zip(&self.q)
            .fold((0.0, 0.0), |(a, b), (i, q)| (a + i, b + q));
        Complex64::new(si * dt, sq * dt)
    }

    pub fn peak_i(&self) -> f64 {
        self.i.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Discretize an envelope at `sampling_rate` (samples/s) over `duration_ns`.
///
/// Sample `k` sits at `t = k / sampling_rate`. Gaussian and DRAG envelopes
/// are centred at `duration / 2` with `sigma = duration / rel_sigma` and are
/// rescaled so that the largest in-phase sample equals `|amplitude|`.
pub fn render_envelope(
    shape: EnvelopeShape,
    amplitude: f64,
    duration_ns: f64,
    sampling_rate: f64,
) -> Result<Waveform> {
    if !(duration_ns.is_finite() && duration_ns > 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {duration_ns}")));
    }
    if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }
    shape.validate()?;
    let n = (duration_ns * sampling_rate * 1e-9).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_ns} ns is shorter than one sample at {sampling_rate} S/s"
        )));
    }
    let dt = 1e9 / sampling_rate;
    let times = (0..n).map(|k| k as f64 * dt);

    let (i, q) = match shape {
        EnvelopeShape::Rectangular => (vec![amplitude; n], vec![0.0; n]),
        EnvelopeShape::Gaussian { rel_sigma } | EnvelopeShape::Drag { rel_sigma, .. } => {
            let sigma = duration_ns / rel_sigma;
            let centre = duration_ns / 2.0;
            let raw: Vec<f64> = times
                .clone()
                .map(|t| (-(t - centre).powi(2) / (2.0 * sigma * sigma)).exp())
                .collect();
            let peak = raw.iter().cloned().fold(f64::MIN, f64::max);
            let i: Vec<f64> = raw.iter().map(|e| amplitude * e / peak).collect();
            let q = match shape {
                EnvelopeShape::Drag { beta, .. } => times
                    .zip(&i)
                    .map(|(t, v)| beta * (-(t - centre) / (sigma * sigma)) * v)
                    .collect(),
                _ => vec![0.0; n],
            };
            (i, q)
        }
    };
    Ok(Waveform { i, q, sampling_rate })
}

/// A timed waveform event on a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub kind: PulseKind,
    pub start: u64,
    pub duration: u64,
    pub amplitude: f64,
    pub frequency: f64,
    pub relative_phase: f64,
    pub shape: EnvelopeShape,
    pub channel: String,
    pub qubit: QubitId,
    pub acquisition_id: Option<u32>,
}

impl Pulse {
    fn new(kind: PulseKind, qubit: QubitId, channel: impl Into<String>, start: u64, duration: u64) -> Self {
        Pulse {
            kind,
            start,
            duration,
            amplitude: 0.0,
            frequency: 0.0,
            relative_phase: 0.0,
            shape: EnvelopeShape::Rectangular,
            channel: channel.into(),
            qubit,
            acquisition_id: None,
        }
    }

    pub fn drive(qubit: QubitId, channel: impl Into<String>, start: u64, duration: u64) -> Self {
        Self::new(PulseKind::Drive, qubit, channel, start, duration)
    }

    pub fn readout(
        qubit: QubitId,
        channel: impl Into<String>,
        start: u64,
        duration: u64,
        acquisition_id: u32,
    ) -> Self {
        let mut p = Self::new(PulseKind::Readout, qubit, channel, start, duration);
        p.acquisition_id = Some(acquisition_id);
        p
    }

    pub fn flux(qubit: QubitId, channel: impl Into<String>, start: u64, duration: u64) -> Self {
        Self::new(PulseKind::Flux, qubit, channel, start, duration)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_frequency(mut self, frequency: f64) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn with_phase(mut self, relative_phase: f64) -> Self {
        self.relative_phase = relative_phase;
        self
    }

    pub fn with_shape(mut self, shape: EnvelopeShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn finish(&self) -> u64 {
        self.start + self.duration
    }

    pub fn overlaps(&self, other: &Pulse) -> bool {
        self.start < other.finish() && other.start < self.finish()
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration == 0 {
            return Err(Error::InvalidPulse("duration must be positive".into()));
        }
        if !self.amplitude.is_finite() || self.amplitude.abs() > 1.0 {
            return Err(Error::InvalidPulse(format!(
                "amplitude {} outside [-1, 1]",
                self.amplitude
            )));
        }
        if !self.frequency.is_finite() || !self.relative_phase.is_finite() {
            return Err(Error::InvalidPulse("frequency and phase must be finite".into()));
        }
        self.shape.validate().map_err(|e| Error::InvalidPulse(e.to_string()))?;
        match (self.kind, self.acquisition_id) {
            (PulseKind::Readout, None) => {
                Err(Error::InvalidPulse("readout pulse without acquisition id".into()))
            }
            (PulseKind::Drive | PulseKind::Flux, Some(_)) => Err(Error::InvalidPulse(
                "only readout pulses carry an acquisition id".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn envelope(&self, sampling_rate: f64) -> Result<Waveform> {
        render_envelope(self.shape, self.amplitude, self.duration as f64, sampling_rate)
    }

    fn order(&self, other: &Pulse) -> Ordering {
        self.start
            .cmp(&other.start)
            .then_with(|| self.channel.cmp(&other.channel))
            .then_with(|| self.kind.cmp(&other.kind))
            .then_with(|| self.qubit.cmp(&other.qubit))
            .then_with(|| self.duration.cmp(&other.duration))
            .then_with(|| self.acquisition_id.cmp(&other.acquisition_id))
            .then_with(|| self.frequency.total_cmp(&other.frequency))
            .then_with(|| self.amplitude.total_cmp(&other.amplitude))
            .then_with(|| self.relative_phase.total_cmp(&other.relative_phase))
            .then_with(|| self.shape.total_cmp(&other.shape))
    }
}

/// Handle to a pulse inside a [`PulseSequence`]. Stable across re-sorting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PulseId(pub usize);

/// Pulses ordered by `(start, channel)`.
///
/// Overlap is allowed, including on the same channel. Two readout pulses on
/// one channel may overlap only when their frequencies differ (multiplexed
/// readout).
#[derive(Debug, Clone, Default)]
pub struct PulseSequence {
    entries: Vec<(PulseId, Pulse)>,
    next_id: usize,
}

impl PartialEq for PulseSequence {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.1 == b.1)
    }
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert a pulse, keeping the sort order.
    pub fn add(&mut self, pulse: Pulse) -> Result<PulseId> {
        pulse.validate()?;
        self.check_compatible(&pulse, None)?;
        let id = PulseId(self.next_id);
        self.next_id += 1;
        let pos = self.entries.partition_point(|(_, p)| p.order(&pulse) != Ordering::Greater);
        self.entries.insert(pos, (id, pulse));
        Ok(id)
    }

    /// Builder-style [`add`](Self::add).
    pub fn with(mut self, pulse: Pulse) -> Result<Self> {
        self.add(pulse)?;
        Ok(self)
    }

    fn check_compatible(&self, pulse: &Pulse, skip: Option<PulseId>) -> Result<()> {
        for (id, other) in &self.entries {
            if Some(*id) == skip {
                continue;
            }
            if let (Some(a), Some(b)) = (pulse.acquisition_id, other.acquisition_id) {
                if a == b {
                    return Err(Error::DuplicateAcquisition(a));
                }
            }
            if pulse.kind == PulseKind::Readout
                && other.kind == PulseKind::Readout
                && pulse.channel == other.channel
                && pulse.overlaps(other)
                && pulse.frequency == other.frequency
            {
                return Err(Error::ReadoutCollision { channel: pulse.channel.clone() });
            }
        }
        Ok(())
    }

    /// Maximum finish time, 0 for an empty sequence.
    pub fn duration(&self) -> u64 {
        self.entries.iter().map(|(_, p)| p.finish()).max().unwrap_or(0)
    }

    pub fn pulses(&self) -> impl Iterator<Item = &Pulse> {
        self.entries.iter().map(|(_, p)| p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PulseId, &Pulse)> {
        self.entries.iter().map(|(id, p)| (*id, p))
    }

    pub fn ids(&self) -> Vec<PulseId> {
        self.entries.iter().map(|(id, _)| *id).collect()
    }

    pub fn get(&self, id: PulseId) -> Option<&Pulse> {
        self.entries.iter().find(|(i, _)| *i == id).map(|(_, p)| p)
    }

    pub fn contains(&self, id: PulseId) -> bool {
        self.get(id).is_some()
    }

    /// Modify a pulse in place, re-validating and re-sorting afterwards.
    pub fn update(&mut self, id: PulseId, f: impl FnOnce(&mut Pulse)) -> Result<()> {
        let pos = self
            .entries
            .iter()
            .position(|(i, _)| *i == id)
            .ok_or_else(|| Error::InvalidArgument(format!("pulse {id:?} not in sequence")))?;
        let mut pulse = self.entries[pos].1.clone();
        f(&mut pulse);
        pulse.validate()?;
        self.check_compatible(&pulse, Some(id))?;
        self.entries[pos].1 = pulse;
        self.entries.sort_by(|a, b| a.1.order(&b.1));
        Ok(())
    }

    pub fn readout_pulses(&self) -> impl Iterator<Item = &Pulse> {
        self.pulses().filter(|p| p.kind == PulseKind::Readout)
    }

    /// Qubits addressed by any pulse, ascending.
    pub fn qubits(&self) -> Vec<QubitId> {
        let mut qs: Vec<QubitId> = self.pulses().map(|p| p.qubit).collect();
        qs.sort_unstable();
        qs.dedup();
        qs
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for p in self.pulses() {
            out.push_str(&serde_json::to_string(p)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut seq = PulseSequence::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            seq.add(serde_json::from_str(line)?)?;
        }
        Ok(seq)
    }
}

impl FromIterator<Pulse> for Result<PulseSequence> {
    fn from_iter<T: IntoIterator<Item = Pulse>>(iter: T) -> Self {
        let mut seq = PulseSequence::new();
        for p in iter {
            seq.add(p)?;
        }
        Ok(seq)
    }
}
