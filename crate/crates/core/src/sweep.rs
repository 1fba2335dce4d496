//! Real-time parameter sweeps.
//!
//! A [`Sweeper`] names a pulse parameter, a list of values and the pulses it
//! acts on. Up to two sweepers can be nested; the first one is the outer
//! axis. Point `(i, j)` has flat index `i * n_inner + j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::{PulseId, PulseSequence};

/// Deepest supported sweeper nesting.
pub const MAX_SWEEPERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Frequency,
    Amplitude,
    Duration,
    Start,
    RelativePhase,
}

impl std::str::FromStr for Parameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(Parameter::Frequency),
            "amplitude" => Ok(Parameter::Amplitude),
            "duration" => Ok(Parameter::Duration),
            "start" => Ok(Parameter::Start),
            "relative_phase" => Ok(Parameter::RelativePhase),
            other => Err(Error::Sweep(format!("unsupported sweep parameter `{other}`"))),
        }
    }
}

/// How a swept value combines with the pulse's own value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    #[default]
    Absolute,
    Offset,
    Factor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweeper {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub pulses: Vec<PulseId>,
    #[serde(default)]
    pub mode: SweepMode,
}

impl Sweeper {
    pub fn new(parameter: Parameter, values: Vec<f64>, pulses: Vec<PulseId>) -> Self {
        Sweeper { parameter, values, pulses, mode: SweepMode::Absolute }
    }

    pub fn with_mode(mut self, mode: SweepMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy of `seq` with value index `k` applied to every target pulse.
    pub fn apply(&self, seq: &PulseSequence, k: usize) -> Result<PulseSequence> {
        let v = self.values[k];
        let mut out = seq.clone();
        for &id in &self.pulses {
            let mode = self.mode;
            let combine = |old: f64| match mode {
                SweepMode::Absolute => v,
                SweepMode::Offset => old + v,
                SweepMode::Factor => old * v,
            };
            let mut bad_time = None;
            out.update(id, |p| match self.parameter {
                Parameter::Frequency => p.frequency = combine(p.frequency),
                Parameter::Amplitude => p.amplitude = combine(p.amplitude),
                Parameter::RelativePhase => p.relative_phase = combine(p.relative_phase),
                Parameter::Duration | Parameter::Start => {
                    let field = if self.parameter == Parameter::Duration { &mut p.duration } else { &mut p.start };
                    let t = combine(*field as f64).round();
                    if t < 0.0 || !t.is_finite() {
                        bad_time = Some(t);
                    } else {
                        *field = t as u64;
                    }
                }
            })
            .map_err(|e| Error::Sweep(format!("value {v} rejected: {e}")))?;
            if let Some(t) = bad_time {
                return Err(Error::Sweep(format!("swept time {t} ns is negative")));
            }
        }
        Ok(out)
    }
}

/// Check sweepers against the sequence they will act on.
pub fn validate(seq: &PulseSequence, sweepers: &[Sweeper]) -> Result<()> {
    if sweepers.len() > MAX_SWEEPERS {
        return Err(Error::Sweep(format!("at most {MAX_SWEEPERS} nested sweepers are supported")));
    }
    for s in sweepers {
        if s.values.is_empty() {
            return Err(Error::Sweep("sweeper has no values".into()));
        }
        if s.pulses.is_empty() {
            return Err(Error::Sweep("sweeper targets no pulses".into()));
        }
        if let Some(id) = s.pulses.iter().find(|id| !seq.contains(**id)) {
            return Err(Error::Sweep(format!("sweeper references pulse {} not in the sequence", id.0)));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Sweep("sweep values must be finite".into()));
        }
    }
    Ok(())
}

/// Axis lengths, outermost first.
pub fn shape(sweepers: &[Sweeper]) -> Vec<usize> {
    sweepers.iter().map(Sweeper::len).collect()
}

/// One sequence per sweep point, in flat-index order.
pub fn expand(seq: &PulseSequence, sweepers: &[Sweeper]) -> Result<Vec<PulseSequence>> {
    validate(seq, sweepers)?;
    let mut points = vec![seq.clone()];
    for s in sweepers {
        let mut next = Vec::with_capacity(points.len() * s.len());
        for p in &points {
            for k in 0..s.len() {
                next.push(s.apply(p, k)?);
            }
        }
        points = next;
    }
    Ok(points)
}
