//! Acquisition results and the transforms between raw, integrated and
//! classified data.
//!
//! Array layout: every result is a flat row-major array whose shape is the
//! sweep axes (outermost first), then the shot axis for single-shot data, then
//! the sample axis for raw data.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionType {
    Raw,
    #[default]
    Integrated,
    Classified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingMode {
    #[default]
    Singleshot,
    Cyclic,
}

impl std::str::FromStr for AcquisitionType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(AcquisitionType::Raw),
            "integrated" => Ok(AcquisitionType::Integrated),
            "classified" => Ok(AcquisitionType::Classified),
            _ => Err(Error::InvalidArgument(format!("unknown acquisition type `{s}`"))),
        }
    }
}

/// How a sequence is repeated and what is returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOptions {
    pub nshots: u32,
    /// Wait after each shot, ns.
    pub relaxation_time: u64,
    pub acquisition: AcquisitionType,
    pub averaging: AveragingMode,
    /// Reset qubits actively after measurement instead of waiting.
    pub fast_reset: bool,
    /// Index of the first point in the random-stream schedule. Running point
    /// `k` of a sweep alone with `point_offset = k` reproduces it exactly.
    #[serde(default)]
    pub point_offset: u64,
}

impl Default for ExecutionOptions {
    fn default() -> Self {
        ExecutionOptions {
            nshots: 1024,
            relaxation_time: 0,
            acquisition: AcquisitionType::Integrated,
            averaging: AveragingMode::Singleshot,
            fast_reset: false,
            point_offset: 0,
        }
    }
}

impl ExecutionOptions {
    pub fn new(nshots: u32, acquisition: AcquisitionType, averaging: AveragingMode) -> Self {
        ExecutionOptions { nshots, acquisition, averaging, ..Self::default() }
    }

    pub fn with_relaxation(mut self, ns: u64) -> Self {
        self.relaxation_time = ns;
        self
    }

    pub fn with_fast_reset(mut self, on: bool) -> Self {
        self.fast_reset = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nshots == 0 {
            return Err(Error::InvalidArgument("nshots must be at least 1".into()));
        }
        Ok(())
    }

    pub fn averaged(&self) -> bool {
        self.averaging == AveragingMode::Cyclic
    }
}

/// Linear discriminant: rotate by `-rotation`, threshold the in-phase part.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Classification {
    pub rotation: f64,
    pub threshold: f64,
    pub mean_0: [f64; 2],
    pub mean_1: [f64; 2],
}

impl Classification {
    /// Boundary halfway between two blob centres, perpendicular to the line
    /// joining them.
    pub fn from_means(mean_0: Complex64, mean_1: Complex64) -> Self {
        let rotation = (mean_1 - mean_0).arg();
        let rot = Complex64::from_polar(1.0, -rotation);
        let threshold = ((mean_0 * rot).re + (mean_1 * rot).re) / 2.0;
        Classification { rotation, threshold, mean_0: [mean_0.re, mean_0.im], mean_1: [mean_1.re, mean_1.im] }
    }

    pub fn mean(&self, state: u8) -> Complex64 {
        let m = if state == 0 { self.mean_0 } else { self.mean_1 };
        Complex64::new(m[0], m[1])
    }
}

/// State assignment of one integrated point; points on the boundary are 0.
pub fn classify(iq: Complex64, disc: &Classification) -> u8 {
    let rotated = iq * Complex64::from_polar(1.0, -disc.rotation);
    u8::from(rotated.re > disc.threshold)
}

/// Multiply by `exp(-i 2 pi f t)` with `t = 0` at the first sample and average
/// over the window.
pub fn demodulate_integrate(raw: &Waveform, frequency: f64) -> Result<Complex64> {
    if raw.is_empty() {
        return Err(Error::Acquisition("cannot integrate an empty waveform".into()));
    }
    let dt = 1.0 / raw.sampling_rate;
    let sum = raw.i.iter().zip(&raw.q).enumerate().fold(Complex64::new(0.0, 0.0), |acc, (k, (i, q))| {
        acc + Complex64::new(*i, *q) * Complex64::from_polar(1.0, -2.0 * PI * frequency * k as f64 * dt)
    });
    Ok(sum / raw.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Values {
    /// `(I, Q)` pairs for raw and integrated data.
    Iq(Vec<[f64; 2]>),
    Bits(Vec<u8>),
    Probabilities(Vec<f64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Iq(v) => v.len(),
            Values::Bits(v) => v.len(),
            Values::Probabilities(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Data of one acquisition id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionResult {
    pub acquisition: AcquisitionType,
    pub averaged: bool,
    /// Number of leading sweep axes in `shape`.
    pub sweep_dims: usize,
    pub shape: Vec<usize>,
    pub values: Values,
}

impl AcquisitionResult {
    pub fn new(
        acquisition: AcquisitionType,
        averaged: bool,
        sweep_dims: usize,
        shape: Vec<usize>,
        values: Values,
    ) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Acquisition(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        let kind_ok = matches!(
            (acquisition, averaged, &values),
            (AcquisitionType::Raw | AcquisitionType::Integrated, _, Values::Iq(_))
                | (AcquisitionType::Classified, false, Values::Bits(_))
                | (AcquisitionType::Classified, true, Values::Probabilities(_))
        );
        if !kind_ok {
            return Err(Error::Acquisition("value type does not match acquisition mode".into()));
        }
        Ok(AcquisitionResult { acquisition, averaged, sweep_dims, shape, values })
    }

    /// Number of sweep points.
    pub fn points(&self) -> usize {
        self.shape[..self.sweep_dims].iter().product()
    }

    pub fn iq(&self) -> Option<Vec<Complex64>> {
        match &self.values {
            Values::Iq(v) => Some(v.iter().map(|[i, q]| Complex64::new(*i, *q)).collect()),
            _ => None,
        }
    }

    pub fn bits(&self) -> Option<&[u8]> {
        match &self.values {
            Values::Bits(v) => Some(v),
            _ => None,
        }
    }

    /// Probability of reading 1 at each sweep point.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        match &self.values {
            Values::Probabilities(p) => Ok(p.clone()),
            Values::Bits(b) => {
                let shots = self.shape[self.sweep_dims];
                Ok(b.chunks(shots).map(|c| c.iter().map(|&x| x as f64).sum::<f64>() / shots as f64).collect())
            }
            Values::Iq(_) => Err(Error::Acquisition("probabilities need classified data".into())),
        }
    }

    /// Mean integrated IQ at each sweep point.
    pub fn mean_iq(&self) -> Result<Vec<Complex64>> {
        if self.acquisition != AcquisitionType::Integrated {
            return Err(Error::Acquisition("mean IQ needs integrated data".into()));
        }
        let iq = self.iq().expect("integrated data is IQ");
        if self.averaged {
            return Ok(iq);
        }
        let shots = self.shape[self.sweep_dims];
        Ok(iq.chunks(shots).map(|c| c.iter().sum::<Complex64>() / shots as f64).collect())
    }

    /// Stack equally shaped results along a new outermost sweep axis.
    pub fn stack(parts: &[AcquisitionResult]) -> Result<AcquisitionResult> {
        let first = parts.first().ok_or_else(|| Error::Acquisition("nothing to stack".into()))?;
        let mut values = first.values.clone();
        for p in &parts[1..] {
            if p.shape != first.shape || p.acquisition != first.acquisition || p.averaged != first.averaged {
                return Err(Error::Acquisition("cannot stack results of different shape".into()));
            }
            match (&mut values, &p.values) {
                (Values::Iq(a), Values::Iq(b)) => a.extend_from_slice(b),
                (Values::Bits(a), Values::Bits(b)) => a.extend_from_slice(b),
                (Values::Probabilities(a), Values::Probabilities(b)) => a.extend_from_slice(b),
                _ => unreachable!("same acquisition mode"),
            }
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&first.shape);
        AcquisitionResult::new(first.acquisition, first.averaged, first.sweep_dims + 1, shape, values)
    }
}

/// Mean over the shot axis. Classified data becomes the relative frequency
/// of 1s.
pub fn average(result: &AcquisitionResult) -> Result<AcquisitionResult> {
    if result.averaged {
        return Err(Error::Acquisition("result is already averaged".into()));
    }
    let axis = result.sweep_dims;
    let outer: usize = result.shape[..axis].iter().product();
    let shots = result.shape[axis];
    let inner: usize = result.shape[axis + 1..].iter().product();
    let mut shape = result.shape.clone();
    shape.remove(axis);
    let values = match &result.values {
        Values::Iq(v) => {
            let mut out = vec![[0.0; 2]; outer * inner];
            for o in 0..outer {
                for s in 0..shots {
                    for k in 0..inner {
                        let [i, q] = v[(o * shots + s) * inner + k];
                        out[o * inner + k][0] += i;
                        out[o * inner + k][1] += q;
                    }
                }
            }
            out.iter_mut().for_each(|[i, q]| {
                *i /= shots as f64;
                *q /= shots as f64;
            });
            Values::Iq(out)
        }
        Values::Bits(b) => Values::Probabilities(
            b.chunks(shots).map(|c| c.iter().map(|&x| x as f64).sum::<f64>() / shots as f64).collect(),
        ),
        Values::Probabilities(_) => unreachable!("probabilities are always averaged"),
    };
    AcquisitionResult::new(result.acquisition, true, result.sweep_dims, shape, values)
}

/// Results of one execution keyed by acquisition id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultSet {
    pub entries: BTreeMap<u32, AcquisitionResult>,
}

impl ResultSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: u32, result: AcquisitionResult) {
        self.entries.insert(id, result);
    }

    pub fn get(&self, id: u32) -> Option<&AcquisitionResult> {
        self.entries.get(&id)
    }

    /// Like [`ResultSet::get`] but failing with a descriptive error.
    pub fn acquisition(&self, id: u32) -> Result<&AcquisitionResult> {
        self.get(id).ok_or_else(|| Error::Acquisition(format!("no data for acquisition id {id}")))
    }

    pub fn ids(&self) -> Vec<u32> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn average(&self) -> Result<ResultSet> {
        let mut out = ResultSet::new();
        for (id, r) in &self.entries {
            out.insert(*id, average(r)?);
        }
        Ok(out)
    }

    /// Columnar CSV, one row per stored element. Columns: `acquisition_id`,
    /// one `sweep_k` per sweep axis, `shot` (empty when averaged), `sample`
    /// for raw data, then `i,q`, `bit` or `probability`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.entries.values().next() else {
            w.flush()?;
            return Ok(());
        };
        let raw = first.acquisition == AcquisitionType::Raw;
        let mut header = vec!["acquisition_id".to_string()];
        header.extend((0..first.sweep_dims).map(|k| format!("sweep_{k}")));
        header.push("shot".into());
        if raw {
            header.push("sample".into());
        }
        match first.values {
            Values::Iq(_) => header.extend(["i".into(), "q".into()]),
            Values::Bits(_) => header.push("bit".into()),
            Values::Probabilities(_) => header.push("probability".into()),
        }
        w.write_record(&header)?;
        for (id, r) in &self.entries {
            if r.sweep_dims != first.sweep_dims || r.acquisition != first.acquisition || r.averaged != first.averaged {
                return Err(Error::Acquisition("results in one set must share a layout".into()));
            }
            for flat in 0..r.values.len() {
                let idx = unravel(flat, &r.shape);
                let mut row = vec![id.to_string()];
                row.extend(idx[..r.sweep_dims].iter().map(usize::to_string));
                let mut rest = idx[r.sweep_dims..].iter();
                row.push(if r.averaged { String::new() } else { rest.next().expect("shot axis").to_string() });
                if raw {
                    row.push(rest.next().expect("sample axis").to_string());
                }
                match &r.values {
                    Values::Iq(v) => row.extend([v[flat][0].to_string(), v[flat][1].to_string()]),
                    Values::Bits(v) => row.push(v[flat].to_string()),
                    Values::Probabilities(v) => row.push(v[flat].to_string()),
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Shape and per-point summary of each acquisition.
    pub fn summary_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (id, r) in &self.entries {
            let mut entry = serde_json::json!({
                "acquisition": r.acquisition,
                "averaged": r.averaged,
                "shape": r.shape,
            });
            if let Ok(p) = r.probabilities() {
                entry["probability"] = serde_json::json!(p);
            } else if let Ok(iq) = r.mean_iq() {
                entry["mean_iq"] = serde_json::json!(iq.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>());
            }
            map.insert(id.to_string(), entry);
        }
        serde_json::Value::Object(map)
    }
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (k, &n) in shape.iter().enumerate().rev() {
        idx[k] = flat % n;
        flat /= n;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(amplitude: f64, freq: f64, n: usize, rate: f64) -> Waveform {
        let (i, q) = (0..n)
            .map(|k| {
                let z = Complex64::from_polar(amplitude, 2.0 * PI * freq * k as f64 / rate);
                (z.re, z.im)
            })
            .unzip();
        Waveform { i, q, sampling_rate: rate }
    }

    #[test]
    fn demodulation_recovers_tone_amplitude() {
        // 10 MHz over 1000 samples at 1 GS/s is 10 whole periods
        let wf = tone(0.3, 10e6, 1000, 1e9);
        assert!((demodulate_integrate(&wf, 10e6).unwrap().norm() - 0.3).abs() < 1e-9);
        // one extra cycle per window is orthogonal
        assert!(demodulate_integrate(&wf, 11e6).unwrap().norm() < 1e-9);
        let zero = Waveform { i: vec![0.0; 8], q: vec![0.0; 8], sampling_rate: 1e9 };
        assert_eq!(demodulate_integrate(&zero, 1e6).unwrap(), Complex64::new(0.0, 0.0));
        let empty = Waveform { i: vec![], q: vec![], sampling_rate: 1e9 };
        assert!(demodulate_integrate(&empty, 1e6).is_err());
    }

    #[test]
    fn classification_rules() {
        let m0 = Complex64::new(0.1, 0.2);
        let m1 = Complex64::new(-0.3, 0.5);
        let d = Classification::from_means(m0, m1);
        assert_eq!(classify(m0, &d), 0);
        assert_eq!(classify(m1, &d), 1);
        assert_eq!(classify((m0 + m1) / 2.0, &d), 0);
    }

    #[test]
    fn averaging_bits_and_iq() {
        let bits = AcquisitionResult::new(AcquisitionType::Classified, false, 0, vec![4], Values::Bits(vec![0, 1, 1, 1])).unwrap();
        assert_eq!(average(&bits).unwrap().values, Values::Probabilities(vec![0.75]));
        let iq = AcquisitionResult::new(
            AcquisitionType::Integrated,
            false,
            1,
            vec![2, 2],
            Values::Iq(vec![[1.0, 0.0], [3.0, 2.0], [0.0, 0.0], [0.0, -4.0]]),
        )
        .unwrap();
        let avg = average(&iq).unwrap();
        assert_eq!(avg.shape, vec![2]);
        assert_eq!(avg.values, Values::Iq(vec![[2.0, 1.0], [0.0, -2.0]]));
        assert!(average(&avg).is_err());
    }

    #[test]
    fn averaging_then_classifying_differs() {
        // two tight clusters on either side of the boundary: the mean lands on
        // the 0 side although three quarters of the shots read 1
        let d = Classification::from_means(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        let shots = [Complex64::new(-3.0, 0.0), Complex64::new(0.6, 0.0), Complex64::new(0.6, 0.0), Complex64::new(0.6, 0.0)];
        let classified_then_averaged = shots.iter().map(|s| classify(*s, &d) as f64).sum::<f64>() / 4.0;
        let averaged_then_classified = classify(shots.iter().sum::<Complex64>() / 4.0, &d);
        assert_eq!(classified_then_averaged, 0.75);
        assert_eq!(averaged_then_classified, 0);
    }

    #[test]
    fn csv_columns() {
        let mut rs = ResultSet::new();
        rs.insert(
            0,
            AcquisitionResult::new(AcquisitionType::Classified, false, 1, vec![2, 2], Values::Bits(vec![0, 1, 1, 0]))
                .unwrap(),
        );
        let csv = rs.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "acquisition_id,sweep_0,shot,bit");
        assert_eq!(lines[2], "0,0,1,1");
        assert_eq!(lines[3], "0,1,0,1");
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(AcquisitionResult::new(AcquisitionType::Integrated, true, 0, vec![3], Values::Iq(vec![[0.0; 2]])).is_err());
        assert!(AcquisitionResult::new(AcquisitionType::Classified, true, 0, vec![1], Values::Bits(vec![0])).is_err());
    }

    proptest! {
        #[test]
        fn demodulation_is_linear(a in -1.0f64..1.0, b in -1.0f64..1.0, f in 0.0f64..50e6) {
            let x = tone(1.0, 7e6, 64, 1e9);
            let y = tone(0.5, 19e6, 64, 1e9);
            let mix = Waveform {
                i: x.i.iter().zip(&y.i).map(|(u, v)| a * u + b * v).collect(),
                q: x.q.iter().zip(&y.q).map(|(u, v)| a * u + b * v).collect(),
                sampling_rate: 1e9,
            };
            let lhs = demodulate_integrate(&mix, f).unwrap();
            let rhs = demodulate_integrate(&x, f).unwrap() * a + demodulate_integrate(&y, f).unwrap() * b;
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn classification_scale_invariant(
            re in -2.0f64..2.0, im in -2.0f64..2.0, scale in 0.01f64..100.0,
            m1r in -1.0f64..1.0, m1i in 0.1f64..1.0,
        ) {
            let m0 = Complex64::new(0.0, 0.0);
            let m1 = Complex64::new(m1r, m1i);
            let d = Classification::from_means(m0, m1);
            let scaled = Classification::from_means(m0 * scale, m1 * scale);
            let p = Complex64::new(re, im);
            // skip points numerically on the boundary
            let margin = (p * Complex64::from_polar(1.0, -d.rotation)).re - d.threshold;
            prop_assume!(margin.abs() > 1e-9);
            prop_assert_eq!(classify(p, &d), classify(p * scale, &scaled));
        }
    }
}
