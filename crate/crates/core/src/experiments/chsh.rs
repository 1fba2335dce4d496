use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use super::{Points, Report};
use crate::acquisition::{AcquisitionType, AveragingMode, ExecutionOptions, ResultSet};
use crate::circuit::{Circuit, Gate};
use crate::compiler::{compile, Compiled};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::transpiler::{unroll, NativeTwoQubit};
use crate::QubitId;

const MAX_CONDITION: f64 = 1e6;
const RELAXATION_NS: u64 = 300_000;

/// Readout confusion matrix `M[observed][prepared]` over the basis states of
/// a qubit set (first qubit is the most significant bit).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationMatrix {
    pub qubits: Vec<QubitId>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(skip)]
    inverse: DMatrix<f64>,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl MitigationMatrix {
    pub fn from_matrix(qubits: Vec<QubitId>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = 1usize << qubits.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!("confusion matrix for {} qubits must be {n}x{n}", qubits.len())));
        }
        for c in 0..n {
            let s: f64 = matrix.iter().map(|r| r[c]).sum();
            if (s - 1.0).abs() > 1e-9 || matrix.iter().any(|r| r[c] < 0.0) {
                return Err(Error::InvalidArgument(format!("column {c} of the confusion matrix is not a distribution")));
            }
        }
        let m = DMatrix::from_fn(n, n, |r, c| matrix[r][c]);
        let inverse = m.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
        let condition = one_norm(&m) * one_norm(&inverse);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        Ok(MitigationMatrix { qubits, matrix, inverse })
    }

    pub fn identity(qubits: Vec<QubitId>) -> Self {
        let n = 1usize << qubits.len();
        let matrix = (0..n).map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
        Self::from_matrix(qubits, matrix).expect("identity is well conditioned")
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// `M v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|r| self.matrix[r].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `M^-1 v` without clipping.
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        (&self.inverse * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// `M^-1 v` clipped at zero and renormalized.
    pub fn mitigate(&self, probabilities: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = self.apply_inverse(probabilities).into_iter().map(|p| p.max(0.0)).collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            return vec![1.0 / raw.len() as f64; raw.len()];
        }
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// Joint outcome frequencies of the measured `qubits`, first qubit most
/// significant.
fn joint_distribution(compiled: &Compiled, results: &ResultSet, qubits: &[QubitId]) -> Result<Vec<f64>> {
    let bits: Vec<&[u8]> = qubits
        .iter()
        .map(|&q| {
            let id = compiled
                .acquisition_of(q)
                .ok_or_else(|| Error::Acquisition(format!("qubit {q} was not measured")))?;
            results.acquisition(id)?.bits().ok_or_else(|| Error::Acquisition("expected single-shot bits".into()))
        })
        .collect::<Result<_>>()?;
    let shots = bits[0].len();
    let mut counts = vec![0usize; 1 << qubits.len()];
    for s in 0..shots {
        let idx = bits.iter().fold(0, |acc, b| (acc << 1) | b[s] as usize);
        counts[idx] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / shots as f64).collect())
}

fn singleshot(nshots: u32) -> ExecutionOptions {
    ExecutionOptions::new(nshots, AcquisitionType::Classified, AveragingMode::Singleshot).with_relaxation(RELAXATION_NS)
}

/// Prepare every basis state of `qubits` with X gates, read them out
/// together and build the confusion matrix.
pub fn readout_mitigation_matrix(platform: &Platform, qubits: &[QubitId], nshots: u32) -> Result<MitigationMatrix> {
    if qubits.is_empty() {
        return Err(Error::InvalidArgument("mitigation needs at least one qubit".into()));
    }
    let n = 1usize << qubits.len();
    let mut compiled = Vec::with_capacity(n);
    for state in 0..n {
        let mut c = Circuit::new(platform.n_qubits());
        for (k, &q) in qubits.iter().enumerate() {
            if (state >> (qubits.len() - 1 - k)) & 1 == 1 {
                c.add(Gate::X(q))?;
            }
        }
        c.add(Gate::Measure(qubits.to_vec()))?;
        compiled.push(compile(&c, platform)?);
    }
    let batch: Vec<_> = compiled.iter().map(|c| c.sequence.clone()).collect();
    let results = platform.execute_batch(&batch, &singleshot(nshots))?;
    let mut matrix = vec![vec![0.0; n]; n];
    for (prepared, (c, r)) in compiled.iter().zip(&results).enumerate() {
        let column = joint_distribution(c, r, qubits)?;
        for (observed, p) in column.into_iter().enumerate() {
            matrix[observed][prepared] = p;
        }
    }
    // frequencies sum to 1 up to rounding; make it exact before validation
    for prepared in 0..n {
        let s: f64 = (0..n).map(|o| matrix[o][prepared]).sum();
        for row in matrix.iter_mut() {
            row[prepared] /= s;
        }
    }
    MitigationMatrix::from_matrix(qubits.to_vec(), matrix)
}

/// `E = sum (-1)^(x xor y) P(x, y)` over a two-qubit distribution indexed `2x + y`.
pub fn correlator(p: &[f64]) -> f64 {
    p[0] - p[1] - p[2] + p[3]
}

/// `S = E(a, b) - E(a, b') + E(a', b) + E(a', b')` for correlators in that order.
pub fn chsh_value(e: &[f64; 4]) -> f64 {
    e[0] - e[1] + e[2] + e[3]
}

/// Singlet value of `S` for the settings used here.
pub fn ideal_chsh(theta: f64) -> f64 {
    -2.0 * (theta.cos() + theta.sin())
}

/// `(alpha, beta)` measurement angles of the four terms of `S`.
pub fn chsh_settings(theta: f64) -> [(f64, f64); 4] {
    let (a, a2, b, b2) = (0.0, FRAC_PI_2, theta, theta + FRAC_PI_2);
    [(a, b), (a, b2), (a2, b), (a2, b2)]
}

/// Singlet `(|01> - |10>)/sqrt 2` on `(a, b)`, then equatorial measurements
/// at angles `alpha`, `beta`.
pub fn chsh_circuit(n_qubits: usize, (a, b): (QubitId, QubitId), alpha: f64, beta: f64) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    c.add(Gate::H(a))?;
    c.add(Gate::Cnot(a, b))?;
    c.add(Gate::X(b))?;
    c.add(Gate::Z(a))?;
    for (q, angle) in [(a, alpha), (b, beta)] {
        c.add(Gate::Rz(q, angle))?;
        c.add(Gate::Rx(q, FRAC_PI_2))?;
    }
    c.add(Gate::Measure(vec![a, b]))?;
    unroll(&c, NativeTwoQubit::Cz)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshPoint {
    pub theta: f64,
    pub correlators: [f64; 4],
    pub s: f64,
    /// Binomial one-sigma error of `s`.
    pub s_error: f64,
    pub mitigated_correlators: Option<[f64; 4]>,
    pub s_mitigated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshOutcome {
    pub pair: (QubitId, QubitId),
    pub nshots: u32,
    pub points: Vec<ChshPoint>,
    pub mitigation: Option<MitigationMatrix>,
}

impl ChshOutcome {
    pub fn s_points(&self) -> Points {
        Points::new(
            "theta",
            "s",
            self.points.iter().map(|p| p.theta).collect(),
            self.points.iter().map(|p| p.s).collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,s,s_error,s_mitigated\n");
        for p in &self.points {
            let m = p.s_mitigated.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", p.theta, p.s, p.s_error, m));
        }
        out
    }

    pub fn report(&self) -> Report {
        Report {
            routine: "chsh".into(),
            inputs: json!({
                "pair": [self.pair.0, self.pair.1],
                "thetas": self.points.iter().map(|p| p.theta).collect::<Vec<_>>(),
                "nshots": self.nshots,
                "mitigation": self.mitigation.is_some(),
            }),
            fit: json!({ "points": self.points, "mitigation_matrix": self.mitigation.as_ref().map(|m| &m.matrix) }),
            updated_parameters: Default::default(),
        }
    }
}

/// CHSH experiment on a calibrated pair, optionally with readout mitigation.
pub fn chsh(
    platform: &Platform,
    pair: (QubitId, QubitId),
    thetas: &[f64],
    nshots: u32,
    use_mitigation: bool,
) -> Result<ChshOutcome> {
    if platform.cz(pair.0, pair.1).is_none() {
        return Err(Error::InvalidArgument(format!("pair ({}, {}) has no CZ calibration", pair.0, pair.1)));
    }
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("CHSH needs at least one angle".into()));
    }
    let qubits = [pair.0, pair.1];
    let mitigation = if use_mitigation { Some(readout_mitigation_matrix(platform, &qubits, nshots)?) } else { None };

    let mut compiled = Vec::with_capacity(4 * thetas.len());
    for &theta in thetas {
        for (alpha, beta) in chsh_settings(theta) {
            compiled.push(compile(&chsh_circuit(platform.n_qubits(), pair, alpha, beta)?, platform)?);
        }
    }
    let batch: Vec<_> = compiled.iter().map(|c| c.sequence.clone()).collect();
    let results = platform.execute_batch(&batch, &singleshot(nshots))?;

    let mut points = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let mut e = [0.0; 4];
        let mut em = [0.0; 4];
        for j in 0..4 {
            let i = 4 * k + j;
            let p = joint_distribution(&compiled[i], &results[i], &qubits)?;
            e[j] = correlator(&p);
            if let Some(m) = &mitigation {
                em[j] = correlator(&m.mitigate(&p));
            }
        }
        let variance: f64 = e.iter().map(|v| 1.0 - v * v).sum::<f64>() / f64::from(nshots);
        points.push(ChshPoint {
            theta,
            correlators: e,
            s: chsh_value(&e),
            s_error: variance.max(0.0).sqrt(),
            mitigated_correlators: mitigation.as_ref().map(|_| em),
            s_mitigated: mitigation.as_ref().map(|_| chsh_value(&em)),
        });
    }
    Ok(ChshOutcome { pair, nshots, points, mitigation })
}
