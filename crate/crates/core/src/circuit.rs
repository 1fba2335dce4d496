//! Gate-level circuit IR.
//!
//! Qubit 0 is the most significant bit of a computational basis index, so
//! `|q0 q1 ... q(n-1)>` maps to index `q0 * 2^(n-1) + ... + q(n-1)`.
//!
//! `U3(theta, phi, lambda) = RZ(phi) RY(theta) RZ(lambda)`, which is the
//! same operator as `RZ(phi) RX(-pi/2) RZ(theta) RX(pi/2) RZ(lambda)`. The
//! compiler relies on the second form.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C0, C1, CI};

/// Largest width accepted by [`unitary_of`].
pub const MAX_UNITARY_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    U3(usize, f64, f64, f64),
    Cnot(usize, usize),
    Cz(usize, usize),
    /// Controlled phase `diag(1, 1, 1, e^{i theta})`.
    CPhase(usize, usize, f64),
    Swap(usize, usize),
    ISwap(usize, usize),
    Measure(Vec<usize>),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::U3(..) => "u3",
            Gate::Cnot(..) => "cnot",
            Gate::Cz(..) => "cz",
            Gate::CPhase(..) => "cphase",
            Gate::Swap(..) => "swap",
            Gate::ISwap(..) => "iswap",
            Gate::Measure(_) => "m",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![*q],
            Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) | Gate::U3(q, ..) => vec![*q],
            Gate::Cnot(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) | Gate::ISwap(a, b) => vec![*a, *b],
            Gate::CPhase(a, b, _) => vec![*a, *b],
            Gate::Measure(qs) => qs.clone(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Gate::Rx(_, t) | Gate::Ry(_, t) | Gate::Rz(_, t) | Gate::CPhase(_, _, t) => vec![*t],
            Gate::U3(_, t, p, l) => vec![*t, *p, *l],
            _ => Vec::new(),
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::Measure(_))
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(
            self,
            Gate::Cnot(..) | Gate::Cz(..) | Gate::CPhase(..) | Gate::Swap(..) | Gate::ISwap(..)
        )
    }

    pub fn is_single_qubit(&self) -> bool {
        !self.is_two_qubit() && !self.is_measurement()
    }

    /// Same gate acting on relabelled qubits.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::H(q) => Gate::H(f(*q)),
            Gate::X(q) => Gate::X(f(*q)),
            Gate::Y(q) => Gate::Y(f(*q)),
            Gate::Z(q) => Gate::Z(f(*q)),
            Gate::Rx(q, t) => Gate::Rx(f(*q), *t),
            Gate::Ry(q, t) => Gate::Ry(f(*q), *t),
            Gate::Rz(q, t) => Gate::Rz(f(*q), *t),
            Gate::U3(q, t, p, l) => Gate::U3(f(*q), *t, *p, *l),
            Gate::Cnot(a, b) => Gate::Cnot(f(*a), f(*b)),
            Gate::Cz(a, b) => Gate::Cz(f(*a), f(*b)),
            Gate::CPhase(a, b, t) => Gate::CPhase(f(*a), f(*b), *t),
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
            Gate::ISwap(a, b) => Gate::ISwap(f(*a), f(*b)),
            Gate::Measure(qs) => Gate::Measure(qs.iter().map(|q| f(*q)).collect()),
        }
    }

    /// 2x2 matrix of a single-qubit gate.
    pub fn matrix_1q(&self) -> Option<CMatrix> {
        let m = match *self {
            Gate::H(_) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                CMatrix::from_rows([[h, h], [h, -h]])
            }
            Gate::X(_) => CMatrix::from_rows([[C0, C1], [C1, C0]]),
            Gate::Y(_) => CMatrix::from_rows([[C0, -CI], [CI, C0]]),
            Gate::Z(_) => CMatrix::from_rows([[C1, C0], [C0, -C1]]),
            Gate::Rx(_, t) => rx(t),
            Gate::Ry(_, t) => ry(t),
            Gate::Rz(_, t) => rz(t),
            Gate::U3(_, t, p, l) => u3(t, p, l),
            _ => return None,
        };
        Some(m)
    }

    /// 4x4 matrix of a two-qubit gate; the first operand is the high bit.
    pub fn matrix_2q(&self) -> Option<CMatrix> {
        let m = match *self {
            Gate::Cnot(..) => CMatrix::from_rows([
                [C1, C0, C0, C0],
                [C0, C1, C0, C0],
                [C0, C0, C0, C1],
                [C0, C0, C1, C0],
            ]),
            Gate::Cz(..) => diag4([C1, C1, C1, -C1]),
            Gate::CPhase(_, _, t) => diag4([C1, C1, C1, Complex64::from_polar(1.0, t)]),
            Gate::Swap(..) => CMatrix::from_rows([
                [C1, C0, C0, C0],
                [C0, C0, C1, C0],
                [C0, C1, C0, C0],
                [C0, C0, C0, C1],
            ]),
            Gate::ISwap(..) => CMatrix::from_rows([
                [C1, C0, C0, C0],
                [C0, C0, CI, C0],
                [C0, CI, C0, C0],
                [C0, C0, C0, C1],
            ]),
            _ => return None,
        };
        Some(m)
    }
}

fn diag4(d: [Complex64; 4]) -> CMatrix {
    let mut m = CMatrix::zeros(4);
    for (k, v) in d.into_iter().enumerate() {
        m[(k, k)] = v;
    }
    m
}

pub fn rx(theta: f64) -> CMatrix {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    CMatrix::from_rows([[c, s], [s, c]])
}

pub fn ry(theta: f64) -> CMatrix {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new((theta / 2.0).sin(), 0.0);
    CMatrix::from_rows([[c, -s], [s, c]])
}

pub fn rz(theta: f64) -> CMatrix {
    CMatrix::from_rows([
        [Complex64::from_polar(1.0, -theta / 2.0), C0],
        [C0, Complex64::from_polar(1.0, theta / 2.0)],
    ])
}

pub fn u3(theta: f64, phi: f64, lambda: f64) -> CMatrix {
    &(&rz(phi) * &ry(theta)) * &rz(lambda)
}

/// Decompose a 2x2 unitary into `(theta, phi, lambda)` with
/// `m = e^{i alpha} U3(theta, phi, lambda)`.
pub fn u3_angles(m: &CMatrix) -> (f64, f64, f64) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    // remove the global phase so the matrix lies in SU(2)
    let det = a * d - b * c;
    let g = det.sqrt();
    let (a, c) = (a / g, c / g);
    let theta = 2.0 * c.norm().atan2(a.norm());
    // a = cos(t/2) e^{-i(phi+lambda)/2}, c = sin(t/2) e^{i(phi-lambda)/2}
    let sum = if a.norm() > 1e-12 { -2.0 * a.arg() } else { 0.0 };
    let diff = if c.norm() > 1e-12 { 2.0 * c.arg() } else { 0.0 };
    let phi = (sum + diff) / 2.0;
    let lambda = (sum - diff) / 2.0;
    (theta, phi, lambda)
}

/// Ordered gate list on `n_qubits` wires.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate, enforcing operand bounds and terminal measurements.
    pub fn add(&mut self, gate: Gate) -> Result<&mut Self> {
        let qs = gate.qubits();
        if qs.is_empty() {
            return Err(Error::InvalidArgument(format!("gate `{}` has no operands", gate.name())));
        }
        for (k, q) in qs.iter().enumerate() {
            if *q >= self.n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} out of range for {}-qubit circuit",
                    self.n_qubits
                )));
            }
            if qs[..k].contains(q) {
                return Err(Error::InvalidArgument(format!(
                    "gate `{}` repeats qubit {q}",
                    gate.name()
                )));
            }
        }
        if let Some(q) = qs.iter().find(|q| self.is_measured(**q)) {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} already measured; measurements must be terminal"
            )));
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn with(mut self, gate: Gate) -> Result<Self> {
        self.add(gate)?;
        Ok(self)
    }

    pub fn is_measured(&self, q: usize) -> bool {
        self.gates.iter().any(|g| matches!(g, Gate::Measure(qs) if qs.contains(&q)))
    }

    /// Qubits in measurement order.
    pub fn measured_qubits(&self) -> Vec<usize> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Measure(qs) => Some(qs.clone()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Gates in reverse order, measurements dropped.
    pub fn reversed(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().filter(|g| !g.is_measurement()).cloned().collect(),
        }
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Number of CNOT-equivalent entangling gates: CNOT and CZ count one,
    /// CPhase and iSWAP two, SWAP three.
    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .map(|g| match g {
                Gate::Cnot(..) | Gate::Cz(..) => 1,
                Gate::CPhase(..) | Gate::ISwap(..) => 2,
                Gate::Swap(..) => 3,
                _ => 0,
            })
            .sum()
    }

    pub fn to_records(&self) -> Vec<GateRecord> {
        self.gates
            .iter()
            .map(|g| GateRecord { name: g.name().to_string(), qubits: g.qubits(), params: g.params() })
            .collect()
    }

    /// Build from records; the width is `n_qubits` or one past the largest operand.
    pub fn from_records(records: &[GateRecord], n_qubits: Option<usize>) -> Result<Circuit> {
        let inferred = records.iter().flat_map(|r| r.qubits.iter()).max().map_or(0, |q| q + 1);
        let width = n_qubits.unwrap_or(inferred).max(inferred);
        let mut c = Circuit::new(width);
        for r in records {
            c.add(r.to_gate()?)?;
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CircuitFile::Full {
            n_qubits: self.n_qubits,
            gates: self.to_records(),
        })?)
    }

    /// Accepts either a bare list of gate records or `{n_qubits, gates}`.
    pub fn from_json(text: &str) -> Result<Circuit> {
        match serde_json::from_str::<CircuitFile>(text)? {
            CircuitFile::List(records) => Circuit::from_records(&records, None),
            CircuitFile::Full { n_qubits, gates } => Circuit::from_records(&gates, Some(n_qubits)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum CircuitFile {
    List(Vec<GateRecord>),
    Full { n_qubits: usize, gates: Vec<GateRecord> },
}

/// Serialized gate: `{name, qubits, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub name: String,
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl GateRecord {
    pub fn to_gate(&self) -> Result<Gate> {
        let name = self.name.to_ascii_lowercase();
        let q = &self.qubits;
        let p = &self.params;
        let arity = |nq: usize, np: usize| -> Result<()> {
            if q.len() != nq || p.len() != np {
                Err(Error::InvalidArgument(format!(
                    "gate `{}` expects {nq} qubit(s) and {np} parameter(s)",
                    self.name
                )))
            } else {
                Ok(())
            }
        };
        let gate = match name.as_str() {
            "h" => arity(1, 0).map(|_| Gate::H(q[0]))?,
            "x" => arity(1, 0).map(|_| Gate::X(q[0]))?,
            "y" => arity(1, 0).map(|_| Gate::Y(q[0]))?,
            "z" => arity(1, 0).map(|_| Gate::Z(q[0]))?,
            "rx" => arity(1, 1).map(|_| Gate::Rx(q[0], p[0]))?,
            "ry" => arity(1, 1).map(|_| Gate::Ry(q[0], p[0]))?,
            "rz" => arity(1, 1).map(|_| Gate::Rz(q[0], p[0]))?,
            "u3" => arity(1, 3).map(|_| Gate::U3(q[0], p[0], p[1], p[2]))?,
            "cnot" | "cx" => arity(2, 0).map(|_| Gate::Cnot(q[0], q[1]))?,
            "cz" => arity(2, 0).map(|_| Gate::Cz(q[0], q[1]))?,
            "cphase" | "cu1" => arity(2, 1).map(|_| Gate::CPhase(q[0], q[1], p[0]))?,
            "swap" => arity(2, 0).map(|_| Gate::Swap(q[0], q[1]))?,
            "iswap" => arity(2, 0).map(|_| Gate::ISwap(q[0], q[1]))?,
            "m" | "measure" => {
                if q.is_empty() {
                    return Err(Error::InvalidArgument("measurement without qubits".into()));
                }
                Gate::Measure(q.clone())
            }
            other => return Err(Error::InvalidArgument(format!("unknown gate `{other}`"))),
        };
        Ok(gate)
    }
}

fn bit_mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Apply a 2x2 unitary to qubit `q` of an `n`-qubit state.
pub fn apply_1q(state: &mut [Complex64], n: usize, q: usize, m: &CMatrix) {
    let mask = bit_mask(n, q);
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for i in 0..state.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (x, y) = (state[i], state[j]);
            state[i] = a * x + b * y;
            state[j] = c * x + d * y;
        }
    }
}

/// Apply a 4x4 unitary to qubits `(hi, lo)`; `hi` is the high bit of `m`.
pub fn apply_2q(state: &mut [Complex64], n: usize, hi: usize, lo: usize, m: &CMatrix) {
    let (mh, ml) = (bit_mask(n, hi), bit_mask(n, lo));
    for i in 0..state.len() {
        if i & mh == 0 && i & ml == 0 {
            let idx = [i, i | ml, i | mh, i | mh | ml];
            let v = idx.map(|k| state[k]);
            for (r, &k) in idx.iter().enumerate() {
                state[k] = (0..4).map(|c| m[(r, c)] * v[c]).sum();
            }
        }
    }
}

pub fn apply_gate(state: &mut [Complex64], n: usize, gate: &Gate) {
    if let Some(m) = gate.matrix_1q() {
        apply_1q(state, n, gate.qubits()[0], &m);
    } else if let Some(m) = gate.matrix_2q() {
        let qs = gate.qubits();
        apply_2q(state, n, qs[0], qs[1], &m);
    }
}

/// Full unitary by direct gate application; measurements are ignored.
pub fn unitary_of(circuit: &Circuit) -> Result<CMatrix> {
    let n = circuit.n_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "unitary_of supports at most {MAX_UNITARY_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1 << n;
    let mut out = CMatrix::zeros(dim);
    let mut col = vec![C0; dim];
    for k in 0..dim {
        col.iter_mut().for_each(|v| *v = C0);
        col[k] = C1;
        for g in circuit.gates() {
            apply_gate(&mut col, n, g);
        }
        for (r, v) in col.iter().enumerate() {
            out[(r, k)] = *v;
        }
    }
    Ok(out)
}

/// Final state of a circuit applied to `|0...0>`.
pub fn statevector(circuit: &Circuit) -> Vec<Complex64> {
    let n = circuit.n_qubits();
    let mut s = vec![C0; 1 << n];
    s[0] = C1;
    for g in circuit.gates() {
        apply_gate(&mut s, n, g);
    }
    s
}

/// Quantum Fourier transform with final qubit reversal.
pub fn qft_circuit(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::InvalidArgument("QFT needs at least one qubit".into()));
    }
    let mut c = Circuit::new(n);
    for i in 0..n {
        c.add(Gate::H(i))?;
        for j in i + 1..n {
            c.add(Gate::CPhase(j, i, PI / f64::powi(2.0, (j - i) as i32)))?;
        }
    }
    for i in 0..n / 2 {
        c.add(Gate::Swap(i, n - 1 - i))?;
    }
    Ok(c)
}

/// `n_cnots` CNOTs on uniformly random ordered pairs of distinct qubits.
pub fn random_cnot_circuit(n_qubits: usize, n_cnots: usize, seed: u64) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("random CNOT circuits need at least two qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n_qubits);
    for _ in 0..n_cnots {
        let a = rng.random_range(0..n_qubits);
        let mut b = rng.random_range(0..n_qubits - 1);
        if b >= a {
            b += 1;
        }
        c.add(Gate::Cnot(a, b))?;
    }
    Ok(c)
}
