use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{u3_angles, Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Two-qubit gates the hardware can run directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NativeTwoQubit {
    #[default]
    Cz,
    Iswap,
    Both,
}

impl NativeTwoQubit {
    fn cz(self) -> bool {
        matches!(self, NativeTwoQubit::Cz | NativeTwoQubit::Both)
    }

    fn iswap(self) -> bool {
        matches!(self, NativeTwoQubit::Iswap | NativeTwoQubit::Both)
    }
}

impl std::str::FromStr for NativeTwoQubit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cz" => Ok(NativeTwoQubit::Cz),
            "iswap" => Ok(NativeTwoQubit::Iswap),
            "both" => Ok(NativeTwoQubit::Both),
            other => Err(Error::InvalidArgument(format!("unknown native gate set `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnrollOptions {
    pub natives: NativeTwoQubit,
    /// Merge runs of single-qubit gates on a wire into one U3.
    pub fuse: bool,
}

impl Default for UnrollOptions {
    fn default() -> Self {
        UnrollOptions { natives: NativeTwoQubit::Cz, fuse: true }
    }
}

pub fn is_native(gate: &Gate, natives: NativeTwoQubit) -> bool {
    match gate {
        Gate::U3(..) | Gate::Rx(..) | Gate::Rz(..) | Gate::X(_) | Gate::Z(_) | Gate::Measure(_) => true,
        Gate::Cz(..) => natives.cz(),
        Gate::ISwap(..) => natives.iswap(),
        _ => false,
    }
}

/// Unroll with default options for the given natives.
pub fn unroll(circuit: &Circuit, natives: NativeTwoQubit) -> Result<Circuit> {
    unroll_with(circuit, &UnrollOptions { natives, ..UnrollOptions::default() })
}

pub fn unroll_with(circuit: &Circuit, options: &UnrollOptions) -> Result<Circuit> {
    let mut gates = Vec::new();
    for g in circuit.gates() {
        gates.extend(decompose(g, options.natives, 0));
    }
    if options.fuse {
        gates = fuse(gates, circuit.n_qubits());
    }
    let mut out = Circuit::new(circuit.n_qubits());
    for g in gates {
        out.add(g)?;
    }
    Ok(out)
}

const MAX_DEPTH: usize = 8;

fn decompose(gate: &Gate, natives: NativeTwoQubit, depth: usize) -> Vec<Gate> {
    if is_native(gate, natives) {
        return vec![gate.clone()];
    }
    assert!(depth < MAX_DEPTH, "decomposition of `{}` does not terminate", gate.name());
    rules(gate, natives)
        .into_iter()
        .map(|rule| rule.iter().flat_map(|g| decompose(g, natives, depth + 1)).collect::<Vec<_>>())
        .min_by_key(|gs| gs.iter().filter(|g| g.is_two_qubit()).count())
        .expect("every gate has a rule")
}

/// Candidate rewrites of a non-native gate. Each entry is one alternative.
fn rules(gate: &Gate, natives: NativeTwoQubit) -> Vec<Vec<Gate>> {
    match *gate {
        Gate::H(q) => vec![vec![Gate::U3(q, FRAC_PI_2, 0.0, PI)]],
        Gate::Y(q) => vec![vec![Gate::U3(q, PI, 0.0, 0.0)]],
        Gate::Ry(q, t) => vec![vec![Gate::U3(q, t, 0.0, 0.0)]],
        Gate::Cnot(c, t) => {
            let mut alts = Vec::new();
            if natives.cz() {
                alts.push(vec![Gate::H(t), Gate::Cz(c, t), Gate::H(t)]);
            }
            if natives.iswap() {
                alts.push(vec![
                    Gate::ISwap(c, t),
                    Gate::H(c),
                    Gate::Rz(c, -FRAC_PI_2),
                    Gate::Rz(t, -FRAC_PI_2),
                    Gate::ISwap(c, t),
                    Gate::H(t),
                    Gate::Rz(t, -FRAC_PI_2),
                ]);
            }
            alts
        }
        // only reached without a native CZ
        Gate::Cz(a, b) => vec![vec![Gate::H(b), Gate::Cnot(a, b), Gate::H(b)]],
        // only reached without a native iSWAP
        Gate::ISwap(a, b) => vec![vec![
            Gate::H(a),
            Gate::H(b),
            Gate::Cz(a, b),
            Gate::H(a),
            Gate::H(b),
            Gate::Cz(a, b),
            Gate::H(a),
            Gate::Rz(a, FRAC_PI_2),
            Gate::H(b),
            Gate::Rz(b, FRAC_PI_2),
        ]],
        Gate::Swap(a, b) => vec![
            vec![Gate::Cnot(a, b), Gate::Cnot(b, a), Gate::Cnot(a, b)],
            vec![Gate::Cz(a, b), Gate::Rz(a, -FRAC_PI_2), Gate::Rz(b, -FRAC_PI_2), Gate::ISwap(a, b)],
        ],
        Gate::CPhase(a, b, t) => vec![vec![
            Gate::Rz(a, t / 2.0),
            Gate::Cnot(a, b),
            Gate::Rz(b, -t / 2.0),
            Gate::Cnot(a, b),
            Gate::Rz(b, t / 2.0),
        ]],
        _ => unreachable!("native gates have no rules"),
    }
}

fn fuse(gates: Vec<Gate>, n_qubits: usize) -> Vec<Gate> {
    let mut pending: Vec<Vec<Gate>> = vec![Vec::new(); n_qubits];
    let mut out = Vec::with_capacity(gates.len());
    for g in gates {
        let qs = g.qubits();
        if g.is_single_qubit() {
            pending[qs[0]].push(g);
            continue;
        }
        for q in qs {
            flush(&mut pending[q], q, &mut out);
        }
        out.push(g);
    }
    for (q, run) in pending.iter_mut().enumerate() {
        flush(run, q, &mut out);
    }
    out
}

fn flush(run: &mut Vec<Gate>, q: usize, out: &mut Vec<Gate>) {
    match run.len() {
        0 => {}
        1 => out.push(run.pop().expect("one gate")),
        _ => {
            let m = run.drain(..).fold(CMatrix::identity(2), |acc, g| {
                &g.matrix_1q().expect("single-qubit gate") * &acc
            });
            let (theta, phi, lambda) = u3_angles(&m);
            if theta.abs() < 1e-12 {
                out.push(Gate::U3(q, 0.0, 0.0, phi + lambda));
            } else {
                out.push(Gate::U3(q, theta, phi, lambda));
            }
        }
    }
}
