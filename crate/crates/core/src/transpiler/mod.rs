//! Circuit transpilation: placement, routing and native-gate unrolling.
//!
//! A logical circuit is first given an initial [`Layout`] by a [`Placer`],
//! then routed onto the device [`Connectivity`] by inserting SWAP gates, and
//! finally unrolled into the native gate set (`U3`, `RX`, `RZ`, `X`, `Z` plus
//! `CZ` and/or `iSWAP`).

mod connectivity;
mod placement;
mod routing;
mod unroll;

pub use connectivity::Connectivity;
pub use placement::{place, Placer};
pub use routing::{route, RoutedCircuit, Router, SabreConfig};
pub use unroll::{is_native, unroll, unroll_with, NativeTwoQubit, UnrollOptions};

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};

/// Bijection between logical and physical qubits.
///
/// The layout always covers every physical qubit; logical indices beyond the
/// circuit width are idle ancillas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    l2p: Vec<usize>,
    #[serde(skip)]
    p2l: Vec<usize>,
}

impl Layout {
    pub fn trivial(n: usize) -> Self {
        Layout { l2p: (0..n).collect(), p2l: (0..n).collect() }
    }

    /// `map[l]` is the physical qubit of logical qubit `l`. A partial map is
    /// padded with the unused physical qubits in ascending order.
    pub fn from_partial(map: &[usize], n_physical: usize) -> Result<Self> {
        if map.len() > n_physical {
            return Err(Error::Transpile(format!(
                "layout maps {} logical qubits onto {n_physical} physical qubits",
                map.len()
            )));
        }
        let mut used = vec![false; n_physical];
        for &p in map {
            if p >= n_physical {
                return Err(Error::Transpile(format!("physical qubit {p} does not exist")));
            }
            if used[p] {
                return Err(Error::Transpile(format!("physical qubit {p} assigned twice")));
            }
            used[p] = true;
        }
        let mut l2p = map.to_vec();
        l2p.extend((0..n_physical).filter(|p| !used[*p]));
        Ok(Self::from_l2p(l2p))
    }

    fn from_l2p(l2p: Vec<usize>) -> Self {
        let mut p2l = vec![0; l2p.len()];
        for (l, &p) in l2p.iter().enumerate() {
            p2l[p] = l;
        }
        Layout { l2p, p2l }
    }

    pub fn len(&self) -> usize {
        self.l2p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l2p.is_empty()
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.l2p[logical]
    }

    pub fn logical(&self, physical: usize) -> usize {
        self.p2l[physical]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.l2p
    }

    /// Exchange the logical qubits sitting on two physical qubits.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.p2l[a], self.p2l[b]);
        self.p2l.swap(a, b);
        self.l2p[la] = b;
        self.l2p[lb] = a;
    }
}

/// Options for [`transpile`].
#[derive(Debug, Clone)]
pub struct TranspileOptions {
    pub placer: Placer,
    pub router: Router,
    pub unroll: UnrollOptions,
}

impl Default for TranspileOptions {
    fn default() -> Self {
        TranspileOptions {
            placer: Placer::Trivial,
            router: Router::Sabre(SabreConfig::default()),
            unroll: UnrollOptions::default(),
        }
    }
}

/// Output of the full pipeline; the circuit acts on physical qubits.
#[derive(Debug, Clone)]
pub struct Transpiled {
    pub circuit: Circuit,
    pub initial_layout: Layout,
    pub final_layout: Layout,
}

/// Place, route and unroll.
pub fn transpile(circuit: &Circuit, conn: &Connectivity, options: &TranspileOptions) -> Result<Transpiled> {
    let routed = match &options.router {
        Router::Star => route(circuit, conn, &Layout::trivial(conn.n_qubits()), &Router::Star)?,
        router => {
            let layout = place(circuit, conn, &options.placer)?;
            route(circuit, conn, &layout, router)?
        }
    };
    let circuit = unroll_with(&routed.circuit, &options.unroll)?;
    Ok(Transpiled { circuit, initial_layout: routed.initial_layout, final_layout: routed.final_layout })
}

/// Entangling-gate count of `routed` over that of `original`, both counted in
/// CNOT equivalents (a SWAP is three).
pub fn cnot_overhead(original: &Circuit, routed: &Circuit) -> Result<f64> {
    let base = original.cnot_count();
    if base == 0 {
        return Err(Error::InvalidArgument("original circuit has no CNOT gates".into()));
    }
    Ok(routed.cnot_count() as f64 / base as f64)
}
