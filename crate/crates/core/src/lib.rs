//! Pulse-level quantum control.
//!
//! The crate turns gate-level circuits into scheduled pulse sequences and
//! executes them on a [`Platform`](platform::Platform): a graph of qubits,
//! channels and instruments whose single controller is a virtual-transmon
//! emulator. On top of that sit the usual single-qubit calibration routines,
//! standard randomized benchmarking and a CHSH experiment with readout
//! mitigation, plus a benchmark harness comparing wall-clock against the
//! ideal qubit-occupation time.

pub mod acquisition;
pub mod bench;
pub mod circuit;
mod clock;
pub mod compiler;
pub mod emulator;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod linalg;
pub mod platform;
pub mod presets;
pub mod pulse;
pub mod rng;
pub mod sweep;
pub mod transpiler;

pub use error::{Error, Result};

/// Physical (or logical, inside the transpiler) qubit index.
pub type QubitId = usize;
