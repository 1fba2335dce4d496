use serde::{Deserialize, Serialize};

use crate::acquisition::ExecutionOptions;
use crate::platform::Timing;

/// Simulated cost of talking to the instrument, ns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverheadModel {
    /// Fixed cost per controller round trip (upload, arm, fetch).
    pub instrument_ns: u64,
    /// Compilation cost per sequence or sweep point.
    pub compile_ns_per_point: u64,
}

/// `nshots * sum_i (T_sequence_i + T_relaxation)`; relaxation is skipped
/// with fast reset.
pub fn ideal_time_ns(durations: &[u64], options: &ExecutionOptions) -> u64 {
    let relax = if options.fast_reset { 0 } else { options.relaxation_time };
    u64::from(options.nshots) * durations.iter().map(|d| d + relax).sum::<u64>()
}

/// Ideal time plus simulated overhead for one round trip over the given
/// per-point sequence durations.
pub fn timing_model(durations: &[u64], options: &ExecutionOptions, overhead: &OverheadModel) -> Timing {
    let points = durations.len() as u64;
    Timing {
        ideal_ns: ideal_time_ns(durations, options),
        overhead_ns: overhead.instrument_ns + overhead.compile_ns_per_point * points,
        points,
    }
}
