//! Execution-time benchmarks of the calibration routines against the ideal
//! time `nshots * sum(T_sequence + T_relaxation)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::acquisition::{AcquisitionType, AveragingMode};
use crate::compiler::compile;
use crate::emulator::OverheadModel;
use crate::error::{Error, Result};
use crate::experiments::{
    self, delay_grid, rb_circuit, rb_sequences, CliffordTable, RbConfig, ShotSettings,
};
use crate::fit::linspace;
use crate::platform::{ExecutionRecord, Platform};
use crate::pulse::PulseSequence;
use crate::sweep::{Parameter, Sweeper};
use crate::QubitId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routine {
    ResonatorSpectroscopy20,
    ResonatorSpectroscopy100,
    QubitSpectroscopy,
    RabiAmplitude,
    RamseyDetuned,
    T1,
    T2,
    SingleShotClassification,
    StandardRb,
}

impl Routine {
    pub const ALL: [Routine; 9] = [
        Routine::ResonatorSpectroscopy20,
        Routine::ResonatorSpectroscopy100,
        Routine::QubitSpectroscopy,
        Routine::RabiAmplitude,
        Routine::RamseyDetuned,
        Routine::T1,
        Routine::T2,
        Routine::SingleShotClassification,
        Routine::StandardRb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Routine::ResonatorSpectroscopy20 => "resonator_spectroscopy_20",
            Routine::ResonatorSpectroscopy100 => "resonator_spectroscopy_100",
            Routine::QubitSpectroscopy => "qubit_spectroscopy",
            Routine::RabiAmplitude => "rabi_amplitude",
            Routine::RamseyDetuned => "ramsey_detuned",
            Routine::T1 => "t1",
            Routine::T2 => "t2",
            Routine::SingleShotClassification => "single_shot_classification",
            Routine::StandardRb => "standard_rb",
        }
    }

    /// Shots and relaxation used by the benchmark: 5 us relaxation for the
    /// spectroscopies, 300 us otherwise, 4096 shots throughout.
    pub fn shots(self) -> ShotSettings {
        match self {
            Routine::ResonatorSpectroscopy20 | Routine::ResonatorSpectroscopy100 | Routine::QubitSpectroscopy => {
                ShotSettings::SPECTROSCOPY
            }
            _ => ShotSettings::STANDARD,
        }
    }

    /// Parse a comma-separated suite; `all` expands to every routine.
    pub fn parse_suite(text: &str) -> Result<Vec<Routine>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if part == "all" {
                out.extend(Routine::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty benchmark suite".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Routine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Routine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Routine::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark routine '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    /// Deterministic: host time replaced by the emulator's overhead model.
    #[default]
    Synthetic,
    /// Measured host time.
    Wallclock,
}

impl FromStr for TimingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(TimingMode::Synthetic),
            "wallclock" => Ok(TimingMode::Wallclock),
            _ => Err(Error::InvalidArgument(format!("unknown timing mode '{s}' (synthetic|wallclock)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BenchOptions {
    pub mode: TimingMode,
    pub repetitions: usize,
    pub fast_reset: bool,
}

/// Times are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub routine: String,
    pub backend: String,
    pub mode: TimingMode,
    pub n_points: u64,
    pub nshots: u32,
    pub relaxation_time_s: f64,
    pub round_trips: usize,
    pub ideal_ns: u64,
    pub ideal_s: f64,
    /// Controller round-trip cost.
    pub instrument_s: f64,
    /// Host-side cost: compilation, simulation and fitting.
    pub software_s: f64,
    pub real_s: f64,
    pub ratio: f64,
}

impl BenchmarkRecord {
    fn new(
        routine: &str,
        backend: &str,
        mode: TimingMode,
        shots: ShotSettings,
        fast_reset: bool,
        log: &[ExecutionRecord],
        overhead: OverheadModel,
        wall_ns: u64,
    ) -> Self {
        let ideal_ns: u64 = log.iter().map(|r| r.timing.ideal_ns).sum();
        let points: u64 = log.iter().map(|r| r.timing.points).sum();
        let instrument_ns = overhead.instrument_ns * log.len() as u64;
        let software_ns = match mode {
            TimingMode::Synthetic => log.iter().map(|r| r.timing.overhead_ns).sum::<u64>() - instrument_ns,
            TimingMode::Wallclock => wall_ns,
        };
        let real_ns = ideal_ns + instrument_ns + software_ns;
        BenchmarkRecord {
            routine: routine.to_string(),
            backend: backend.to_string(),
            mode,
            n_points: points,
            nshots: shots.nshots,
            relaxation_time_s: if fast_reset { 0.0 } else { shots.relaxation_time as f64 / 1e9 },
            round_trips: log.len(),
            ideal_ns,
            ideal_s: ideal_ns as f64 / 1e9,
            instrument_s: instrument_ns as f64 / 1e9,
            software_s: software_ns as f64 / 1e9,
            real_s: real_ns as f64 / 1e9,
            ratio: real_ns as f64 / ideal_ns.max(1) as f64,
        }
    }
}

fn backend_label(platform: &Platform) -> String {
    format!("emulator:{}", platform.name())
}

fn overhead_of(platform: &Platform) -> Result<OverheadModel> {
    platform
        .emulator()
        .map(|e| e.overhead())
        .ok_or_else(|| Error::InvalidArgument("benchmarks need an emulator controller".into()))
}

/// Benchmark RB configuration: 10 log-spaced depths up to 512, 16 sequences.
pub fn bench_rb_config(shots: ShotSettings) -> RbConfig {
    RbConfig {
        n_sequences: 16,
        nshots: shots.nshots,
        relaxation_time: shots.relaxation_time,
        bootstrap_samples: 100,
        ..RbConfig::default()
    }
}

fn run_routine(platform: &mut Platform, routine: Routine, qubit: QubitId, shots: ShotSettings) -> Result<()> {
    let params = platform.qubit(qubit)?.params.clone();
    match routine {
        Routine::ResonatorSpectroscopy20 | Routine::ResonatorSpectroscopy100 => {
            let n = if routine == Routine::ResonatorSpectroscopy20 { 20 } else { 100 };
            experiments::resonator_spectroscopy(platform, qubit, 20e6, n, shots)?;
        }
        Routine::QubitSpectroscopy => {
            experiments::qubit_spectroscopy(platform, qubit, 8e6, 300, 2000, None, shots)?;
        }
        Routine::RabiAmplitude => {
            experiments::rabi_amplitude(platform, qubit, (0.0, 2.0 * params.pi_pulse.amplitude.min(0.5)), 75, shots)?;
        }
        Routine::RamseyDetuned => {
            experiments::ramsey_detuned(platform, qubit, &delay_grid(4000.0, 50, 4), 1e6, shots)?;
        }
        Routine::T1 => {
            experiments::t1(platform, qubit, &delay_grid(3.0 * params.t1, 30, 4), shots)?;
        }
        Routine::T2 => {
            experiments::t2(platform, qubit, &delay_grid(3.0 * params.t2, 30, 4), shots)?;
        }
        Routine::SingleShotClassification => {
            experiments::single_shot_classification(platform, qubit, shots.nshots)?;
        }
        Routine::StandardRb => {
            experiments::standard_rb(platform, qubit, &bench_rb_config(shots))?;
        }
    }
    Ok(())
}

fn median(mut v: Vec<BenchmarkRecord>) -> BenchmarkRecord {
    v.sort_by(|a, b| a.real_s.total_cmp(&b.real_s));
    v.swap_remove(v.len() / 2)
}

/// Run each routine of `suite` on `qubit` and record ideal and real times.
/// Platform parameters are restored after every run.
pub fn run_benchmark(
    platform: &mut Platform,
    suite: &[Routine],
    qubit: QubitId,
    options: &BenchOptions,
) -> Result<Vec<BenchmarkRecord>> {
    let overhead = overhead_of(platform)?;
    let backend = backend_label(platform);
    let saved = platform.parameters();
    let mut out = Vec::with_capacity(suite.len());
    for &routine in suite {
        let mut shots = routine.shots();
        if options.fast_reset {
            shots.relaxation_time = 0;
        }
        let mut reps = Vec::new();
        for _ in 0..options.repetitions.max(1) {
            platform.clear_log();
            let start = Stopwatch::start();
            let result = run_routine(platform, routine, qubit, shots);
            let wall_ns = start.elapsed_ns();
            platform.set_parameters(saved.clone())?;
            result?;
            reps.push(BenchmarkRecord::new(
                routine.name(),
                &backend,
                options.mode,
                shots,
                options.fast_reset,
                &platform.execution_log(),
                overhead,
                wall_ns,
            ));
        }
        log::info!("benchmark {routine}: ratio {:.3}", reps[0].ratio);
        out.push(median(reps));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    /// One real-time amplitude sweep with the given number of points.
    Sweep,
    /// The given number of random RB circuits in one batch.
    Circuits,
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(ScalingKind::Sweep),
            "circuits" => Ok(ScalingKind::Circuits),
            _ => Err(Error::InvalidArgument(format!("unknown scaling study '{s}' (sweep|circuits)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub points: usize,
    pub ideal_ns: u64,
    pub ideal_s: f64,
    pub real_s: f64,
    pub ratio: f64,
}

const SCALING_DEPTH: u64 = 10;

/// `n` compiled RB sequences of fixed depth.
pub fn random_circuits(platform: &Platform, qubit: QubitId, n: usize, seed: u64) -> Result<Vec<PulseSequence>> {
    let table = CliffordTable::new()?;
    rb_sequences(&table, &[SCALING_DEPTH], n, seed)
        .remove(0)
        .iter()
        .map(|cl| Ok(compile(&rb_circuit(&table, qubit, cl)?, platform)?.sequence))
        .collect()
}

fn rabi_sweep(platform: &Platform, qubit: QubitId, n: usize) -> Result<(PulseSequence, Sweeper)> {
    let q = platform.qubit(qubit)?;
    let pi = q.pi_pulse(0)?;
    let mut seq = PulseSequence::new();
    let id = seq.add(pi.clone())?;
    seq.add(q.readout_pulse(pi.finish(), 0)?)?;
    Ok((seq, Sweeper::new(Parameter::Amplitude, linspace(0.0, 0.8, n), vec![id])))
}

fn timed_row(platform: &Platform, mode: TimingMode, points: usize, run: impl FnOnce() -> Result<()>) -> Result<ScalingRow> {
    platform.clear_log();
    let start = Stopwatch::start();
    run()?;
    let wall_ns = start.elapsed_ns();
    let overhead = overhead_of(platform)?;
    let r = BenchmarkRecord::new("", "", mode, ShotSettings::STANDARD, false, &platform.execution_log(), overhead, wall_ns);
    Ok(ScalingRow { points, ideal_ns: r.ideal_ns, ideal_s: r.ideal_s, real_s: r.real_s, ratio: r.ratio })
}

/// Execution time as a function of the number of points.
pub fn scaling_study(
    platform: &Platform,
    kind: ScalingKind,
    qubit: QubitId,
    point_counts: &[usize],
    shots: ShotSettings,
    mode: TimingMode,
) -> Result<Vec<ScalingRow>> {
    if point_counts.is_empty() || point_counts.contains(&0) {
        return Err(Error::InvalidArgument("scaling study needs nonzero point counts".into()));
    }
    let options = shots.options(AcquisitionType::Integrated, AveragingMode::Cyclic);
    point_counts
        .iter()
        .map(|&n| match kind {
            ScalingKind::Sweep => {
                let (seq, sweeper) = rabi_sweep(platform, qubit, n)?;
                timed_row(platform, mode, n, || platform.sweep(&seq, &[sweeper], &options).map(drop))
            }
            ScalingKind::Circuits => {
                let circuits = random_circuits(platform, qubit, n, 0)?;
                timed_row(platform, mode, n, || platform.execute_batch(&circuits, &options).map(drop))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchComparison {
    pub circuits: usize,
    pub batched: ScalingRow,
    pub looped: ScalingRow,
}

/// Run `n` random circuits once as a batch and once one by one.
pub fn batch_vs_loop(platform: &Platform, qubit: QubitId, n: usize, shots: ShotSettings, mode: TimingMode) -> Result<BatchComparison> {
    let circuits = random_circuits(platform, qubit, n, 0)?;
    let options = shots.options(AcquisitionType::Integrated, AveragingMode::Cyclic);
    let batched = timed_row(platform, mode, n, || platform.execute_batch(&circuits, &options).map(drop))?;
    let looped = timed_row(platform, mode, n, || {
        circuits.iter().try_for_each(|c| platform.execute(c, &options).map(drop))
    })?;
    Ok(BatchComparison { circuits: n, batched, looped })
}

/// One record per row with a header.
pub fn records_to_csv(records: &[BenchmarkRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `{mode, records, total_ideal_s, total_real_s}`.
pub fn summary_json(records: &[BenchmarkRecord]) -> Result<String> {
    let ideal: f64 = records.iter().map(|r| r.ideal_s).sum();
    let real: f64 = records.iter().map(|r| r.real_s).sum();
    let v = serde_json::json!({
        "mode": records.first().map(|r| r.mode),
        "records": records,
        "total_ideal_s": ideal,
        "total_real_s": real,
        "total_ratio": real / ideal.max(f64::MIN_POSITIVE),
    });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_parsing() {
        assert_eq!(Routine::parse_suite("all").unwrap().len(), 9);
        assert_eq!(Routine::parse_suite("t1, rabi_amplitude").unwrap(), vec![Routine::T1, Routine::RabiAmplitude]);
        assert!(Routine::parse_suite("t3").is_err());
        assert!(Routine::parse_suite("").is_err());
        for r in Routine::ALL {
            assert_eq!(r.name().parse::<Routine>().unwrap(), r);
        }
    }
}
