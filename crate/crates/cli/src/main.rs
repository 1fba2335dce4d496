use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use pulsekit::bench::{self, BenchOptions, Routine, ScalingKind, TimingMode};
use pulsekit::circuit::Circuit;
use pulsekit::compiler::compile;
use pulsekit::experiments::{self, ShotSettings};
use pulsekit::fit::linspace;
use pulsekit::platform::Platform;
use pulsekit::presets::Preset;
use pulsekit::transpiler::{
    cnot_overhead, transpile, unroll, Connectivity, NativeTwoQubit, Placer, Router, SabreConfig, TranspileOptions,
    UnrollOptions,
};

mod output;

use output::{FitFailed, Output};

const SEED_ENV: &str = "PULSEKIT_SEED";

#[derive(Parser, Debug)]
#[command(name = "pulsekit", version, about = "Pulse-level control, calibration and benchmarking on an emulated QPU")]
struct Cli {
    /// Seed for the emulator and randomized routines. PULSEKIT_SEED overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for JSON and CSV outputs; stdout when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Place, route and unroll a circuit for a connectivity graph.
    Transpile(TranspileArgs),
    /// Unroll a circuit to CZ natives and compile it to a pulse sequence.
    Compile {
        circuit: PathBuf,
        #[arg(long)]
        platform: String,
    },
    /// Run one calibration routine or randomized benchmarking.
    RunExperiment(ExperimentArgs),
    /// Ideal versus real execution time of the calibration routines.
    Benchmark(BenchmarkArgs),
    /// CHSH experiment on a coupled pair.
    Chsh(ChshArgs),
    /// Collate the JSON reports in a directory into one summary.
    Report { dir: PathBuf },
}

#[derive(Args, Debug)]
struct TranspileArgs {
    circuit: PathBuf,
    /// `{"n_qubits": n, "edges": [[a, b], ...]}`, or `star:N` / `line:N`.
    #[arg(long)]
    connectivity: String,
    /// trivial | random | subgraph | reverse_traversal
    #[arg(long, default_value = "trivial")]
    placer: String,
    /// shortest_paths | sabre | sabre_no_lookahead | star
    #[arg(long, default_value = "sabre")]
    router: String,
    /// cz | iswap | both
    #[arg(long, default_value = "cz")]
    natives: NativeTwoQubit,
    /// Keep every single-qubit gate instead of merging runs into U3.
    #[arg(long)]
    no_fuse: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// resonator_spectroscopy | qubit_spectroscopy | rabi_amplitude | ramsey_detuned |
    /// t1 | t2 | single_shot_classification | standard_rb
    name: String,
    /// Platform file or `preset:<name>`.
    #[arg(long)]
    platform: String,
    #[arg(long, default_value_t = 0)]
    qubit: usize,
    /// Number of sweep points (routine default when omitted).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    nshots: Option<u32>,
    /// Write the platform with the updated parameters here.
    #[arg(long)]
    save_platform: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct BenchmarkArgs {
    /// JSON harness config; its fields replace the matching flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated routine names or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value = "synthetic")]
    mode: TimingMode,
    #[arg(long, default_value = "preset:single_qubit")]
    platform: String,
    #[arg(long, default_value_t = 0)]
    qubit: usize,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long)]
    fast_reset: bool,
    /// Also run a scaling study: sweep | circuits.
    #[arg(long)]
    scaling: Option<ScalingKind>,
    /// Point counts of the scaling study.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    points: Vec<usize>,
    /// Also compare batched and looped execution of this many circuits.
    #[arg(long)]
    compare_batch: Option<usize>,
}

/// Harness config file. A relative `platform` path is resolved against the
/// config file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkFile {
    suite: Option<String>,
    mode: Option<TimingMode>,
    platform: Option<String>,
    qubit: Option<usize>,
    repetitions: Option<usize>,
    fast_reset: Option<bool>,
    scaling: Option<ScalingKind>,
    points: Option<Vec<usize>>,
    compare_batch: Option<usize>,
}

impl BenchmarkArgs {
    fn with_config(&self) -> Result<BenchmarkArgs> {
        let mut args = self.clone();
        let Some(path) = &self.config else { return Ok(args) };
        let file: BenchmarkFile = serde_json::from_str(&read(path)?)
            .map_err(|e| pulsekit::Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(v) = file.suite {
            args.suite = v;
        }
        if let Some(v) = file.mode {
            args.mode = v;
        }
        if let Some(v) = file.platform {
            args.platform = match (v.starts_with("preset:"), path.parent()) {
                (false, Some(dir)) if Path::new(&v).is_relative() => dir.join(v).display().to_string(),
                _ => v,
            };
        }
        args.qubit = file.qubit.unwrap_or(args.qubit);
        args.repetitions = file.repetitions.unwrap_or(args.repetitions);
        args.fast_reset = file.fast_reset.unwrap_or(args.fast_reset);
        args.scaling = file.scaling.or(args.scaling);
        args.points = file.points.unwrap_or(args.points);
        args.compare_batch = file.compare_batch.or(args.compare_batch);
        Ok(args)
    }
}

#[derive(Args, Debug)]
struct ChshArgs {
    #[arg(long)]
    platform: String,
    /// Two coupled qubits, e.g. `0,1`.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    pair: Vec<usize>,
    /// Angles in radians; eight points over [0, pi) when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Vec<f64>,
    #[arg(long, default_value_t = 4096)]
    nshots: u32,
    /// Apply readout error mitigation.
    #[arg(long)]
    mitigate: bool,
}

fn load_platform(spec: &str, seed: u64) -> Result<Platform> {
    let mut p = match spec.strip_prefix("preset:") {
        Some(name) => Platform::build(name.parse::<Preset>()?.inline_config(), None)?,
        None => Platform::from_file(spec)?,
    };
    p.set_seed(seed);
    Ok(p)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn connectivity(spec: &str) -> Result<Connectivity> {
    let shorthand = |prefix: &str| spec.strip_prefix(prefix).map(str::parse::<usize>);
    if let Some(n) = shorthand("star:") {
        return Ok(Connectivity::star(n?));
    }
    if let Some(n) = shorthand("line:") {
        return Ok(Connectivity::line(n?));
    }
    Ok(Connectivity::from_json(&read(Path::new(spec))?)?)
}

fn placer(name: &str, seed: u64) -> Result<Placer> {
    Ok(match name {
        "trivial" => Placer::Trivial,
        "random" => Placer::random_greedy(seed),
        "subgraph" => Placer::SubgraphIsomorphism,
        "reverse_traversal" => Placer::ReverseTraversal { rounds: 3 },
        _ => bail!(pulsekit::Error::InvalidArgument(format!("unknown placer '{name}'"))),
    })
}

fn router(name: &str) -> Result<Router> {
    Ok(match name {
        "shortest_paths" => Router::ShortestPaths,
        "sabre" => Router::Sabre(SabreConfig::default()),
        "sabre_no_lookahead" => Router::Sabre(SabreConfig::without_lookahead()),
        "star" => Router::Star,
        _ => bail!(pulsekit::Error::InvalidArgument(format!("unknown router '{name}'"))),
    })
}

fn run_transpile(args: &TranspileArgs, seed: u64, out: &Output) -> Result<()> {
    let circuit = Circuit::from_json(&read(&args.circuit)?)?;
    let conn = connectivity(&args.connectivity)?;
    let options = TranspileOptions {
        placer: placer(&args.placer, seed)?,
        router: router(&args.router)?,
        unroll: UnrollOptions { natives: args.natives, fuse: !args.no_fuse },
    };
    let t = transpile(&circuit, &conn, &options)?;
    let overhead = cnot_overhead(&circuit, &t.circuit).ok();
    out.write("transpiled.json", &(t.circuit.to_json()? + "\n"))?;
    let summary = serde_json::json!({
        "initial_layout": t.initial_layout.as_slice(),
        "final_layout": t.final_layout.as_slice(),
        "cnot_count": t.circuit.cnot_count(),
        "cnot_overhead": overhead,
    });
    out.write("transpile_summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    let stats = format!(
        "original_cnots,routed_cnots,overhead,gates\n{},{},{},{}\n",
        circuit.cnot_count(),
        t.circuit.cnot_count(),
        overhead.map_or(String::new(), |o| o.to_string()),
        t.circuit.gates().len()
    );
    out.write("overhead.csv", &stats)?;
    if out.dir().is_some() {
        print!("{stats}");
    }
    Ok(())
}

fn run_compile(circuit: &Path, platform: &str, seed: u64, out: &Output) -> Result<()> {
    let p = load_platform(platform, seed)?;
    let c = unroll(&Circuit::from_json(&read(circuit)?)?, NativeTwoQubit::Cz)?;
    let compiled = compile(&c, &p)?;
    out.write("compiled.json", &compiled.to_json()?)?;
    out.write("sequence.jsonl", &compiled.sequence.to_jsonl()?)
}

fn run_experiment(args: &ExperimentArgs, seed: u64, out: &Output) -> Result<()> {
    let mut p = load_platform(&args.platform, seed)?;
    let q = args.qubit;
    let params = p.qubit(q)?.params.clone();
    let shots = |base: ShotSettings| ShotSettings { nshots: args.nshots.unwrap_or(base.nshots), ..base };
    let points = |default: usize| args.points.unwrap_or(default);
    let outcome = match args.name.as_str() {
        "resonator_spectroscopy" => {
            experiments::resonator_spectroscopy(&mut p, q, 20e6, points(100), shots(ShotSettings::SPECTROSCOPY))?
        }
        "qubit_spectroscopy" => {
            experiments::qubit_spectroscopy(&mut p, q, 8e6, points(300), 2000, None, shots(ShotSettings::SPECTROSCOPY))?
        }
        "rabi_amplitude" => {
            let hi = (2.0 * params.pi_pulse.amplitude.abs()).min(1.0);
            experiments::rabi_amplitude(&mut p, q, (0.0, hi), points(75), shots(ShotSettings::STANDARD))?
        }
        "ramsey_detuned" => {
            let delays = experiments::delay_grid(4000.0, points(50), p.settings().granularity_ns);
            experiments::ramsey_detuned(&mut p, q, &delays, 1e6, shots(ShotSettings::STANDARD))?
        }
        "t1" => {
            let delays = experiments::delay_grid(3.0 * params.t1, points(30), p.settings().granularity_ns);
            experiments::t1(&mut p, q, &delays, shots(ShotSettings::STANDARD))?
        }
        "t2" => {
            let delays = experiments::delay_grid(3.0 * params.t2, points(30), p.settings().granularity_ns);
            experiments::t2(&mut p, q, &delays, shots(ShotSettings::STANDARD))?
        }
        "single_shot_classification" => {
            experiments::single_shot_classification(&mut p, q, args.nshots.unwrap_or(4096))?
        }
        "standard_rb" => {
            let config = experiments::RbConfig {
                seed,
                nshots: args.nshots.unwrap_or(1024),
                n_sequences: args.points.unwrap_or(64),
                ..Default::default()
            };
            let rb = experiments::standard_rb(&p, q, &config)?;
            out.write("standard_rb.json", &rb.report().to_json()?)?;
            out.write("standard_rb.csv", &rb.survival_csv())?;
            return Ok(());
        }
        other => bail!(pulsekit::Error::InvalidArgument(format!("unknown experiment '{other}'"))),
    };
    out.write(&format!("{}.json", outcome.routine), &outcome.report().to_json()?)?;
    out.write(&format!("{}.csv", outcome.routine), &outcome.points.to_csv())?;
    if !outcome.fit.success {
        bail!(FitFailed(outcome.routine));
    }
    if let Some(path) = &args.save_platform {
        p.save(path)?;
    }
    Ok(())
}

fn run_benchmark(args: &BenchmarkArgs, seed: u64, out: &Output) -> Result<()> {
    let args = &args.with_config()?;
    let mut p = load_platform(&args.platform, seed)?;
    let suite = Routine::parse_suite(&args.suite)?;
    let options = BenchOptions { mode: args.mode, repetitions: args.repetitions, fast_reset: args.fast_reset };
    let records = bench::run_benchmark(&mut p, &suite, args.qubit, &options)?;
    out.write("benchmark.csv", &bench::records_to_csv(&records)?)?;
    out.write("benchmark.json", &bench::summary_json(&records)?)?;
    if let Some(kind) = args.scaling {
        let rows = bench::scaling_study(&p, kind, args.qubit, &args.points, ShotSettings::STANDARD, args.mode)?;
        let mut csv = String::from("points,ideal_s,real_s,ratio\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{},{}\n", r.points, r.ideal_s, r.real_s, r.ratio));
        }
        out.write("scaling.csv", &csv)?;
    }
    if let Some(n) = args.compare_batch {
        let c = bench::batch_vs_loop(&p, args.qubit, n, ShotSettings::STANDARD, args.mode)?;
        out.write("batch_vs_loop.json", &(serde_json::to_string_pretty(&c)? + "\n"))?;
    }
    Ok(())
}

fn run_chsh(args: &ChshArgs, seed: u64, out: &Output) -> Result<()> {
    let p = load_platform(&args.platform, seed)?;
    let [a, b] = args.pair[..] else {
        bail!(pulsekit::Error::InvalidArgument("--pair takes exactly two qubits".into()));
    };
    let thetas = if args.thetas.is_empty() {
        linspace(0.0, 7.0 * std::f64::consts::PI / 8.0, 8)
    } else {
        args.thetas.clone()
    };
    let outcome = experiments::chsh(&p, (a, b), &thetas, args.nshots, args.mitigate)?;
    out.write("chsh.json", &outcome.report().to_json()?)?;
    out.write("chsh.csv", &outcome.to_csv())
}

fn run_report(dir: &Path, out: &Output) -> Result<()> {
    let summary = output::collate(dir)?;
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    match out.dir() {
        Some(_) => out.write("summary.json", &text),
        None => {
            std::fs::write(dir.join("summary.json"), &text)
                .with_context(|| format!("cannot write {}", dir.join("summary.json").display()))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(v) => v.parse().with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer"))?,
        Err(_) => cli.seed,
    };
    let out = Output::new(cli.output.clone())?;
    match &cli.command {
        Command::Transpile(args) => run_transpile(args, seed, &out),
        Command::Compile { circuit, platform } => run_compile(circuit, platform, seed, &out),
        Command::RunExperiment(args) => run_experiment(args, seed, &out),
        Command::Benchmark(args) => run_benchmark(args, seed, &out),
        Command::Chsh(args) => run_chsh(args, seed, &out),
        Command::Report { dir } => run_report(dir, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(output::exit_code(&e))
        }
    }
}
