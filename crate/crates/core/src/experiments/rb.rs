use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use serde_json::json;

use super::{Points, Report};
use crate::acquisition::{AcquisitionType, AveragingMode, ExecutionOptions};
use crate::circuit::{Circuit, Gate};
use crate::compiler::compile;
use crate::error::{Error, Result};
use crate::experiments::clifford::CliffordTable;
use crate::fit::{curve_fit, linear_regression, FitResult, Solution};
use crate::platform::Platform;
use crate::pulse::PulseSequence;
use crate::rng::stream_rng;
use crate::transpiler::{unroll_with, NativeTwoQubit, UnrollOptions};
use crate::QubitId;

/// Average number of pi/2 pulses per single-qubit Clifford.
pub const PI_HALF_PER_CLIFFORD: f64 = 1.875;

const BOOTSTRAP_STREAM: u64 = 0xB007;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbConfig {
    pub depths: Vec<u64>,
    pub n_sequences: usize,
    pub nshots: u32,
    /// ns
    pub relaxation_time: u64,
    /// Seeds the random Clifford sequences and the bootstrap.
    pub seed: u64,
    pub bootstrap_samples: usize,
}

impl Default for RbConfig {
    fn default() -> Self {
        RbConfig {
            depths: crate::fit::log_spaced_integers(1, 512, 10),
            n_sequences: 64,
            nshots: 1024,
            relaxation_time: 300_000,
            seed: 0,
            bootstrap_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbOutcome {
    pub qubit: QubitId,
    pub config: RbConfig,
    /// `survival[d][s]`: frequency of classified 0 for sequence `s` at depth `d`.
    pub survival: Vec<Vec<f64>>,
    pub amplitude: f64,
    pub decay: f64,
    pub baseline: f64,
    /// Bootstrap standard deviations of `(amplitude, decay, baseline)`.
    pub errors: [f64; 3],
    pub fidelity: f64,
    pub fidelity_error: f64,
    pub pi_half_fidelity: f64,
    pub pi_half_fidelity_error: f64,
}

/// `F = 1 - (1 - p) / 2` for a single qubit.
pub fn average_gate_fidelity(p: f64) -> f64 {
    1.0 - (1.0 - p) / 2.0
}

/// Fidelity per pi/2 pulse given the average Clifford fidelity.
pub fn pi_half_fidelity(clifford_fidelity: f64) -> f64 {
    1.0 - (1.0 - clifford_fidelity) / PI_HALF_PER_CLIFFORD
}

impl RbOutcome {
    pub fn mean_survival(&self) -> Vec<f64> {
        self.survival.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect()
    }

    pub fn points(&self) -> Points {
        let x = self.config.depths.iter().map(|&d| d as f64).collect();
        Points::new("depth", "survival", x, self.mean_survival())
    }

    pub fn fit_result(&self) -> FitResult {
        let mut fit = FitResult { success: true, ..Default::default() };
        fit.set("amplitude", self.amplitude, self.errors[0]);
        fit.set("decay", self.decay, self.errors[1]);
        fit.set("baseline", self.baseline, self.errors[2]);
        fit.set("fidelity", self.fidelity, self.fidelity_error);
        fit.set("pi_half_fidelity", self.pi_half_fidelity, self.pi_half_fidelity_error);
        let model_rss: f64 = self
            .config
            .depths
            .iter()
            .zip(self.mean_survival())
            .map(|(&m, y)| (y - decay_model(m as f64, &[self.amplitude, self.decay, self.baseline])).powi(2))
            .sum();
        fit.residual_norm = model_rss.sqrt();
        fit
    }

    pub fn report(&self) -> Report {
        Report {
            routine: "standard_rb".into(),
            inputs: json!({ "qubit": self.qubit, "config": self.config }),
            fit: serde_json::to_value(self.fit_result()).expect("fit results serialize"),
            updated_parameters: Default::default(),
        }
    }

    /// One row per depth and sequence.
    pub fn survival_csv(&self) -> String {
        let mut out = String::from("depth,sequence,survival\n");
        for (d, row) in self.config.depths.iter().zip(&self.survival) {
            for (s, v) in row.iter().enumerate() {
                out.push_str(&format!("{d},{s},{v}\n"));
            }
        }
        out
    }
}

fn decay_model(m: f64, p: &[f64]) -> f64 {
    p[0] * p[1].powf(m) + p[2]
}

/// Clifford indices of every sequence, depth-major. Each sequence ends with
/// the inverse of its product.
pub fn rb_sequences(table: &CliffordTable, depths: &[u64], n_sequences: usize, seed: u64) -> Vec<Vec<Vec<usize>>> {
    depths
        .iter()
        .enumerate()
        .map(|(d, &m)| {
            (0..n_sequences)
                .map(|s| {
                    let mut rng = stream_rng(seed, (d * n_sequences + s) as u64);
                    let mut seq: Vec<usize> = (0..m).map(|_| rng.random_range(0..CliffordTable::SIZE)).collect();
                    seq.push(table.inverse(table.net(&seq)));
                    seq
                })
                .collect()
        })
        .collect()
}

/// Circuit of U3 gates for one Clifford sequence, measured on `qubit`.
pub fn rb_circuit(table: &CliffordTable, qubit: QubitId, cliffords: &[usize]) -> Result<Circuit> {
    let mut c = Circuit::new(qubit + 1);
    for &k in cliffords {
        let (t, p, l) = table.get(k).u3;
        c.add(Gate::U3(qubit, t, p, l))?;
    }
    c.add(Gate::Measure(vec![qubit]))?;
    // unfused: every Clifford stays one U3, i.e. two pulses
    unroll_with(&c, &UnrollOptions { natives: NativeTwoQubit::Cz, fuse: false })
}

/// Initial guess: `B` = longest-depth mean, `A` = shortest-depth mean - B,
/// `p` from a log-linear regression of the positive `mean - B`.
fn initial_guess(depths: &[f64], mean: &[f64]) -> [f64; 3] {
    let b = mean[mean.len() - 1];
    let a = mean[0] - b;
    let (x, y): (Vec<f64>, Vec<f64>) =
        depths.iter().zip(mean).filter(|(_, v)| **v - b > 1e-9).map(|(m, v)| (*m, (v - b).ln())).unzip();
    let p = linear_regression(&x, &y).map(|(_, slope)| slope.exp()).unwrap_or(0.999);
    [a, p.clamp(0.5, 1.0), b]
}

fn fit_decay(depths: &[f64], mean: &[f64], p0: &[f64]) -> Result<Solution> {
    let s = curve_fit(decay_model, depths, mean, p0)?;
    if !s.converged || !(s.params[1] > 0.0) {
        return Err(Error::Fit(format!("RB decay fit diverged (p = {})", s.params[1])));
    }
    Ok(s)
}

/// True when the shortest and longest depths agree within three standard
/// errors, so no decay is resolvable and `p` is not identifiable.
fn no_resolvable_decay(survival: &[Vec<f64>], nshots: u32) -> bool {
    let stats = |row: &[f64]| {
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let spread = if row.len() > 1 { std_dev(row).powi(2) / n } else { 0.0 };
        (mean, spread + mean * (1.0 - mean) / (n * f64::from(nshots)))
    };
    let (first, v1) = stats(&survival[0]);
    let (last, v2) = stats(&survival[survival.len() - 1]);
    survival.len() < 2 || first - last <= 3.0 * (v1 + v2).sqrt()
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

/// Standard single-qubit randomized benchmarking.
pub fn standard_rb(platform: &Platform, qubit: QubitId, config: &RbConfig) -> Result<RbOutcome> {
    if config.depths.is_empty() || config.n_sequences == 0 {
        return Err(Error::InvalidArgument("RB needs at least one depth and one sequence".into()));
    }
    let table = CliffordTable::new()?;
    let sequences = rb_sequences(&table, &config.depths, config.n_sequences, config.seed);
    let mut compiled: Vec<PulseSequence> = Vec::new();
    for per_depth in &sequences {
        for cl in per_depth {
            compiled.push(compile(&rb_circuit(&table, qubit, cl)?, platform)?.sequence);
        }
    }
    let options = ExecutionOptions::new(config.nshots, AcquisitionType::Classified, AveragingMode::Cyclic)
        .with_relaxation(config.relaxation_time);
    let results = platform.execute_batch(&compiled, &options)?;
    let flat: Vec<f64> = results
        .iter()
        .map(|rs| Ok(1.0 - rs.acquisition(0)?.probabilities()?[0]))
        .collect::<Result<_>>()?;
    let survival: Vec<Vec<f64>> = flat.chunks(config.n_sequences).map(<[f64]>::to_vec).collect();

    let depths: Vec<f64> = config.depths.iter().map(|&d| d as f64).collect();
    let mean: Vec<f64> = survival.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
    if no_resolvable_decay(&survival, config.nshots) {
        let b = mean.iter().sum::<f64>() / mean.len() as f64;
        let spread = std_dev(&survival.concat()) / (survival.concat().len() as f64).sqrt();
        return Ok(RbOutcome {
            qubit,
            config: config.clone(),
            survival,
            amplitude: 0.0,
            decay: 1.0,
            baseline: b,
            errors: [0.0, 0.0, spread],
            fidelity: 1.0,
            fidelity_error: 0.0,
            pi_half_fidelity: 1.0,
            pi_half_fidelity_error: 0.0,
        });
    }
    let fit = fit_decay(&depths, &mean, &initial_guess(&depths, &mean))?;

    // semi-parametric bootstrap: resample a sequence's empirical survival,
    // then draw a binomial count from it
    let mut rng = stream_rng(config.seed, BOOTSTRAP_STREAM);
    let mut samples: [Vec<f64>; 3] = Default::default();
    for _ in 0..config.bootstrap_samples {
        let boot: Vec<f64> = survival
            .iter()
            .map(|row| {
                let total: u64 = (0..row.len())
                    .map(|_| {
                        let p = row[rng.random_range(0..row.len())].clamp(0.0, 1.0);
                        Binomial::new(u64::from(config.nshots), p).expect("valid probability").sample(&mut rng)
                    })
                    .sum();
                total as f64 / (row.len() as f64 * f64::from(config.nshots))
            })
            .collect();
        if let Ok(s) = fit_decay(&depths, &boot, &fit.params) {
            for k in 0..3 {
                samples[k].push(s.params[k]);
            }
        }
    }
    if samples[1].len() < 2 {
        return Err(Error::Fit("bootstrap fits failed".into()));
    }
    let errors = [std_dev(&samples[0]), std_dev(&samples[1]), std_dev(&samples[2])];
    let p = fit.params[1];
    let fidelity = average_gate_fidelity(p);
    let fidelity_error = errors[1] / 2.0;
    Ok(RbOutcome {
        qubit,
        config: config.clone(),
        survival,
        amplitude: fit.params[0],
        decay: p,
        baseline: fit.params[2],
        errors,
        fidelity,
        fidelity_error,
        pi_half_fidelity: pi_half_fidelity(fidelity),
        pi_half_fidelity_error: fidelity_error / PI_HALF_PER_CLIFFORD,
    })
}
