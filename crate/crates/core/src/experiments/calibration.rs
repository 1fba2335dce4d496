use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::{apply_updates, excited_population, require_points, Points, Report, ShotSettings};
use crate::acquisition::{classify, AcquisitionType, AveragingMode, Classification};
use crate::error::{Error, Result};
use crate::fit::{best_fit, linspace, FitResult, Solution};
use crate::platform::Platform;
use crate::pulse::{render_envelope, EnvelopeShape, Pulse, PulseSequence};
use crate::sweep::{Parameter, SweepMode, Sweeper};
use crate::QubitId;

/// Result of a single-qubit calibration routine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationOutcome {
    pub routine: String,
    pub qubit: QubitId,
    pub inputs: serde_json::Value,
    pub fit: FitResult,
    pub points: Points,
    pub updated_parameters: BTreeMap<String, serde_json::Value>,
}

impl CalibrationOutcome {
    pub fn report(&self) -> Report {
        Report {
            routine: self.routine.clone(),
            inputs: self.inputs.clone(),
            fit: serde_json::to_value(&self.fit).expect("fit results serialize"),
            updated_parameters: self.updated_parameters.clone(),
        }
    }
}

fn outcome(
    routine: &str,
    qubit: QubitId,
    inputs: serde_json::Value,
    fit: FitResult,
    points: Points,
    updated_parameters: BTreeMap<String, serde_json::Value>,
) -> CalibrationOutcome {
    CalibrationOutcome { routine: routine.into(), qubit, inputs, fit, points, updated_parameters }
}

fn readout_only(platform: &Platform, qubit: QubitId, start: u64) -> Result<(PulseSequence, crate::pulse::PulseId)> {
    let mut seq = PulseSequence::new();
    let id = seq.add(platform.qubit(qubit)?.readout_pulse(start, 0)?)?;
    Ok((seq, id))
}

fn populations_from_sweep(
    platform: &Platform,
    qubit: QubitId,
    seq: &PulseSequence,
    sweeper: Sweeper,
    shots: ShotSettings,
) -> Result<Vec<f64>> {
    let rs = platform.sweep(seq, &[sweeper], &shots.averaged_iq())?;
    let cls = platform.qubit(qubit)?.params.classification;
    Ok(rs.acquisition(0)?.mean_iq()?.iter().map(|z| excited_population(*z, &cls)).collect())
}

fn populations_from_batch(platform: &Platform, qubit: QubitId, seqs: &[PulseSequence], shots: ShotSettings) -> Result<Vec<f64>> {
    let cls = platform.qubit(qubit)?.params.classification;
    platform
        .execute_batch(seqs, &shots.averaged_iq())?
        .iter()
        .map(|rs| Ok(excited_population(rs.acquisition(0)?.mean_iq()?[0], &cls)))
        .collect()
}

fn lorentzian(x: f64, p: &[f64]) -> f64 {
    let (x0, g, a, b) = (p[0], p[1], p[2], p[3]);
    b + a * g * g / ((x - x0).powi(2) + g * g)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Fit a Lorentzian peak (`dip = false`) or dip to normalized data.
/// Returns the solution and whether it passes the sanity checks.
fn fit_lorentzian(x: &[f64], y: &[f64], dip: bool) -> Result<(Solution, bool)> {
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let yn: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let b0 = median(&yn);
    let k = if dip {
        (0..yn.len()).min_by(|&i, &j| yn[i].total_cmp(&yn[j]))
    } else {
        (0..yn.len()).max_by(|&i, &j| yn[i].total_cmp(&yn[j]))
    }
    .expect("non-empty data");
    let a0 = yn[k] - b0;
    let step = (x[x.len() - 1] - x[0]).abs() / (x.len() - 1) as f64;
    let wide = yn.iter().filter(|v| ((*v - b0) / a0) > 0.5).count() as f64;
    let g0 = (wide * step / 2.0).max(step);
    let starts: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|f| vec![x[k], g0 * f, a0, b0]).collect();
    let mut s = best_fit(lorentzian, x, &yn, &starts)?;
    s.params[1] = s.params[1].abs();
    let (lo, hi) = (x[0].min(x[x.len() - 1]), x[0].max(x[x.len() - 1]));
    let [x0, g, a, _] = [s.params[0], s.params[1], s.params[2], s.params[3]];
    let ok = s.converged
        && s.errors[2].is_finite()
        && a.abs() >= 5.0 * s.errors[2]
        && (dip == (a < 0.0))
        && (lo..=hi).contains(&x0)
        && g >= step / 2.0
        && 2.0 * g <= hi - lo;
    s.params[2] *= scale;
    s.params[3] *= scale;
    s.errors[2] *= scale;
    s.errors[3] *= scale;
    s.rss *= scale * scale;
    Ok((s, ok))
}

/// Fit result of a Lorentzian over offsets in MHz around `centre` Hz.
fn lorentzian_result(s: &Solution, ok: bool, centre: f64, amplitude_name: &str) -> FitResult {
    let mut fit = FitResult { residual_norm: s.residual_norm(), success: ok, ..Default::default() };
    fit.set("frequency", centre + s.params[0] * 1e6, s.errors[0] * 1e6);
    fit.set("linewidth", 2.0 * s.params[1] * 1e6, 2.0 * s.errors[1] * 1e6);
    fit.set(amplitude_name, s.params[2], s.errors[2]);
    fit.set("offset", s.params[3], s.errors[3]);
    fit
}

/// Sweep the readout frequency over `span` Hz around the current readout
/// frequency and fit the resonator dip in `|IQ|^2`.
pub fn resonator_spectroscopy(
    platform: &mut Platform,
    qubit: QubitId,
    span: f64,
    n_points: usize,
    shots: ShotSettings,
) -> Result<CalibrationOutcome> {
    require_points(n_points, 5, "resonator spectroscopy")?;
    let centre = platform.qubit(qubit)?.params.readout_frequency;
    let offsets = linspace(-span / 2.0, span / 2.0, n_points);
    let (seq, ro) = readout_only(platform, qubit, 0)?;
    let sweeper = Sweeper::new(Parameter::Frequency, offsets.clone(), vec![ro]).with_mode(SweepMode::Offset);
    let rs = platform.sweep(&seq, &[sweeper], &shots.averaged_iq())?;
    let power: Vec<f64> = rs.acquisition(0)?.mean_iq()?.iter().map(|z| z.norm_sqr()).collect();
    let x: Vec<f64> = offsets.iter().map(|o| o / 1e6).collect();
    let (s, ok) = fit_lorentzian(&x, &power, true)?;
    let fit = lorentzian_result(&s, ok, centre, "depth");
    let updated = if ok {
        apply_updates(platform, qubit, vec![("readout_frequency", json!(fit.value("frequency")))])?
    } else {
        BTreeMap::new()
    };
    let inputs = json!({ "qubit": qubit, "span": span, "n_points": n_points, "shots": shots });
    let freqs = offsets.iter().map(|o| centre + o).collect();
    Ok(outcome("resonator_spectroscopy", qubit, inputs, fit, Points::new("frequency", "power", freqs, power), updated))
}

/// Amplitude of a rectangular pulse of `duration` ns with the same area as
/// the calibrated pi pulse.
pub fn equivalent_rectangular_amplitude(platform: &Platform, qubit: QubitId, duration: u64) -> Result<f64> {
    let pi = &platform.qubit(qubit)?.params.pi_pulse;
    let area = render_envelope(pi.shape, pi.amplitude, pi.duration as f64, platform.settings().sampling_rate)?.area().norm();
    Ok(area / duration as f64)
}

/// Sweep a long drive tone over `span` Hz around the drive frequency and fit
/// the excited-population peak. `amplitude = None` uses a pi-area tone.
pub fn qubit_spectroscopy(
    platform: &mut Platform,
    qubit: QubitId,
    span: f64,
    n_points: usize,
    drive_duration: u64,
    amplitude: Option<f64>,
    shots: ShotSettings,
) -> Result<CalibrationOutcome> {
    require_points(n_points, 5, "qubit spectroscopy")?;
    let q = platform.qubit(qubit)?;
    let centre = q.params.drive_frequency;
    let amplitude = match amplitude {
        Some(a) => a,
        None => equivalent_rectangular_amplitude(platform, qubit, drive_duration)?,
    };
    let drive = Pulse::drive(qubit, q.drive_channel()?, 0, drive_duration)
        .with_amplitude(amplitude)
        .with_frequency(centre)
        .with_shape(EnvelopeShape::Rectangular);
    let mut seq = PulseSequence::new();
    let d = seq.add(drive)?;
    seq.add(q.readout_pulse(drive_duration, 0)?)?;
    let offsets = linspace(-span / 2.0, span / 2.0, n_points);
    let sweeper = Sweeper::new(Parameter::Frequency, offsets.clone(), vec![d]).with_mode(SweepMode::Offset);
    let pop = populations_from_sweep(platform, qubit, &seq, sweeper, shots)?;
    let x: Vec<f64> = offsets.iter().map(|o| o / 1e6).collect();
    let (s, ok) = fit_lorentzian(&x, &pop, false)?;
    let fit = lorentzian_result(&s, ok, centre, "amplitude");
    let updated = if ok {
        apply_updates(platform, qubit, vec![("drive_frequency", json!(fit.value("frequency")))])?
    } else {
        BTreeMap::new()
    };
    let inputs = json!({
        "qubit": qubit, "span": span, "n_points": n_points,
        "drive_duration": drive_duration, "drive_amplitude": amplitude, "shots": shots,
    });
    let freqs = offsets.iter().map(|o| centre + o).collect();
    Ok(outcome("qubit_spectroscopy", qubit, inputs, fit, Points::new("frequency", "excited_population", freqs, pop), updated))
}

/// Sweep the pi-pulse amplitude over `[lo, hi]` and fit
/// `P = b + a (1 - cos(pi x / a_pi)) / 2`.
pub fn rabi_amplitude(
    platform: &mut Platform,
    qubit: QubitId,
    range: (f64, f64),
    n_points: usize,
    shots: ShotSettings,
) -> Result<CalibrationOutcome> {
    require_points(n_points, 5, "Rabi amplitude")?;
    let (lo, hi) = range;
    if !(lo < hi && lo.abs() <= 1.0 && hi.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!("amplitude range [{lo}, {hi}] must be increasing within [-1, 1]")));
    }
    let q = platform.qubit(qubit)?;
    let pi = q.pi_pulse(0)?;
    let ro_start = pi.finish();
    let mut seq = PulseSequence::new();
    let d = seq.add(pi)?;
    seq.add(q.readout_pulse(ro_start, 0)?)?;
    let amps = linspace(lo, hi, n_points);
    let pop = populations_from_sweep(platform, qubit, &seq, Sweeper::new(Parameter::Amplitude, amps.clone(), vec![d]), shots)?;

    let model = |x: f64, p: &[f64]| p[2] + p[1] * 0.5 * (1.0 - (PI * x / p[0]).cos());
    let (ymin, ymax) = pop.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let reach = lo.abs().max(hi.abs());
    let starts: Vec<Vec<f64>> = linspace(0.1, 2.0, 30).into_iter().map(|f| vec![f * reach, ymax - ymin, ymin]).collect();
    let s = best_fit(model, &amps, &pop, &starts)?;
    let mut fit = FitResult::from_solution(&["pi_amplitude", "contrast", "offset"], &s);
    let a_pi = s.params[0].abs();
    fit.set("pi_amplitude", a_pi, s.errors[0]);
    fit.require_significant("contrast", 5.0);
    fit.success &= a_pi > 0.0 && a_pi <= 1.0;
    let updated = if fit.success {
        apply_updates(platform, qubit, vec![("pi_pulse.amplitude", json!(a_pi))])?
    } else {
        BTreeMap::new()
    };
    let inputs = json!({ "qubit": qubit, "range": [lo, hi], "n_points": n_points, "shots": shots });
    Ok(outcome("rabi_amplitude", qubit, inputs, fit, Points::new("amplitude", "excited_population", amps, pop), updated))
}

/// Two pi/2 pulses separated by `gap` ns, the second with extra phase.
fn ramsey_sequence(platform: &Platform, qubit: QubitId, gap: u64, phase: f64) -> Result<PulseSequence> {
    let q = platform.qubit(qubit)?;
    let first = q.half_pi_pulse(0)?;
    let second = q.half_pi_pulse(first.finish() + gap)?.with_phase(phase);
    let ro = q.readout_pulse(second.finish(), 0)?;
    PulseSequence::new().with(first)?.with(second)?.with(ro)
}

/// Frequency with the largest periodogram power, in cycles per unit of `t`.
fn dominant_frequency(t: &[f64], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let span = t.iter().cloned().fold(f64::MIN, f64::max) - t.iter().cloned().fold(f64::MAX, f64::min);
    let mut dt: Vec<f64> = t.windows(2).map(|w| (w[1] - w[0]).abs()).filter(|d| *d > 0.0).collect();
    dt.sort_by(f64::total_cmp);
    let nyquist = 0.5 / dt.first().copied().unwrap_or(1.0);
    let df = 0.25 / span;
    let mut best = (0.0, f64::MIN);
    let mut f = df;
    while f <= nyquist {
        let z: Complex64 = t.iter().zip(y).map(|(&ti, &yi)| Complex64::from_polar(yi - mean, -2.0 * PI * f * ti)).sum();
        if z.norm() > best.1 {
            best = (f, z.norm());
        }
        f += df;
    }
    best.0
}

/// Ramsey with an artificial detuning: the second pulse phase advances by
/// `2 pi detuning gap`. The fitted oscillation frequency minus the detuning
/// is the qubit-minus-drive offset (valid while the offset is smaller than
/// the detuning); the drive frequency is moved by it.
pub fn ramsey_detuned(
    platform: &mut Platform,
    qubit: QubitId,
    delays: &[u64],
    artificial_detuning: f64,
    shots: ShotSettings,
) -> Result<CalibrationOutcome> {
    require_points(delays.len(), 5, "Ramsey")?;
    if delays.iter().all(|&d| d == delays[0]) {
        return Err(Error::InvalidArgument("Ramsey delays must not all be equal".into()));
    }
    let seqs = delays
        .iter()
        .map(|&gap| ramsey_sequence(platform, qubit, gap, 2.0 * PI * artificial_detuning * gap as f64 * 1e-9))
        .collect::<Result<Vec<_>>>()?;
    let pop = populations_from_batch(platform, qubit, &seqs, shots)?;
    let t_us: Vec<f64> = delays.iter().map(|&d| d as f64 / 1e3).collect();

    let model = |t: f64, p: &[f64]| p[3] + p[2] * (-t / p[1]).exp() * (2.0 * PI * p[0] * t + p[4]).cos();
    let f0 = dominant_frequency(&t_us, &pop);
    let t_max = t_us.iter().cloned().fold(0.0, f64::max);
    let mean = pop.iter().sum::<f64>() / pop.len() as f64;
    let amp = pop.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let starts: Vec<Vec<f64>> = [0.0, PI / 2.0, PI, -PI / 2.0]
        .iter()
        .flat_map(|&ph| [0.5, 2.0].map(|k| vec![f0, k * t_max, amp, mean, ph]))
        .collect();
    let s = best_fit(model, &t_us, &pop, &starts)?;
    let (f_mhz, t2_us) = (s.params[0].abs(), s.params[1]);
    let mut fit = FitResult { residual_norm: s.residual_norm(), success: s.converged, ..Default::default() };
    let offset = f_mhz * 1e6 - artificial_detuning;
    fit.set("frequency", f_mhz * 1e6, s.errors[0] * 1e6);
    fit.set("detuning", offset, s.errors[0] * 1e6);
    fit.set("t2", t2_us * 1e3, s.errors[1] * 1e3);
    fit.set("amplitude", s.params[2], s.errors[2]);
    fit.set("offset", s.params[3], s.errors[3]);
    fit.set("phase", s.params[4], s.errors[4]);
    fit.require_significant("amplitude", 5.0);
    fit.success &= t2_us > 0.0;
    let updated = if fit.success {
        let drive = platform.qubit(qubit)?.params.drive_frequency + offset;
        apply_updates(platform, qubit, vec![("drive_frequency", json!(drive))])?
    } else {
        BTreeMap::new()
    };
    let inputs = json!({ "qubit": qubit, "delays": delays, "artificial_detuning": artificial_detuning, "shots": shots });
    let x = delays.iter().map(|&d| d as f64).collect();
    Ok(outcome("ramsey_detuned", qubit, inputs, fit, Points::new("delay", "excited_population", x, pop), updated))
}

fn fit_decay(t_us: &[f64], pop: &[f64]) -> Result<Solution> {
    let model = |t: f64, p: &[f64]| p[1] * (-t / p[0]).exp() + p[2];
    let (first, last) = (pop[0], pop[pop.len() - 1]);
    let t_max = t_us.iter().cloned().fold(0.0, f64::max);
    let starts: Vec<Vec<f64>> = [0.1, 0.3, 1.0].iter().map(|k| vec![k * t_max, first - last, last]).collect();
    best_fit(model, t_us, pop, &starts)
}

fn decay_outcome(
    platform: &mut Platform,
    routine: &str,
    qubit: QubitId,
    delays: &[u64],
    pop: Vec<f64>,
    shots: ShotSettings,
    parameter: &str,
) -> Result<CalibrationOutcome> {
    let t_us: Vec<f64> = delays.iter().map(|&d| d as f64 / 1e3).collect();
    let s = fit_decay(&t_us, &pop)?;
    let mut fit = FitResult { residual_norm: s.residual_norm(), success: s.converged, ..Default::default() };
    fit.set(parameter, s.params[0] * 1e3, s.errors[0] * 1e3);
    fit.set("amplitude", s.params[1], s.errors[1]);
    fit.set("offset", s.params[2], s.errors[2]);
    fit.require_significant("amplitude", 5.0);
    fit.require_significant(parameter, 3.0);
    fit.success &= s.params[0] > 0.0;
    let updated = if fit.success {
        apply_updates(platform, qubit, vec![(parameter, json!(s.params[0] * 1e3))])?
    } else {
        BTreeMap::new()
    };
    let inputs = json!({ "qubit": qubit, "delays": delays, "shots": shots });
    let x = delays.iter().map(|&d| d as f64).collect();
    Ok(outcome(routine, qubit, inputs, fit, Points::new("delay", "excited_population", x, pop), updated))
}

fn check_delays(delays: &[u64], what: &str) -> Result<()> {
    require_points(delays.len(), 3, what)?;
    if delays.iter().all(|&d| d == delays[0]) {
        return Err(Error::InvalidArgument(format!("{what} delays must not all be equal")));
    }
    Ok(())
}

/// `n` delays from 0 to `stop` ns, rounded down to multiples of `step`.
pub fn delay_grid(stop: f64, n: usize, step: u64) -> Vec<u64> {
    let step = step.max(1);
    linspace(0.0, stop, n).into_iter().map(|t| (t as u64) / step * step).collect()
}

/// Pi pulse, wait, measure; exponential fit of the excited population.
pub fn t1(platform: &mut Platform, qubit: QubitId, delays: &[u64], shots: ShotSettings) -> Result<CalibrationOutcome> {
    check_delays(delays, "T1")?;
    let q = platform.qubit(qubit)?;
    let pi = q.pi_pulse(0)?;
    let base = pi.finish();
    let mut seq = PulseSequence::new();
    seq.add(pi)?;
    let ro = seq.add(q.readout_pulse(base, 0)?)?;
    let starts = delays.iter().map(|&d| (base + d) as f64).collect();
    let pop = populations_from_sweep(platform, qubit, &seq, Sweeper::new(Parameter::Start, starts, vec![ro]), shots)?;
    decay_outcome(platform, "t1", qubit, delays, pop, shots, "t1")
}

/// Two resonant pi/2 pulses separated by the delay; exponential fit of the
/// coherence decay.
pub fn t2(platform: &mut Platform, qubit: QubitId, delays: &[u64], shots: ShotSettings) -> Result<CalibrationOutcome> {
    check_delays(delays, "T2")?;
    let seqs = delays.iter().map(|&gap| ramsey_sequence(platform, qubit, gap, 0.0)).collect::<Result<Vec<_>>>()?;
    let pop = populations_from_batch(platform, qubit, &seqs, shots)?;
    decay_outcome(platform, "t2", qubit, delays, pop, shots, "t2")
}

/// Measure IQ clouds for prepared `|0>` and `|1>`, fit the linear
/// discriminant and report the assignment fidelity `1 - (e01 + e10) / 2`.
pub fn single_shot_classification(platform: &mut Platform, qubit: QubitId, nshots: u32) -> Result<CalibrationOutcome> {
    let q = platform.qubit(qubit)?;
    let pi = q.pi_pulse(0)?;
    let zero = PulseSequence::new().with(q.readout_pulse(pi.finish(), 0)?)?;
    let one = zero.clone().with(pi)?;
    let shots = ShotSettings { nshots, relaxation_time: ShotSettings::STANDARD.relaxation_time };
    let results = platform.execute_batch(&[zero, one], &shots.options(AcquisitionType::Integrated, AveragingMode::Singleshot))?;
    let clouds: Vec<Vec<Complex64>> = results
        .iter()
        .map(|rs| rs.acquisition(0)?.iq().ok_or_else(|| Error::Acquisition("expected IQ data".into())))
        .collect::<Result<_>>()?;
    let mean = |v: &[Complex64]| v.iter().sum::<Complex64>() / v.len() as f64;
    let cls = Classification::from_means(mean(&clouds[0]), mean(&clouds[1]));
    let rate = |v: &[Complex64], state: u8| v.iter().filter(|z| classify(**z, &cls) != state).count() as f64 / v.len() as f64;
    let (e01, e10) = (rate(&clouds[0], 0), rate(&clouds[1], 1));
    let n = f64::from(nshots);
    let fidelity = 1.0 - (e01 + e10) / 2.0;
    let mut fit = FitResult { success: true, ..Default::default() };
    fit.set("e01", e01, (e01 * (1.0 - e01) / n).sqrt());
    fit.set("e10", e10, (e10 * (1.0 - e10) / n).sqrt());
    fit.set("assignment_fidelity", fidelity, ((e01 * (1.0 - e01) + e10 * (1.0 - e10)) / n).sqrt() / 2.0);
    fit.set("rotation", cls.rotation, 0.0);
    fit.set("threshold", cls.threshold, 0.0);
    fit.success = cls.mean(0) != cls.mean(1);
    let updated = if fit.success {
        apply_updates(platform, qubit, vec![("classification", serde_json::to_value(cls)?)])?
    } else {
        BTreeMap::new()
    };
    let inputs = json!({ "qubit": qubit, "nshots": nshots });
    let points = Points::new("prepared_state", "error_rate", vec![0.0, 1.0], vec![e01, e10]);
    Ok(outcome("single_shot_classification", qubit, inputs, fit, points, updated))
}
