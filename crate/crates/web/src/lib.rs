//! Browser bindings. Every export returns a JSON string that the page in
//! `www/` plots on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pulsekit::experiments::{self, ShotSettings};
use pulsekit::fit::linspace;
use pulsekit::platform::Platform;
use pulsekit::presets::Preset;
use pulsekit::pulse::{render_envelope, EnvelopeShape};

#[derive(Debug, Serialize)]
pub struct EnvelopeCurve {
    pub t_ns: Vec<f64>,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RabiCurve {
    pub amplitudes: Vec<f64>,
    pub population: Vec<f64>,
    pub model: Vec<f64>,
    pub pi_amplitude: f64,
    pub pi_amplitude_error: f64,
    pub true_pi_amplitude: f64,
    pub success: bool,
}

#[derive(Debug, Serialize)]
pub struct ChshCurve {
    pub theta: Vec<f64>,
    pub ideal: Vec<f64>,
    pub raw: Vec<f64>,
    pub mitigated: Option<Vec<f64>>,
}

pub fn envelope_curve(shape: &str, amplitude: f64, duration_ns: f64, rel_sigma: f64, beta: f64) -> pulsekit::Result<EnvelopeCurve> {
    let shape = match shape {
        "rectangular" => EnvelopeShape::Rectangular,
        "gaussian" => EnvelopeShape::Gaussian { rel_sigma },
        "drag" => EnvelopeShape::Drag { rel_sigma, beta },
        other => return Err(pulsekit::Error::InvalidArgument(format!("unknown shape '{other}'"))),
    };
    shape.validate()?;
    let w = render_envelope(shape, amplitude, duration_ns, 1e9)?;
    let t_ns = (0..w.len()).map(|k| k as f64 * w.dt_ns()).collect();
    Ok(EnvelopeCurve { t_ns, i: w.i, q: w.q })
}

/// Rabi scan on the single-qubit preset whose true drive coupling is
/// `coupling_scale` times the calibrated one.
pub fn rabi_curve(coupling_scale: f64, nshots: u32, seed: u64) -> pulsekit::Result<RabiCurve> {
    if !(coupling_scale > 0.0) {
        return Err(pulsekit::Error::InvalidArgument("coupling scale must be positive".into()));
    }
    let preset = Preset::SingleQubit;
    let mut qpu = preset.qpu();
    for q in qpu.qubits.values_mut() {
        q.rabi_coupling *= coupling_scale;
    }
    let mut platform = Platform::build(preset.config(pulsekit::platform::QpuSource::Inline(Box::new(qpu))), None)?;
    platform.set_seed(seed);
    let calibrated = platform.qubit(0)?.params.pi_pulse.amplitude;
    let shots = ShotSettings { nshots, ..ShotSettings::STANDARD };
    let out = experiments::rabi_amplitude(&mut platform, 0, (0.0, 1.0), 60, shots)?;
    let est = |name: &str| out.fit.parameters.get(name).map_or((f64::NAN, f64::NAN), |e| (e.value, e.error));
    let (a_pi, a_err) = est("pi_amplitude");
    let (contrast, _) = est("contrast");
    let (offset, _) = est("offset");
    let model = out
        .points
        .x
        .iter()
        .map(|&x| offset + contrast * 0.5 * (1.0 - (std::f64::consts::PI * x / a_pi).cos()))
        .collect();
    Ok(RabiCurve {
        amplitudes: out.points.x.clone(),
        population: out.points.y.clone(),
        model,
        pi_amplitude: a_pi,
        pi_amplitude_error: a_err,
        true_pi_amplitude: calibrated / coupling_scale,
        success: out.fit.success,
    })
}

/// CHSH sweep on qubits 0 and 1 of the star preset with symmetric readout
/// error `readout_error` on both qubits.
pub fn chsh_curve(readout_error: f64, nshots: u32, n_points: usize, mitigate: bool, seed: u64) -> pulsekit::Result<ChshCurve> {
    if !(0.0..0.5).contains(&readout_error) {
        return Err(pulsekit::Error::InvalidArgument("readout error must lie in [0, 0.5)".into()));
    }
    let preset = Preset::Star5;
    let mut qpu = preset.qpu();
    for q in qpu.qubits.values_mut() {
        q.e01 = readout_error;
        q.e10 = readout_error;
    }
    let mut platform = Platform::build(preset.config(pulsekit::platform::QpuSource::Inline(Box::new(qpu))), None)?;
    platform.set_seed(seed);
    let theta = linspace(0.0, 2.0 * std::f64::consts::PI, n_points.max(2));
    let out = experiments::chsh(&platform, (0, 1), &theta, nshots, mitigate)?;
    Ok(ChshCurve {
        ideal: theta.iter().map(|&t| experiments::ideal_chsh(t)).collect(),
        raw: out.points.iter().map(|p| p.s).collect(),
        mitigated: mitigate.then(|| out.points.iter().filter_map(|p| p.s_mitigated).collect()),
        theta,
    })
}

fn to_js<T: Serialize>(r: pulsekit::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn envelope(shape: &str, amplitude: f64, duration_ns: f64, rel_sigma: f64, beta: f64) -> Result<String, JsError> {
    to_js(envelope_curve(shape, amplitude, duration_ns, rel_sigma, beta))
}

#[wasm_bindgen]
pub fn rabi(coupling_scale: f64, nshots: u32, seed: u64) -> Result<String, JsError> {
    to_js(rabi_curve(coupling_scale, nshots, seed))
}

#[wasm_bindgen]
pub fn chsh(readout_error: f64, nshots: u32, n_points: usize, mitigate: bool, seed: u64) -> Result<String, JsError> {
    to_js(chsh_curve(readout_error, nshots, n_points, mitigate, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drag_envelope_has_quadrature() {
        let c = envelope_curve("drag", 0.5, 40.0, 5.0, 1.0).unwrap();
        assert_eq!(c.t_ns.len(), 40);
        let peak = c.i.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 0.5).abs() < 1e-12);
        assert!(c.q.iter().any(|v| v.abs() > 1e-6));
        assert!(envelope_curve("triangle", 0.5, 40.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn rabi_tracks_miscalibration() {
        let c = rabi_curve(1.25, 1024, 3).unwrap();
        assert!(c.success);
        assert!((c.pi_amplitude - c.true_pi_amplitude).abs() / c.true_pi_amplitude < 0.03);
        assert_eq!(c.model.len(), c.population.len());
    }

    #[test]
    fn chsh_curve_shapes() {
        let c = chsh_curve(0.05, 512, 5, true, 1).unwrap();
        assert_eq!(c.raw.len(), 5);
        assert_eq!(c.mitigated.as_ref().map(Vec::len), Some(5));
        assert!(chsh_curve(0.6, 512, 5, false, 1).is_err());
    }
}
