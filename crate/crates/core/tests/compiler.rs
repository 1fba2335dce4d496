use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pulsekit::acquisition::{AcquisitionType, AveragingMode, ExecutionOptions};
use pulsekit::circuit::{statevector, Circuit, Gate};
use pulsekit::compiler::compile;
use pulsekit::platform::Platform;
use pulsekit::presets::Preset;
use pulsekit::transpiler::{unroll, NativeTwoQubit};

fn noiseless_star() -> Platform {
    let mut p = Platform::build(Preset::Star5.inline_config(), None).unwrap();
    let qpu = p.emulator_mut().unwrap().qpu_mut();
    for q in qpu.qubits.values_mut() {
        q.noise_sigma = 0.0;
        q.t1 = 1e15;
        q.t2 = 1e15;
        q.depolarizing = 0.0;
    }
    p
}

fn random_two_qubit_circuit(rng: &mut impl Rng) -> Circuit {
    let mut c = Circuit::new(2);
    for _ in 0..rng.random_range(3..10) {
        let q = rng.random_range(0..2);
        let a: f64 = rng.random_range(-PI..PI);
        let gate = match rng.random_range(0..8) {
            0 => Gate::H(q),
            1 => Gate::Rx(q, a),
            2 => Gate::Ry(q, a),
            3 => Gate::Rz(q, a),
            4 => Gate::U3(q, a, rng.random_range(-PI..PI), rng.random_range(-PI..PI)),
            5 => Gate::Cnot(q, 1 - q),
            6 => Gate::Cz(0, 1),
            _ => Gate::X(q),
        };
        c.add(gate).unwrap();
    }
    c
}

/// Joint outcome frequencies, index `2 * bit0 + bit1`.
fn measured_distribution(platform: &Platform, native: &Circuit, shots: u32, seed: u64) -> [f64; 4] {
    let mut measured = native.clone();
    measured.add(Gate::Measure(vec![0, 1])).unwrap();
    let compiled = compile(&measured, platform).unwrap();
    let opts = ExecutionOptions { point_offset: seed, ..ExecutionOptions::new(shots, AcquisitionType::Classified, AveragingMode::Singleshot) };
    let rs = platform.execute(&compiled.sequence, &opts).unwrap();
    let b0 = rs.acquisition(compiled.acquisition_of(0).unwrap()).unwrap().bits().unwrap().to_vec();
    let b1 = rs.acquisition(compiled.acquisition_of(1).unwrap()).unwrap().bits().unwrap().to_vec();
    let mut counts = [0.0; 4];
    for (x, y) in b0.iter().zip(&b1) {
        counts[usize::from(2 * x + y)] += 1.0;
    }
    counts.map(|c| c / f64::from(shots))
}

#[test]
fn compiled_circuits_reproduce_born_probabilities() {
    let platform = noiseless_star();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst, mut total) = (0.0_f64, 0.0);
    for k in 0..100 {
        let logical = random_two_qubit_circuit(&mut rng);
        let native = unroll(&logical, NativeTwoQubit::Cz).unwrap();
        let born: Vec<f64> = statevector(&logical).iter().map(|a| a.norm_sqr()).collect();
        let measured = measured_distribution(&platform, &native, 4096, k);
        let tv = 0.5 * born.iter().zip(measured).map(|(b, m)| (b - m).abs()).sum::<f64>();
        worst = worst.max(tv);
        total += tv;
    }
    // pure shot noise at 4096 shots already puts the largest of 100 distances near 0.02
    assert!(total / 100.0 < 0.02, "mean total-variation distance {}", total / 100.0);
    assert!(worst < 0.035, "worst total-variation distance {worst}");
}

#[test]
fn rz_before_rx_matches_unitary() {
    let platform = noiseless_star();
    for (first, second) in [(Gate::Rz(0, PI / 2.0), Gate::Rx(0, PI / 2.0)), (Gate::Rx(0, PI / 2.0), Gate::Rz(0, PI / 2.0))] {
        // follow with RX(pi/2) so the Z rotation becomes visible in the populations
        let c = Circuit::new(2).with(first).unwrap().with(second).unwrap().with(Gate::Rx(0, PI / 2.0)).unwrap();
        let born: Vec<f64> = statevector(&c).iter().map(|a| a.norm_sqr()).collect();
        let measured = measured_distribution(&platform, &c, 4096, 3);
        for (b, m) in born.iter().zip(measured) {
            assert!((b - m).abs() < 0.03, "born {born:?} measured {measured:?}");
        }
    }
}

#[test]
fn updated_pi_amplitude_reaches_the_compiler() {
    let mut platform = noiseless_star();
    platform.update_parameter(0, "pi_pulse.amplitude", serde_json::json!(0.37)).unwrap();
    let c = Circuit::new(1).with(Gate::X(0)).unwrap();
    let compiled = compile(&c, &platform).unwrap();
    assert_eq!(compiled.sequence.pulses().next().unwrap().amplitude, 0.37);
}

