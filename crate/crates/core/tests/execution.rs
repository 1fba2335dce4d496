use num_complex::Complex64;
use proptest::prelude::*;
use pulsekit::acquisition::{AcquisitionType, AveragingMode, ExecutionOptions};
use pulsekit::fit::linspace;
use pulsekit::platform::Platform;
use pulsekit::presets::Preset;
use pulsekit::pulse::{PulseId, PulseSequence};
use pulsekit::sweep::{Parameter, SweepMode, Sweeper};

fn platform() -> Platform {
    Platform::build(Preset::SingleQubit.inline_config(), None).unwrap()
}

fn rabi_sequence(p: &Platform, amplitude: f64) -> (PulseSequence, PulseId, PulseId) {
    let q = p.qubit(0).unwrap();
    let mut pi = q.pi_pulse(0).unwrap();
    pi.amplitude = amplitude;
    let start = pi.finish();
    let mut s = PulseSequence::new();
    let d = s.add(pi).unwrap();
    let r = s.add(q.readout_pulse(start, 0).unwrap()).unwrap();
    (s, d, r)
}

fn options(acquisition: AcquisitionType, averaging: AveragingMode) -> ExecutionOptions {
    ExecutionOptions::new(300, acquisition, averaging).with_relaxation(100_000)
}

#[test]
fn averaged_equals_mean_of_singleshot() {
    let p = platform();
    let (s, d, _) = rabi_sequence(&p, 0.2);
    let sweep = [Sweeper::new(Parameter::Amplitude, linspace(0.0, 0.4, 5), vec![d])];
    let avg = p.sweep(&s, &sweep, &options(AcquisitionType::Integrated, AveragingMode::Cyclic)).unwrap();
    let single = p.sweep(&s, &sweep, &options(AcquisitionType::Integrated, AveragingMode::Singleshot)).unwrap();
    let a = avg.acquisition(0).unwrap().iq().unwrap();
    let m = single.acquisition(0).unwrap().mean_iq().unwrap();
    assert_eq!(a.len(), 5);
    for (x, y) in a.iter().zip(&m) {
        assert!((x - y).norm() < 1e-12, "{x} vs {y}");
    }

    let avg = p.sweep(&s, &sweep, &options(AcquisitionType::Classified, AveragingMode::Cyclic)).unwrap();
    let single = p.sweep(&s, &sweep, &options(AcquisitionType::Classified, AveragingMode::Singleshot)).unwrap();
    let a = avg.acquisition(0).unwrap().probabilities().unwrap();
    let b = single.acquisition(0).unwrap().probabilities().unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn sweep_point_equals_single_run_with_offset() {
    let p = platform();
    let (s, d, _) = rabi_sequence(&p, 0.2);
    let amps = linspace(0.0, 0.4, 6);
    let opts = options(AcquisitionType::Integrated, AveragingMode::Singleshot);
    let swept = p.sweep(&s, &[Sweeper::new(Parameter::Amplitude, amps.clone(), vec![d])], &opts).unwrap();
    let all = swept.acquisition(0).unwrap().iq().unwrap();
    let per_point: Vec<Complex64> = amps
        .iter()
        .enumerate()
        .flat_map(|(k, &a)| {
            let (seq, _, _) = rabi_sequence(&p, a);
            let o = ExecutionOptions { point_offset: k as u64, ..opts.clone() };
            p.execute(&seq, &o).unwrap().acquisition(0).unwrap().iq().unwrap()
        })
        .collect();
    assert_eq!(all, per_point);
}

#[test]
fn batch_equals_loop_with_offsets() {
    let p = platform();
    let seqs: Vec<PulseSequence> = [0.1, 0.25, 0.4].iter().map(|&a| rabi_sequence(&p, a).0).collect();
    let opts = options(AcquisitionType::Classified, AveragingMode::Singleshot);
    let batch = p.execute_batch(&seqs, &opts).unwrap();
    for (k, (seq, rs)) in seqs.iter().zip(&batch).enumerate() {
        let o = ExecutionOptions { point_offset: k as u64, ..opts.clone() };
        assert_eq!(&p.execute(seq, &o).unwrap(), rs);
    }
    assert!(p.execute_batch(&[], &opts).unwrap().is_empty());
}

#[test]
fn batch_and_loop_agree_statistically() {
    // without offsets the loop reuses the first random stream; the outcome
    // distribution must still agree within sampling error
    let p = platform();
    let seq = rabi_sequence(&p, 0.2).0;
    let opts = ExecutionOptions::new(2000, AcquisitionType::Classified, AveragingMode::Cyclic);
    let batch = p.execute_batch(&vec![seq.clone(); 20], &opts).unwrap();
    let looped = p.execute(&seq, &opts).unwrap().acquisition(0).unwrap().probabilities().unwrap()[0];
    let mean: f64 = batch.iter().map(|r| r.acquisition(0).unwrap().probabilities().unwrap()[0]).sum::<f64>() / 20.0;
    let sigma = (0.5 * 0.5 / 2000.0f64).sqrt();
    assert!((mean - looped).abs() < 5.0 * sigma, "{mean} vs {looped}");
}

#[test]
fn same_seed_same_bytes() {
    let mut a = platform();
    let mut b = platform();
    a.set_seed(11);
    b.set_seed(11);
    let (s, _, _) = rabi_sequence(&a, 0.3);
    let opts = options(AcquisitionType::Integrated, AveragingMode::Singleshot);
    assert_eq!(a.execute(&s, &opts).unwrap().to_csv().unwrap(), b.execute(&s, &opts).unwrap().to_csv().unwrap());
    b.set_seed(12);
    assert_ne!(a.execute(&s, &opts).unwrap().to_csv().unwrap(), b.execute(&s, &opts).unwrap().to_csv().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweep_shapes(n1 in 1usize..5, n2 in 0usize..4, nshots in 1u32..6, averaged in any::<bool>(), classified in any::<bool>()) {
        let p = platform();
        let (s, d, r) = rabi_sequence(&p, 0.2);
        let mut sweepers = vec![Sweeper::new(Parameter::Amplitude, linspace(0.0, 0.4, n1), vec![d])];
        if n2 > 0 {
            sweepers.push(Sweeper::new(Parameter::Frequency, linspace(-1e6, 1e6, n2), vec![r]).with_mode(SweepMode::Offset));
        }
        let acquisition = if classified { AcquisitionType::Classified } else { AcquisitionType::Integrated };
        let averaging = if averaged { AveragingMode::Cyclic } else { AveragingMode::Singleshot };
        let res = p.sweep(&s, &sweepers, &ExecutionOptions::new(nshots, acquisition, averaging)).unwrap();
        let acq = res.acquisition(0).unwrap();
        let mut expected: Vec<usize> = sweepers.iter().map(|s| s.len()).collect();
        if !averaged {
            expected.push(nshots as usize);
        }
        prop_assert_eq!(&acq.shape, &expected);
        prop_assert_eq!(acq.sweep_dims, sweepers.len());
        prop_assert_eq!(acq.points(), n1 * n2.max(1));
        prop_assert_eq!(acq.values.len(), expected.iter().product::<usize>());
    }
}
