use phaselim_core::densities::NoiseModel;
use phaselim_core::model::{ProblemInstance, SignalModel};
use phaselim_core::simulator::*;

fn flat_config(n_grid: Vec<usize>, trials: usize, var: f64) -> SimConfig {
    SimConfig {
        p: 10,
        k: 2,
        n_grid,
        alpha_star: 0.5,
        signal: SignalModel::flat(1.0, 2).unwrap(),
        noise: NoiseModel::gaussian(var).unwrap(),
        trials,
        decoder: Decoder::FlatMl,
        master_seed: 2024,
    }
}

#[test]
fn full_support_is_returned_when_k_equals_p() {
    let signal = SignalModel::flat(1.0, 3).unwrap();
    let noise = NoiseModel::gaussian(1.0).unwrap();
    let inst = ProblemInstance::generate(3, 5, &signal, &noise, 8).unwrap();
    let s = decode(&inst, &signal, &noise, &Decoder::FlatMl).unwrap();
    assert_eq!(s.indices(), &[0, 1, 2]);
}

#[test]
fn no_measurements_pick_the_first_support() {
    let signal = SignalModel::flat(1.0, 2).unwrap();
    let noise = NoiseModel::gaussian(1.0).unwrap();
    let inst = ProblemInstance::generate(10, 0, &signal, &noise, 8).unwrap();
    assert_eq!(
        decode(&inst, &signal, &noise, &Decoder::FlatMl).unwrap().indices(),
        &[0, 1]
    );
    let g = SignalModel::gaussian(1.0, 2).unwrap();
    let inst = ProblemInstance::generate(10, 0, &g, &noise, 8).unwrap();
    let s = decode(&inst, &g, &noise, &Decoder::McMarginal { samples: 8 }).unwrap();
    assert_eq!(s.indices(), &[0, 1]);
}

#[test]
fn zero_measurement_error_rate_matches_combinatorics() {
    // Ŝ = {0, 1}; an error needs at least one true index outside it.
    let curve = error_curve(&flat_config(vec![0], 4000, 1.0)).unwrap();
    let p_correct: f64 = 1.0 / 45.0;
    let want = 1.0 - p_correct;
    let se = (want * (1.0 - want) / 4000.0).sqrt();
    assert!((curve.points[0].pe - want).abs() <= 3.0 * se, "{:?}", curve.points[0]);
}

#[test]
fn near_noiseless_flat_recovery_is_exact() {
    let signal = SignalModel::flat(1.0, 2).unwrap();
    let noise = NoiseModel::gaussian(1e-6).unwrap();
    let mut hits = 0;
    for t in 0..1000 {
        let inst = ProblemInstance::generate(10, 20, &signal, &noise, 10_000 + t).unwrap();
        if decode(&inst, &signal, &noise, &Decoder::FlatMl).unwrap() == inst.support {
            hits += 1;
        }
    }
    assert!(hits >= 990, "hits={hits}");
}

#[test]
fn flat_ml_ignores_the_assumed_noise_scale() {
    // With Gaussian noise the score changes by an increasing affine map.
    let signal = SignalModel::flat(1.0, 2).unwrap();
    let truth = NoiseModel::gaussian(0.5).unwrap();
    for seed in 0..50 {
        let inst = ProblemInstance::generate(8, 6, &signal, &truth, seed).unwrap();
        let a = decode(&inst, &signal, &truth, &Decoder::FlatMl).unwrap();
        let b = decode(&inst, &signal, &NoiseModel::gaussian(7.0).unwrap(), &Decoder::FlatMl).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn curves_are_reproducible_and_monotone() {
    let cfg = flat_config(vec![0, 2, 4, 8, 16, 40], 200, 1e-2);
    let a = error_curve(&cfg).unwrap();
    let b = error_curve(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    for p in &a.points {
        assert!((0.0..=1.0).contains(&p.pe));
    }
    assert!(monotonicity_check(&a).passed, "{:?}", a);
}

#[test]
fn gaussian_marginal_decoder_improves_with_measurements() {
    let cfg = SimConfig {
        p: 6,
        k: 2,
        n_grid: vec![0, 30],
        alpha_star: 0.5,
        signal: SignalModel::gaussian(4.0, 2).unwrap(),
        noise: NoiseModel::gaussian(0.01).unwrap(),
        trials: 60,
        decoder: Decoder::McMarginal { samples: 64 },
        master_seed: 5,
    };
    let c = error_curve(&cfg).unwrap();
    assert!(c.points[1].pe < c.points[0].pe, "{c:?}");
}

#[test]
fn guards_reject_infeasible_configs() {
    let mut cfg = flat_config(vec![1], 1, 1.0);
    cfg.p = 40;
    cfg.signal = SignalModel::flat(1.0, 4).unwrap();
    cfg.k = 4;
    assert!(error_curve(&cfg).is_err()); // C(40, 4) = 91390
    let mut cfg = flat_config(vec![1], 1, 1.0);
    cfg.alpha_star = 0.3; // ⌊0.6⌋ = 0
    assert!(error_curve(&cfg).is_err());
}
