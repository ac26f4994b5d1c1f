use phaselim_core::densities::{r, NoiseModel};
use phaselim_core::limits::{g, i1_discrete, i1_gaussian, i2_discrete, i2_gaussian};
use phaselim_core::model::{partition_powers, PartitionMode, SortedSignal};
use phaselim_core::numeric::floor_alpha_k;
use phaselim_core::simulator::isotonic_nonincreasing;
use phaselim_core::verify::{Verdict, VerificationReport};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gaussian_mutual_information_is_ordered(alpha in 0.0f64..=1.0, c in 1e-3f64..1e4, sigma in 1e-2f64..10.0) {
        let lo = i1_gaussian(alpha, c, sigma).unwrap();
        let hi = i2_gaussian(alpha, c, sigma).unwrap();
        prop_assert!(lo >= 0.0);
        prop_assert!(lo <= hi);
    }

    #[test]
    fn discrete_mutual_information_is_ordered(
        sq in prop::collection::vec(0.0f64..5.0, 1..40),
        alpha in 0.0f64..=1.0,
        var in 1e-2f64..10.0,
        exact in any::<bool>(),
    ) {
        let s = SortedSignal::from_sq_magnitudes(sq);
        let noise = NoiseModel::gaussian(var).unwrap();
        let mode = if exact { PartitionMode::FloorExact } else { PartitionMode::Asymptotic };
        let a = i1_discrete(alpha, &s, &noise, mode).unwrap();
        let b = i2_discrete(alpha, &s, &noise, mode).unwrap();
        prop_assert!(a <= b, "I1={a} I2={b}");
    }

    #[test]
    fn mutual_information_grows_with_signal(alpha in 0.0f64..=1.0, c in 1e-3f64..1e3, factor in 1.0f64..10.0, sigma in 0.1f64..5.0) {
        prop_assert!(i1_gaussian(alpha, c, sigma).unwrap() <= i1_gaussian(alpha, c * factor, sigma).unwrap());
        prop_assert!(i2_gaussian(alpha, c, sigma).unwrap() <= i2_gaussian(alpha, c * factor, sigma).unwrap() + 1e-15);
        let noise = NoiseModel::gaussian(sigma * sigma).unwrap();
        let k = 20;
        let small = SortedSignal::from_sq_magnitudes(vec![c / k as f64; k]);
        let large = SortedSignal::from_sq_magnitudes(vec![c * factor / k as f64; k]);
        for mode in [PartitionMode::FloorExact, PartitionMode::Asymptotic] {
            prop_assert!(i1_discrete(alpha, &small, &noise, mode).unwrap() <= i1_discrete(alpha, &large, &noise, mode).unwrap());
            prop_assert!(i2_discrete(alpha, &small, &noise, mode).unwrap() <= i2_discrete(alpha, &large, &noise, mode).unwrap() + 1e-15);
        }
    }

    #[test]
    fn g_is_bounded_by_alpha(alpha in 0.0f64..=1.0) {
        let v = g(alpha).unwrap();
        prop_assert!(v >= 0.0 && v <= alpha + 1e-15);
    }

    #[test]
    fn r_is_nonnegative_and_quadratic_near_zero(u in -0.999f64..50.0) {
        prop_assert!(r(u) >= 0.0);
        if u.abs() <= 0.1 {
            prop_assert!((r(u) - u * u / 2.0).abs() <= u.abs().powi(3));
        }
    }

    #[test]
    fn r_is_convex(u in -0.99f64..20.0, h in 1e-3f64..0.005) {
        prop_assert!(r(u + h) + r(u - h) - 2.0 * r(u) >= -1e-12);
    }

    #[test]
    fn partition_powers_split_total(sq in prop::collection::vec(0.0f64..5.0, 1..40), alpha in 0.0f64..=1.0) {
        let s = SortedSignal::from_sq_magnitudes(sq);
        for mode in [PartitionMode::FloorExact, PartitionMode::Asymptotic] {
            let p = partition_powers(&s, alpha, mode).unwrap();
            prop_assert!(p.v_dif >= 0.0 && p.v_eq >= 0.0);
            prop_assert!((p.v_dif + p.v_eq - s.total()).abs() <= 4.0 * f64::EPSILON * s.total());
        }
        let p = partition_powers(&s, alpha, PartitionMode::FloorExact).unwrap();
        prop_assert_eq!(p.ell, floor_alpha_k(alpha, s.k()));
    }

    #[test]
    fn verdicts_are_self_certifying(
        est in -10.0f64..10.0,
        se in 0.0f64..0.05,
        lo in -10.0f64..10.0,
        width in 0.0f64..5.0,
        clamped in 0u64..5,
    ) {
        let r = VerificationReport::new("p", serde_json::json!({}), est, se, lo, lo + width, 1000, 0.02)
            .with_clamped(clamped);
        let back: VerificationReport = serde_json::from_str(&r.to_json_line()).unwrap();
        prop_assert_eq!(back.recompute_verdict(), r.verdict);
        let inside = est >= lo - 3.0 * se && est <= lo + width + 3.0 * se;
        let expected = if se > 0.02 || clamped > 1 {
            Verdict::Inconclusive
        } else if inside {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        prop_assert_eq!(r.verdict, expected);
    }

    #[test]
    fn isotonic_fit_is_nonincreasing(values in prop::collection::vec(0.0f64..1.0, 1..30)) {
        let w = vec![1.0; values.len()];
        let fit = isotonic_nonincreasing(&values, &w);
        prop_assert_eq!(fit.len(), values.len());
        for pair in fit.windows(2) {
            prop_assert!(pair[0] >= pair[1] - 1e-15);
        }
        let a: f64 = values.iter().sum();
        let b: f64 = fit.iter().sum();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn g_is_nondecreasing_and_convex() {
    let vals: Vec<f64> = (0..=1000).map(|j| g(j as f64 / 1000.0).unwrap()).collect();
    for w in vals.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for w in vals.windows(3) {
        assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-14);
    }
}
