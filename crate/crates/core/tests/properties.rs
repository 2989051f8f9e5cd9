use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;
use rmtlab::concentration::levy_exact_rademacher;
use rmtlab::ensembles::SeedPath;
use rmtlab::nets::volumetric_cap;
use rmtlab::stats::wilson_interval;
use rmtlab::structure::{distance_to_sparse, exact_lcd};
use rmtlab::geometry::min_l1_on_sphere;
use rmtlab::RealMatrix;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levy_monotone_in_eps(a in weights(), e1 in 0.01f64..2.0, e2 in 0.01f64..2.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let p_lo = levy_exact_rademacher(&a, lo).unwrap().value;
        let p_hi = levy_exact_rademacher(&a, hi).unwrap().value;
        prop_assert!(p_lo <= p_hi + 1e-15);
        prop_assert!((0.0..=1.0).contains(&p_lo));
    }

    #[test]
    fn levy_ignores_signs_and_order(a in weights(), flips in any::<u16>(), eps in 0.05f64..1.5, rot in 0usize..10) {
        let mut b: Vec<f64> = a.iter().enumerate()
            .map(|(i, v)| if flips >> (i % 16) & 1 == 1 { -v } else { *v })
            .collect();
        let k = rot % b.len();
        b.rotate_left(k);
        let pa = levy_exact_rademacher(&a, eps).unwrap().value;
        let pb = levy_exact_rademacher(&b, eps).unwrap().value;
        prop_assert!((pa - pb).abs() < 1e-12, "{pa} vs {pb}");
    }

    #[test]
    fn wilson_contains_point_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0, conf in 0.5f64..0.999) {
        let hits = ((trials as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(hits, trials, conf).unwrap();
        let p = hits as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn sparse_distance_decreases_with_support(x in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let d: Vec<f64> = (0..=x.len()).map(|k| distance_to_sparse(&x, k)).collect();
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(d[x.len()].abs() < 1e-12);
    }

    #[test]
    fn min_l1_scales_linearly(entries in prop::collection::vec(-1.0f64..1.0, 8), s in 0.1f64..10.0) {
        let a = RealMatrix::from_row_slice(4, 2, &entries);
        prop_assume!(a.clone().svd(false, false).singular_values.min() > 1e-3);
        let base = min_l1_on_sphere(&a).unwrap().min_l1;
        let scaled = min_l1_on_sphere(&(a * s)).unwrap().min_l1;
        prop_assert!((scaled - s * base).abs() <= 1e-9 * (1.0 + s * base));
    }

    #[test]
    fn volumetric_cap_monotone(n in 1usize..6, e in 0.05f64..1.0, f in 0.05f64..1.0) {
        let (small, big) = if e <= f { (e, f) } else { (f, e) };
        prop_assert!(volumetric_cap(n, small).unwrap() >= volumetric_cap(n, big).unwrap());
        prop_assert!(volumetric_cap(n + 1, small).unwrap() >= volumetric_cap(n, small).unwrap());
    }

    #[test]
    fn exact_lcd_inverse_scaling(nums in prop::collection::vec(-20i64..20, 1..6), k in 1i64..9) {
        prop_assume!(nums.iter().any(|&v| v != 0));
        let a: Vec<BigRational> = nums.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect();
        let ka: Vec<BigRational> = a.iter().map(|v| v * BigRational::from_integer(BigInt::from(k))).collect();
        let base = exact_lcd(&a).unwrap();
        let scaled = exact_lcd(&ka).unwrap();
        prop_assert_eq!(scaled * BigRational::from_integer(BigInt::from(k)), base);
    }

    #[test]
    fn seed_paths_are_deterministic(seed in any::<u64>(), label in "[a-z]{1,8}", trial in any::<u64>()) {
        let a: u64 = SeedPath::new(seed, label.clone(), trial).rng().random();
        let b: u64 = SeedPath::new(seed, label.clone(), trial).rng().random();
        let c: u64 = SeedPath::new(seed, label, trial.wrapping_add(1)).rng().random();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, c);
    }
}
