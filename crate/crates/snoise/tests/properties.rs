use num_complex::Complex64;
use proptest::prelude::*;
use snoise::oracle::{compare_cf, empirical_cf, ks_one_sample, ks_two_sample, ks_two_sample_weighted};
use snoise::output::fmt_f64;

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 100..300)
}

proptest! {
    #[test]
    fn empirical_cf_lies_in_the_unit_disc(v in sample(), theta in -10.0f64..10.0) {
        let e = empirical_cf(&v, theta).unwrap();
        prop_assert!(e.value.norm() <= 1.0 + 1e-12);
        prop_assert!(e.se_re >= 0.0 && e.se_im >= 0.0);
    }

    #[test]
    fn empirical_cf_is_hermitian(v in sample(), theta in -10.0f64..10.0) {
        let a = empirical_cf(&v, theta).unwrap().value;
        let b = empirical_cf(&v, -theta).unwrap().value;
        prop_assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn shifting_the_batch_rotates_the_cf(v in sample(), theta in -5.0f64..5.0, c in -3.0f64..3.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = empirical_cf(&v, theta).unwrap().value * Complex64::new(0.0, theta * c).exp();
        let b = empirical_cf(&shifted, theta).unwrap().value;
        prop_assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn comparing_an_estimate_with_itself_gives_zero(v in sample(), theta in -5.0f64..5.0) {
        let e = empirical_cf(&v, theta).unwrap();
        prop_assert_eq!(compare_cf(e.value, e).ratio, 0.0);
    }

    #[test]
    fn ks_is_a_symmetric_distance(a in sample(), b in sample()) {
        let x = ks_two_sample(&a, &b).unwrap();
        let y = ks_two_sample(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&x.statistic));
        prop_assert_eq!(x.statistic, y.statistic);
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn weighted_ks_ignores_weight_scale(a in sample(), b in sample(), s in 0.01f64..100.0) {
        let w: Vec<f64> = (0..a.len()).map(|i| 1.0 + (i % 3) as f64).collect();
        let ws: Vec<f64> = w.iter().map(|x| x * s).collect();
        let ones = vec![1.0; b.len()];
        let x = ks_two_sample_weighted(&a, &w, &b, &ones).unwrap();
        let y = ks_two_sample_weighted(&a, &ws, &b, &ones).unwrap();
        prop_assert!((x.statistic - y.statistic).abs() < 1e-12);
        prop_assert!((x.n_eff - y.n_eff).abs() < 1e-9 * x.n_eff);
    }

    #[test]
    fn ks_one_sample_is_invariant_under_monotone_maps(v in prop::collection::vec(0.0f64..1.0, 10..200)) {
        let x = ks_one_sample(&v, |u| u.clamp(0.0, 1.0)).unwrap();
        let mapped: Vec<f64> = v.iter().map(|u| u.powi(3)).collect();
        let y = ks_one_sample(&mapped, |u| u.clamp(0.0, 1.0).cbrt()).unwrap();
        prop_assert!((x.statistic - y.statistic).abs() < 1e-12);
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let back: f64 = fmt_f64(x).parse().unwrap();
        prop_assert!(back == x || (x == 0.0 && back == 0.0));
    }
}
