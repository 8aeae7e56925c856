use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use winding_core::dd::Dd;
use winding_core::model::{single_offset_distribution, transition_density, weight};
use winding_core::orthopoly::{hankel_direct, hankel_from_norms};
use winding_core::winding::{total_variation, winding_distribution, winding_n1_closed_form};
use winding_core::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_modulus_is_gaussian(n in 1usize..12, t in 0.1f64..9.0, mu in -3.0f64..3.0, x in -5.0f64..5.0) {
        let p = ModelParams::new(n, t, mu, 0.0).unwrap();
        let w = weight(x, &p);
        prop_assert!(w.norm() <= 1.0);
        let expo = n as f64 * t * x * x / 2.0;
        // Past about 708 the modulus underflows to zero.
        if expo < 700.0 {
            prop_assert!((w.norm().ln() + expo).abs() < 1e-9 * (1.0 + expo));
        } else {
            prop_assert!(w.norm() < 1e-300);
        }
    }

    #[test]
    fn heat_kernel_reflection(
        n in 1usize..6, mu in -2.0f64..2.0, phi in -PI..PI, theta in -PI..PI, t in 0.2f64..3.0,
    ) {
        let p = ModelParams::new(n, 3.0, mu, 0.0).unwrap();
        let q = ModelParams::new(n, 3.0, -mu, 0.0).unwrap();
        let a = transition_density(phi, theta, t, &p).unwrap();
        let b = transition_density(-phi, -theta, t, &q).unwrap();
        prop_assert!(a.im.abs() < 1e-12 * (1.0 + a.re));
        prop_assert!(a.re > 0.0);
        prop_assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
    }

    #[test]
    fn offset_probabilities_sum_to_one(mu in -2.0f64..2.0, phi in -PI..PI, theta in -PI..PI, t in 0.3f64..4.0) {
        let p = ModelParams::new(1, 4.0, mu, 0.0).unwrap();
        let d = single_offset_distribution(phi, theta, t, &p).unwrap();
        let total: f64 = d.probs.values().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(d.probs.values().all(|&v| v >= 0.0));
    }

    #[test]
    fn hankel_routes_agree(n in 1usize..8, mu in -1.5f64..1.5, tau in 0.0f64..1.0, size in 1usize..6) {
        let p = ModelParams::new(n, 1.0, mu, tau).unwrap();
        let sys = build_op_system(&p, size).unwrap();
        let d = hankel_direct(&p, size).unwrap().value;
        let h = hankel_from_norms(&sys, size).unwrap();
        prop_assert!((d - h).norm() <= 1e-7 * d.norm(), "{} vs {}", d, h);
    }

    #[test]
    fn dd_field_laws(a in -1e6f64..1e6, b in 1e-3f64..1e6) {
        let (x, y) = (Dd::new(a), Dd::new(b));
        let back = (x / y) * y;
        prop_assert!((back - x).abs().to_f64() <= 1e-28 * a.abs().max(1.0));
        let sq = y.sqrt();
        prop_assert!((sq * sq - y).abs().to_f64() <= 1e-28 * b);
        prop_assert_eq!((x + y - y).to_f64(), a);
    }

    #[test]
    fn dd_sin_cos_pythagoras(x in -20.0f64..20.0) {
        let (s, c) = Dd::new(x).sin_cos();
        prop_assert!((s * s + c * c - Dd::new(1.0)).abs().to_f64() < 1e-29);
        prop_assert!((s.to_f64() - x.sin()).abs() < 1e-15);
    }

    #[test]
    fn executors_agree(len in 0usize..2000, k in 1u32..50) {
        let f = |i: usize| ((i as f64) * k as f64).sqrt().cos();
        prop_assert_eq!(Exec::Sequential.map(len, f), Exec::Parallel.map(len, f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn winding_mass_is_one(n in 1usize..6, t in 0.5f64..6.0, mu in -2.0f64..2.0) {
        let d = winding_distribution(n, t, mu).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-8);
        prop_assert!(d.imag_residue < 1e-8);
    }

    #[test]
    fn single_walker_oracle(t in 0.5f64..9.0, mu in -3.0f64..3.0) {
        let d = winding_distribution(1, t, mu).unwrap();
        prop_assert!(total_variation(&d, &winding_n1_closed_form(t, mu)) < 1e-10);
    }

    #[test]
    fn ratio_at_sigma_is_one(n in 1usize..10, mu in -2.0f64..2.0) {
        let r = winding::hankel_ratio(n, 1.0, mu, winding::sigma_shift(n)).unwrap();
        prop_assert_eq!(r, Complex64::new(1.0, 0.0));
    }
}
