//! Randomised algebraic properties of the phase-space kernels.

use proptest::prelude::*;
use worldsheet_core::geometry::Geometry;
use worldsheet_core::invariants::CHERN_NORMALIZATION;
use worldsheet_core::phase_space as ps;
use worldsheet_core::scenarios;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kernels_are_antisymmetric(seed in any::<u64>()) {
        let base = scenarios::wobbled_string(16).unwrap();
        let g = Geometry::new(&base).unwrap();
        let a = scenarios::random_normal_field(&base, seed, 2).unwrap();
        let b = scenarios::random_normal_field(&base, seed ^ 0x9e37, 2).unwrap();
        let c = base.chart();
        for (x, y) in [
            (ps::symplectic_current(c, &g, &a, &b).unwrap(), ps::symplectic_current(c, &g, &b, &a).unwrap()),
            (ps::gb_kernel_density(c, &g, &a, &b).unwrap(), ps::gb_kernel_density(c, &g, &b, &a).unwrap()),
            (ps::chern_kernel(c, &g, &a, &b, CHERN_NORMALIZATION).unwrap(), ps::chern_kernel(c, &g, &b, &a, CHERN_NORMALIZATION).unwrap()),
        ] {
            prop_assert!(x.iter().zip(&y).all(|(p, q)| *p == -*q));
        }
        let self_pair = ps::symplectic_current(c, &g, &a, &a).unwrap();
        prop_assert!(self_pair.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kernels_are_linear(seed in any::<u64>(), s in -3.0f64..3.0) {
        let base = scenarios::wobbled_string(16).unwrap();
        let g = Geometry::new(&base).unwrap();
        let a = scenarios::random_normal_field(&base, seed, 2).unwrap();
        let b = scenarios::random_normal_field(&base, seed.wrapping_add(7), 2).unwrap();
        let c = base.chart();
        let j = ps::symplectic_current(c, &g, &a, &b).unwrap();
        let js = ps::symplectic_current(c, &g, &a.scaled(s), &b).unwrap();
        let err = j.iter().zip(&js).map(|(p, q)| (s * p - q).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * max_abs(&j).max(1.0) * s.abs().max(1.0));
        let k = ps::gb_kernel_density(c, &g, &a, &b).unwrap();
        let ks = ps::gb_kernel_density(c, &g, &a, &b.scaled(s)).unwrap();
        let err = k.iter().zip(&ks).map(|(p, q)| (s * p - q).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * max_abs(&k).max(1.0) * s.abs().max(1.0));
    }
}
