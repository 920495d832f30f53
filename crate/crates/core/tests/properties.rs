use cokdv_core::operators::{antihermitian_defect, b1, b2, b3, b30_vec, r3, split_r3q, ArgumentFilter, Band};
use cokdv_core::verify::{relative_error, relative_error_pair};
use cokdv_core::{random_field, random_pair, Gauge, SobolevIndex, SpectralField};
use proptest::prelude::*;

fn field(seed: u64, n: usize) -> SpectralField {
    random_field(seed, n, SobolevIndex(0.0), 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn b1_is_bilinear(seed in any::<u64>(), n in 2usize..14, lam in -3.0f64..3.0, t in 0.0f64..5.0) {
        let (a, b, c) = (field(seed, n), field(seed ^ 1, n), field(seed ^ 2, n));
        let lhs = b1(&a.axpy(lam, &c), &b, t).unwrap();
        let rhs = b1(&a, &b, t).unwrap().axpy(lam, &b1(&c, &b, t).unwrap());
        prop_assert!(relative_error(&lhs, &rhs, 1e-12) < 1e-12);
    }

    #[test]
    fn bilinear_outputs_are_hermitian(seed in any::<u64>(), n in 2usize..14, t in 0.0f64..5.0) {
        let (a, b) = (field(seed, n), field(seed ^ 3, n));
        prop_assert!(b1(&a, &b, t).unwrap().hermitian_defect() < 1e-13);
        prop_assert!(b2(&a, &b, t).unwrap().hermitian_defect() < 1e-13);
    }

    #[test]
    fn trilinear_parities(seed in any::<u64>(), n in 2usize..10, t in 0.0f64..5.0) {
        let f: Vec<_> = (0..3).map(|i| field(seed ^ (i + 5), n)).collect();
        let all = ArgumentFilter::all();
        prop_assert!(antihermitian_defect(&r3(&f[0], &f[1], &f[2], t, &all).unwrap()) < 1e-13);
        prop_assert!(b3(&f[0], &f[1], &f[2], t, &all).unwrap().hermitian_defect() < 1e-13);
    }

    #[test]
    fn projections_partition(seed in any::<u64>(), n in 1usize..20, cut in 1usize..20) {
        let f = field(seed, n);
        let (p, q) = (f.project_low(cut), f.project_high(cut));
        prop_assert_eq!(&(&p + &q), &f);
        prop_assert_eq!(p.project_low(cut), p.clone());
        prop_assert!(p.project_high(cut).is_zero() && q.project_low(cut).is_zero());
    }

    #[test]
    fn sobolev_norms_increase_with_index(seed in any::<u64>(), n in 1usize..20, s in -2.0f64..2.0, ds in 0.0f64..2.0) {
        let f = field(seed, n);
        prop_assert!(f.sobolev_norm(SobolevIndex(s)) <= f.sobolev_norm(SobolevIndex(s + ds)) * (1.0 + 1e-14));
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), n in 1usize..20) {
        let f = field(seed, n);
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = SpectralField::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn gauge_round_trip(seed in any::<u64>(), n in 1usize..16, t in -10.0f64..10.0) {
        let p = random_pair(seed, n, SobolevIndex(0.0), 1.0);
        let back = p.gauge(t, Gauge::Physical).gauge(t, Gauge::Interaction);
        prop_assert!(relative_error_pair(&back, &p, 0.0) < 1e-14);
        prop_assert!((p.gauge(t, Gauge::Physical).energy_functional() - p.energy_functional()).abs() < 1e-12 * p.energy_functional());
    }

    #[test]
    fn high_split_vanishes_without_high_modes(seed in any::<u64>(), n in 2usize..10, t in 0.0f64..3.0) {
        let p = random_pair(seed, n, SobolevIndex(0.0), 1.0);
        let parts = split_r3q(&p, t, n);
        prop_assert!(parts.nres0.max_amplitude() == 0.0 && parts.nres1.max_amplitude() == 0.0);
        prop_assert!(b30_vec(&p, t, n).max_amplitude() == 0.0);
    }

    #[test]
    fn filtered_bands_commute_with_masking(seed in any::<u64>(), n in 2usize..10, cut in 1usize..10, t in 0.0f64..3.0) {
        let cut = cut.min(n);
        let f: Vec<_> = (0..3).map(|i| field(seed ^ (i + 9), n)).collect();
        let filt = ArgumentFilter::new(cut).unwrap().with_args(&[Band::Low, Band::High, Band::All]);
        let direct = r3(&f[0], &f[1], &f[2], t, &filt).unwrap();
        let masked = r3(&f[0].project_low(cut), &f[1].project_high(cut), &f[2], t, &ArgumentFilter::all()).unwrap();
        prop_assert!(relative_error(&direct, &masked, 1e-12) < 1e-12);
    }
}
