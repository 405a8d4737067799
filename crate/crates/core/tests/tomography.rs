use catgate::states::{cat, CatParity};
use catgate::tomography::{
    default_phases, maxlik_reconstruct, sample_homodyne, trace_distance, QuadratureDataset,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn likelihood_never_decreases(seed in any::<u64>(), eta in 0.6..1.0f64, odd in any::<bool>()) {
        let parity = if odd { CatParity::Odd } else { CatParity::Even };
        let rho = cat(0.75, parity, 10).unwrap().to_density();
        let data = sample_homodyne(&rho, &default_phases(8), 500, eta, seed).unwrap();
        let rep = maxlik_reconstruct(&data, 10, eta, 150, 1e-9).unwrap();
        for w in rep.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10 * w[0].abs());
        }
        prop_assert!((rep.rho_hat.trace_re() - 1.0).abs() < 1e-10);
        prop_assert!(rep.rho_hat.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn dataset_text_round_trip(seed in any::<u64>(), eta in 0.0..1.0f64) {
        let rho = cat(0.5, CatParity::Even, 10).unwrap().to_density();
        let data = sample_homodyne(&rho, &default_phases(8), 20, eta, seed).unwrap();
        let back = QuadratureDataset::parse(&data.to_text()).unwrap();
        prop_assert_eq!(back.len(), data.len());
        prop_assert_eq!(back.seed, data.seed);
        for (a, b) in back.records.iter().zip(&data.records) {
            prop_assert!((a.0 - b.0).abs() <= 1e-10 * b.0.abs().max(1.0));
            prop_assert!((a.1 - b.1).abs() <= 1e-10 * b.1.abs().max(1.0));
        }
    }
}

#[test]
fn sampling_is_reproducible() {
    let rho = cat(0.75, CatParity::Odd, 10).unwrap().to_density();
    let a = sample_homodyne(&rho, &default_phases(12), 100, 0.77, 9).unwrap();
    let b = sample_homodyne(&rho, &default_phases(12), 100, 0.77, 9).unwrap();
    let c = sample_homodyne(&rho, &default_phases(12), 100, 0.77, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.records, c.records);
}

#[test]
fn error_shrinks_with_more_samples() {
    let rho = cat(0.75, CatParity::Odd, 10).unwrap().to_density();
    let distance = |n: usize| {
        let data = sample_homodyne(&rho, &default_phases(12), n / 12, 1.0, 99).unwrap();
        let rep = maxlik_reconstruct(&data, 10, 1.0, 2000, 1e-6).unwrap();
        trace_distance(&rep.rho_hat, &rho).unwrap()
    };
    let ladder = [distance(1_200), distance(12_000), distance(120_000)];
    assert!(ladder[0] > ladder[1] && ladder[1] > ladder[2], "{ladder:?}");
    assert!(ladder[2] < 0.05, "{ladder:?}");
}
