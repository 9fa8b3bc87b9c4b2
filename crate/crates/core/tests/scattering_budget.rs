use cavity_readout::scattering::{
    depump_prob_per_scatter, fit_survival, knowledge_exponent_per_scatter, scatter_per_photon, survival_model,
    DepumpParams, FitOptions, SurvivalPoint,
};
use proptest::prelude::*;

#[test]
fn advantage_over_fluorescence() {
    let m_per_n = scatter_per_photon(1.0 / 142.0, 2.6).unwrap();
    let per_scatter = knowledge_exponent_per_scatter(4.6e-2, m_per_n).unwrap();
    assert!((per_scatter / 2.0 - 2.7).abs() < 0.05);
}

#[test]
fn noisy_weighted_fit_stays_within_errors() {
    use rand::{Rng, SeedableRng};
    let truth = DepumpParams::reference();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let data: Vec<SurvivalPoint> = (0..15)
        .map(|i| {
            let n = 30.0 * i as f64;
            let noise: f64 = rng.random_range(-1.0..1.0) * 0.01;
            SurvivalPoint {
                n,
                survival: survival_model(n, &truth) + noise,
                sigma: 0.01,
            }
        })
        .collect();
    let fit = fit_survival(&data, FitOptions::default()).unwrap();
    assert!((fit.nu - truth.nu).abs() < 3.0 * fit.sigma_nu, "{fit:?}");
    assert!((fit.s_inf - truth.s_inf).abs() < 3.0 * fit.sigma_s_inf, "{fit:?}");
}

proptest! {
    #[test]
    fn correction_never_lowers_the_rate(nu in 0.0f64..0.1, rho in 0.0f64..100.0) {
        let m = scatter_per_photon(nu, rho).unwrap();
        prop_assert!(m >= nu);
        let p = depump_prob_per_scatter(rho).unwrap();
        prop_assert!((0.4..=1.0).contains(&p));
    }

    #[test]
    fn survival_is_bounded_and_monotone(nu in 0.0f64..0.05, s_inf in 0.0f64..0.99, n in 0.0f64..2000.0) {
        let p = DepumpParams { nu, gamma_ratio: 2.6, s_inf };
        let a = survival_model(n, &p);
        let b = survival_model(n + 10.0, &p);
        prop_assert!(b <= a + 1e-15);
        prop_assert!(a <= 1.0 && a >= s_inf - 1e-15);
    }
}
