//! Property tests for the solver invariants and the closed-form references.

use ness_core::analysis::{
    find_gamma_opt, fit_power_law, FitModel, GammaOptOptions, SolverChoice, SolverOptions,
};
use ness_core::exact::{chain_evolve, chain_ness, default_step, measure, EvolveOptions};
use ness_core::mpo::{measure_mpo, run_to_ness_mpo, MpoSchedule};
use ness_core::predictions::{
    delta0_current_model, sector_probs_closed_form, sector_probs_detailed_balance,
};
use ness_core::toy::{toy_ness, toy_ness_current};
use ness_core::{ChainParameters, DensityMatrix, ToyParameters, TruncationPolicy};
use proptest::prelude::*;

fn chain_params() -> impl Strategy<Value = ChainParameters> {
    (3usize..=5, -3.0..3.0f64, -1.0..1.0f64, 0.0..1.0f64, 0.2..2.0f64)
        .prop_map(|(n, d, f, g, c)| ChainParameters::new(n, d, f, g).with_coupling(c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ness_is_physical_and_homogeneous(p in chain_params()) {
        let (rho, rep) = chain_ness(&p).unwrap();
        prop_assert!(rep.converged);
        rho.validate().unwrap();
        let rec = measure(&rho, &p).unwrap();
        prop_assert!(rec.current_spread() <= 1e-9 * (1.0 + rec.current.abs()) + 1e-12);
    }

    #[test]
    fn current_is_odd_in_bias(p in chain_params()) {
        let q = p.with_bias(-p.bias);
        let (ra, _) = chain_ness(&p).unwrap();
        let (rb, _) = chain_ness(&q).unwrap();
        let a = measure(&ra, &p).unwrap().current;
        let b = measure(&rb, &q).unwrap().current;
        prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1e-12));
    }

    #[test]
    fn noninteracting_current_matches_two_point_equations(
        n in 2usize..=5,
        f in -1.0..1.0f64,
        g in 0.0..2.0f64,
        c in 0.2..3.0f64,
        tau in 0.3..2.0f64,
    ) {
        let p = ChainParameters::new(n, 0.0, f, g).with_coupling(c).with_hopping(tau);
        let (rho, _) = chain_ness(&p).unwrap();
        let j = measure(&rho, &p).unwrap().current;
        let expect = delta0_current_model(n, f, c, g, tau);
        prop_assert!((j - expect).abs() <= 1e-8 * expect.abs().max(1e-10), "{j} vs {expect}");
    }

    #[test]
    fn unbiased_toy_relaxes_to_identity(k in 2usize..=8, d in -5.0..5.0f64, g in 0.0..0.5f64, c in 0.1..2.0f64) {
        let p = ToyParameters::new(k, d, c, 0.0, g);
        let rho = toy_ness(&p).unwrap();
        let id = DensityMatrix::maximally_mixed(k + 1);
        prop_assert!(rho.trace_distance(&id).unwrap() < 1e-9);
        prop_assert!(toy_ness_current(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sector_probabilities_normalized_and_symmetric(n in 2usize..=16, d in 1.0..30.0f64) {
        let a = sector_probs_closed_form(n, d).unwrap();
        let b = sector_probs_detailed_balance(n, d).unwrap();
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..=n {
            prop_assert!((a[k] - b[k]).abs() <= 1e-10 * a[k].max(1e-300));
            prop_assert!((b[k] - b[n - k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn pure_power_fit_recovers_parameters(kappa in 0.1..10.0f64, alpha in 0.1..3.0f64) {
        let xs: Vec<f64> = (1..=6).map(|k| 2.0 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| kappa * x.powf(-alpha)).collect();
        let fit = fit_power_law(&xs, &ys, FitModel::PurePower).unwrap();
        prop_assert!((fit.exponent - alpha).abs() < 1e-9);
        prop_assert!((fit.prefactor - kappa).abs() < 1e-9 * kappa);
        prop_assert!(fit.residual >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn evolved_states_stay_physical(seed in 0u64..1000, d in -2.0..2.0f64, f in -1.0..1.0f64, g in 0.0..0.5f64) {
        let p = ChainParameters::new(3, d, f, g);
        let mut opts = EvolveOptions::new(default_step(&p) * 5.0, 1e-9, 2000.0);
        opts.validate_states = true;
        let (rho, rep) = chain_evolve(&p, &DensityMatrix::random(8, seed), &opts).unwrap();
        prop_assert!(rep.converged);
        rho.validate().unwrap();
        let (ness, _) = chain_ness(&p).unwrap();
        prop_assert!(rho.trace_distance(&ness).unwrap() < 1e-6);
    }

    #[test]
    fn dephasing_never_helps_without_interaction(f in 0.05..1.0f64) {
        let exact = SolverOptions { solver: SolverChoice::Exact, ..Default::default() };
        let r = find_gamma_opt(&ChainParameters::new(3, 0.0, f, 0.0), &exact, &GammaOptOptions::default()).unwrap();
        prop_assert_eq!(r.gamma_opt, 0.0);
    }
}

#[test]
fn strong_dephasing_suppresses_current_like_free_chain() {
    // For γ ≫ Δ, τ the interaction drops out of the hopping rates.
    let mut last = f64::INFINITY;
    for g in [10.0, 20.0, 50.0] {
        let p = ChainParameters::new(4, 2.0, 1.0, g);
        let (rho, _) = chain_ness(&p).unwrap();
        let j = measure(&rho, &p).unwrap().current;
        assert!(j.abs() < last);
        last = j.abs();
        if g == 50.0 {
            let free = delta0_current_model(4, 1.0, 1.0, g, 1.0);
            assert!((j - free).abs() < 0.05 * free.abs(), "{j} vs {free}");
        }
    }
}

#[test]
fn mpo_ness_is_physical_and_matches_exact() {
    let p = ChainParameters::new(4, 1.5, 0.8, 0.2);
    let (state, rep) = run_to_ness_mpo(&p, &TruncationPolicy::default(), &MpoSchedule::default()).unwrap();
    assert!(rep.converged, "{rep:?}");
    let dense = state.to_dense().unwrap();
    dense.validate().unwrap();
    let (exact, _) = chain_ness(&p).unwrap();
    assert!(dense.trace_distance(&exact).unwrap() < 1e-5);
    let rec = measure_mpo(&state, &p).unwrap();
    assert!(rec.current_spread() < 1e-6);
}
