//! Randomized invariants of the scalar channel, the RS formulas, state
//! evolution and the oracle.

mod common;

use common::*;
use proptest::prelude::*;
use spikelab_core::rs_wigner::SpikedWigner;
use spikelab_core::rs_wishart::SpikedWishart;
use spikelab_core::{Prior, ScalarChannel};
use std::sync::OnceLock;

/// Channels are built once so their lazy tables are shared across cases.
fn channels() -> &'static [ScalarChannel] {
    static CH: OnceLock<Vec<ScalarChannel>> = OnceLock::new();
    CH.get_or_init(|| prior_pool().into_iter().map(ScalarChannel::new).collect())
}

fn wigner_models() -> &'static [SpikedWigner] {
    static M: OnceLock<Vec<SpikedWigner>> = OnceLock::new();
    M.get_or_init(|| channels().iter().cloned().map(SpikedWigner::from_channel).collect())
}

fn unit_indices() -> Vec<usize> {
    (0..channels().len()).filter(|&i| (channels()[i].moments().m2 - 1.0).abs() < 1e-12).collect()
}

fn check(r: Check) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

fn any_channel() -> impl Strategy<Value = usize> {
    0..channels().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psi_is_convex(i in any_channel(), g1 in 0.0..20.0f64, g2 in 0.0..20.0f64, t in 0.0..1.0f64) {
        check(psi_convex(&channels()[i], g1, g2, t))?;
    }

    #[test]
    fn psi_is_lipschitz(i in any_channel(), g1 in 0.0..50.0f64, g2 in 0.0..50.0f64) {
        check(psi_lipschitz(&channels()[i], g1, g2))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi_prime_is_second_order_derivative(i in any_channel(), g in 0.05..10.0f64) {
        check(psi_prime_second_order(&channels()[i], g))?;
    }

    #[test]
    fn denoiser_satisfies_nishimori(i in any_channel(), g in 0.0..30.0f64) {
        check(denoiser_nishimori(&channels()[i], g))?;
    }

    #[test]
    fn gaussian_is_worst_case(k in 0..8usize, g in 0.0..40.0f64) {
        let units = unit_indices();
        check(worst_case_gaussian(&channels()[units[k % units.len()]], g))?;
    }

    #[test]
    fn conjugate_is_an_involution(i in any_channel(), g in 0.05..8.0f64) {
        check(conjugate_duality(&channels()[i], g))?;
    }

    #[test]
    fn stationary_points_have_zero_residual(i in any_channel(), lambda in 0.05..5.0f64) {
        check(stationary_residuals(&wigner_models()[i], lambda))?;
    }

    #[test]
    fn envelope_theorem(i in any_channel(), lambda in 0.1..4.0f64) {
        check(envelope_derivative(&wigner_models()[i], lambda))?;
    }

    #[test]
    fn mmse_limit_is_bounded(i in any_channel(), lambda in 0.0..6.0f64) {
        check(wigner_mmse_bounds(&wigner_models()[i], lambda))?;
    }

    #[test]
    fn se_is_monotone(k in 0..8usize, lambda in 0.1..4.0f64, q0 in 0.0..1.0f64) {
        let units = unit_indices();
        check(se_monotone(&channels()[units[k % units.len()]], lambda, q0))?;
    }

    #[test]
    fn se_limits_are_stationary(k in 0..8usize, lambda in 0.1..4.0f64, q0 in 0.0..1.0f64) {
        let units = unit_indices();
        check(se_limit_stationary(&wigner_models()[units[k % units.len()]], lambda, q0).map(|_| ()))?;
    }
}

fn wishart_prior() -> impl Strategy<Value = Prior> {
    prop_oneof![
        Just(Prior::rademacher()),
        Just(Prior::standard_gaussian()),
        Just(Prior::sbm(0.1).unwrap()),
        Just(Prior::sparse_gaussian(0.2).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_members_are_fixed_points(pu in wishart_prior(), pv in wishart_prior(), lambda in 0.2..3.0f64, alpha in 0.25..4.0f64) {
        check(gamma_residuals(&SpikedWishart::new(pu, pv), lambda, alpha))?;
    }

    #[test]
    fn sup_over_gamma_equals_sup_inf(pu in wishart_prior(), pv in wishart_prior(), lambda in 0.2..3.0f64, alpha in 0.25..4.0f64) {
        check(sup_inf_consistent(&SpikedWishart::new(pu, pv), lambda, alpha).map(|_| ()))?;
    }

    #[test]
    fn gaussian_wishart_matches_closed_form(lambda in 0.2..3.0f64, alpha in 0.25..4.0f64) {
        check(gaussian_wishart_closed_form(lambda, alpha))?;
    }

    #[test]
    fn wishart_errors_consistent(pu in wishart_prior(), pv in wishart_prior(), lambda in 0.2..3.0f64, alpha in 0.25..4.0f64) {
        check(wishart_mmse_consistency(&SpikedWishart::new(pu, pv), lambda, alpha))?;
    }

    #[test]
    fn covariance_curve_reduces_to_solve(pu in wishart_prior(), lambda in 0.2..3.0f64, alpha in 0.25..4.0f64) {
        check(covariance_reduction(&pu, lambda, alpha))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_noise_has_unit_variance(k in 0..4usize, lambda in 0.0..5.0f64, seed in 0..1000u64) {
        let p = [Prior::rademacher(), Prior::standard_gaussian(), Prior::sbm(0.2).unwrap(), Prior::sparse_gaussian(0.3).unwrap()];
        check(noise_moment(&p[k], 300, lambda, seed))?;
    }

    #[test]
    fn oracle_lambda_zero_is_prior(k in 0..3usize, seed in 0..1000u64) {
        let p = [Prior::rademacher(), Prior::bernoulli(0.3).unwrap(), Prior::sbm(0.2).unwrap()];
        check(oracle_prior_marginals(&p[k], 6, seed))?;
    }

    #[test]
    fn full_pinning_has_zero_variance(lambda in 0.0..4.0f64, seed in 0..1000u64) {
        check(pinning_full_reveal(&Prior::rademacher(), 8, lambda, seed))?;
    }

    #[test]
    fn rem_respects_lower_bound(lambda in 0.0..4.0f64, seed in 0..1000u64) {
        check(rem_lower_bound(10, lambda, 30, seed))?;
    }
}

#[test]
fn mmse_is_monotone_and_continuous() {
    let grid: Vec<f64> = (0..=200).map(|k| 0.05 * k as f64).collect();
    for ch in channels() {
        mmse_monotone_continuous(ch, &grid).unwrap();
    }
}

#[test]
fn sup_value_is_convex_in_lambda() {
    let grid: Vec<f64> = (1..=40).map(|k| 0.1 * k as f64).collect();
    for m in wigner_models() {
        sup_value_convex_nondecreasing(m, &grid).unwrap();
    }
}

#[test]
fn phase_order_never_reverses() {
    let lambdas: Vec<f64> = (1..=30).map(|k| 0.05 * k as f64).collect();
    for p in [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.45] {
        classification_monotone(p, &lambdas).unwrap();
    }
}

#[test]
fn oracle_invariants() {
    oracle_nishimori(&Prior::rademacher(), 8, 1.5, 150).unwrap();
    oracle_nishimori(&Prior::sbm(0.3).unwrap(), 6, 2.0, 150).unwrap();
    oracle_mmse_bounds(&Prior::rademacher(), 8, 1.0, 100, 1).unwrap();
    oracle_mmse_bounds(&Prior::bernoulli(0.3).unwrap(), 6, 3.0, 100, 2).unwrap();
    oracle_gap_trend(&Prior::rademacher(), 4, 0.5, 300, 3).unwrap();
    wasserstein_inequality(&Prior::discrete_gaussian(5).unwrap(), 6, 1.0, 20, 60, 4).unwrap();
}
