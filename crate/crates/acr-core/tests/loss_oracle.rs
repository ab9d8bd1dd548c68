//! Finite-difference and property checks for the adaptive loss. The
//! analytic gradient must track a symmetric difference quotient of the loss
//! across both branches and a range of hardness weights and scales.

use acr_core::loss::{
    acr_grad_elem, acr_loss_elem, AcrLossConfig, ContinuityConstant,
};
use proptest::prelude::*;

fn cfg(lambda: f64) -> AcrLossConfig {
    AcrLossConfig::new(lambda).unwrap()
}

#[test]
fn gradient_matches_central_differences_across_both_branches() {
    let ds = [
        1e-6, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.9, 0.999, 1.001, 1.5, 2.0, 5.0,
    ];
    let phis = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
    let lambdas = [1.0, 2.0, 4.0, 10.0];
    for &lambda in &lambdas {
        let c = cfg(lambda);
        for &d in &ds {
            for &phi in &phis {
                // Near zero the log branch behaves like d^(2-phi), whose
                // third derivative grows as d^(-1-phi); the difference
                // quotient's truncation error is ~h^2 d^-2 relative, so the
                // step has to shrink with d.
                let h = (1e-6_f64).min(5e-3 * d);
                let fd = acr_oracles::central_difference(
                    |x| acr_loss_elem(x, phi, &c).unwrap(),
                    d,
                    h,
                );
                let analytic = acr_grad_elem(d, phi, &c).unwrap();
                let tol = 1e-5 * analytic.abs().max(1.0);
                assert!(
                    (fd - analytic).abs() <= tol,
                    "lambda {lambda} d {d} phi {phi}: fd {fd} vs analytic {analytic}"
                );
            }
        }
    }
}

#[test]
fn gradient_at_zero_matches_one_sided_limit() {
    // The limit at d -> 0+ is lambda for phi = 1 and 0 below it, approached
    // as lambda (2 - phi) d^(1-phi). That power-law approach is the oracle:
    // for phi = 0.999 the slope at d = 1e-12 is still ~0.97 lambda, so a
    // naive "must be tiny" check would be wrong, not the gradient.
    for &lambda in &[1.0, 4.0] {
        let c = cfg(lambda);
        for &phi in &[0.0, 0.5, 0.75, 0.999, 1.0] {
            let d = 1e-12;
            let near = acr_grad_elem(d, phi, &c).unwrap();
            let at_zero = acr_grad_elem(0.0, phi, &c).unwrap();
            if phi == 1.0 {
                assert!((near - lambda).abs() < 1e-9, "phi 1: {near}");
                assert_eq!(at_zero, lambda);
            } else {
                assert_eq!(at_zero, 0.0);
                let law = lambda * (2.0 - phi) * d.powf(1.0 - phi);
                assert!(
                    near <= law * (1.0 + 1e-9) && near >= 0.5 * law,
                    "phi {phi}: slope {near} off the approach law {law}"
                );
            }
        }
    }
}

#[test]
fn hard_coordinates_get_larger_small_residual_gradients() {
    // The whole point of the adaptive exponent: at small residuals, a hard
    // coordinate (phi = 1) must pull harder than an easy one (phi = 0). The
    // exact ratio is (1 + d^2) / (2 d (1 + d)), which approaches 1/(2d).
    let c = cfg(4.0);
    for &d in &[1e-4, 1e-3, 0.01, 0.05] {
        let hard = acr_grad_elem(d, 1.0, &c).unwrap();
        let easy = acr_grad_elem(d, 0.0, &c).unwrap();
        assert!(
            hard > 0.8 / (2.0 * d) * easy && hard > 5.0 * easy,
            "d {d}: hard {hard} should dominate easy {easy}"
        );
    }
}

#[test]
fn phi_ln2_offset_leaves_a_jump_at_the_threshold() {
    // The alternative closed-form offset does not join the branches except
    // in special cases; document that with an explicit measurement.
    let c = AcrLossConfig {
        lambda: 4.0,
        continuity: ContinuityConstant::PhiLn2,
        ..Default::default()
    };
    let log_side = acr_loss_elem(1.0, 0.0, &c).unwrap();
    let quad_side = acr_loss_elem(1.0 + 1e-12, 0.0, &c).unwrap();
    assert!(
        (log_side - quad_side).abs() > 0.1,
        "expected a visible jump, got {log_side} vs {quad_side}"
    );
}

proptest! {
    #[test]
    fn loss_is_non_negative_and_zero_at_zero(
        phi in 0.0f64..=1.0,
        lambda in 0.1f64..10.0,
        d in 0.0f64..5.0,
    ) {
        let c = cfg(lambda);
        let l = acr_loss_elem(d, phi, &c).unwrap();
        prop_assert!(l >= 0.0, "loss {l} at d {d}");
        prop_assert_eq!(acr_loss_elem(0.0, phi, &c).unwrap(), 0.0);
    }

    #[test]
    fn loss_is_monotone_in_residual(
        phi in 0.0f64..=1.0,
        lambda in 0.1f64..10.0,
        a in 0.0f64..5.0,
        b in 0.0f64..5.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c = cfg(lambda);
        let l_lo = acr_loss_elem(lo, phi, &c).unwrap();
        let l_hi = acr_loss_elem(hi, phi, &c).unwrap();
        prop_assert!(l_lo <= l_hi + 1e-12, "loss({lo}) = {l_lo} > loss({hi}) = {l_hi}");
    }

    #[test]
    fn branches_join_continuously_for_all_parameters(
        phi in 0.0f64..=1.0,
        lambda in 0.1f64..10.0,
        threshold in 0.5f64..2.0,
    ) {
        let c = AcrLossConfig {
            lambda,
            delta_threshold: threshold,
            continuity: ContinuityConstant::Continuous,
        };
        let eps = 1e-9;
        let below = acr_loss_elem(threshold - eps, phi, &c).unwrap();
        let above = acr_loss_elem(threshold + eps, phi, &c).unwrap();
        prop_assert!(
            (below - above).abs() < 1e-7 * (1.0 + lambda),
            "gap {} at threshold {threshold}",
            (below - above).abs()
        );
    }

    #[test]
    fn gradient_magnitude_is_non_negative(
        phi in 0.0f64..=1.0,
        lambda in 0.1f64..10.0,
        d in 0.0f64..5.0,
    ) {
        let g = acr_grad_elem(d, phi, &cfg(lambda)).unwrap();
        prop_assert!(g >= 0.0 && g.is_finite());
    }
}
