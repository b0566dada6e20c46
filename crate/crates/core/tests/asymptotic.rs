//! Large-system state evolution: closed form vs general recursion, and the
//! design guarantees for (ω, Λ) base matrices.

use proptest::prelude::*;
use scsparc_core::params::capacity;
use scsparc_core::{asymptotic_se, asymptotic_se_band, proposition_one, BaseMatrix};

#[test]
fn band_form_equals_general_form() {
    for omega in 1..=8 {
        for lambda in (2 * omega - 1)..=64 {
            for &snr in &[7.0, 15.0, 31.0] {
                for frac in [0.5, 0.7, 0.9] {
                    let rate = frac * capacity(snr);
                    let band = asymptotic_se_band(omega, lambda, snr, rate).unwrap();
                    let w = BaseMatrix::omega_lambda(omega, lambda, snr).unwrap();
                    let general = asymptotic_se(&w, 1.0, rate).unwrap();
                    assert_eq!(band.psi, general.psi, "ω={omega} Λ={lambda} snr={snr} R={rate}");
                    assert_eq!(band.iterations, general.iterations);
                    for (a, b) in band.phi.iter().flatten().zip(general.phi.iter().flatten()) {
                        assert!((a - b).abs() <= 1e-12 * a.abs());
                    }
                }
            }
        }
    }
}

#[test]
fn low_rate_decodes_in_one_iteration() {
    for (omega, lambda, snr) in [(2, 8, 15.0), (6, 32, 15.0), (4, 7, 7.0), (8, 40, 31.0)] {
        let kappa = (lambda + omega - 1) as f64 / lambda as f64;
        let rate = 0.99 * snr / (2.0 * (1.0 + kappa * snr));
        let rep = proposition_one(omega, lambda, snr, rate).unwrap();
        assert!(rep.full_decode_first_iter);
        let tr = asymptotic_se_band(omega, lambda, snr, rate).unwrap();
        assert_eq!(tr.iterations, 1);
        assert!(tr.fully_decoded());
    }
}

#[test]
fn far_below_threshold_never_starts() {
    // ω = 2 at 0.9 C with snr 15 needs a much wider coupling to start
    let snr = 15.0;
    let rate = 0.9 * capacity(snr);
    let rep = proposition_one(2, 32, snr, rate).unwrap();
    assert!(!rep.omega_condition_ok);
    let tr = asymptotic_se_band(2, 32, snr, rate).unwrap();
    assert_eq!(tr.iterations, 0);
    assert!(tr.final_psi().iter().all(|&p| p == 1.0));
    // the first column is the easiest, and it fails
    assert!(tr.effective_snr[0][0] <= 2.0 * rate);
}

#[test]
fn wave_preset_is_below_the_large_system_start() {
    // F_1 = g Σ_{r=1}^{ω} 1/(1 + g r), g = κ snr / ω, must exceed 2Rκ
    let (omega, lambda, snr) = (6usize, 32usize, 15.0);
    let rate = 1.5 * std::f64::consts::LN_2;
    let kappa = 37.0 / 32.0;
    let g = kappa * snr / omega as f64;
    let f1: f64 = g * (1..=omega).map(|r| 1.0 / (1.0 + g * r as f64)).sum::<f64>();
    assert!(f1 < 2.0 * rate * kappa);

    let rep = proposition_one(omega, lambda, snr, rate).unwrap();
    assert!(rep.rate_condition_ok);
    assert!(!rep.omega_condition_ok);
    let tr = asymptotic_se_band(omega, lambda, snr, rate).unwrap();
    assert_eq!(tr.iterations, 0);
    assert!((tr.effective_snr[0][0] * kappa - f1).abs() < 1e-12);

    // at 1.2 bits the same matrix decodes from both ends inwards
    let tr = asymptotic_se_band(omega, lambda, snr, 1.2 * std::f64::consts::LN_2).unwrap();
    assert!(tr.fully_decoded());
    assert_eq!(tr.psi[1][0], 0.0);
    assert_eq!(tr.psi[1][31], 0.0);
    assert_eq!(tr.psi[1][16], 1.0);
}

proptest! {
    #[test]
    fn profiles_are_symmetric_and_monotone(omega in 1usize..9, extra in 0usize..40, snr in 1.0f64..40.0, frac in 0.2f64..0.99) {
        let lambda = 2 * omega - 1 + extra;
        let rate = frac * capacity(snr);
        let tr = asymptotic_se_band(omega, lambda, snr, rate).unwrap();
        let rows = lambda + omega - 1;
        for t in 0..tr.psi.len() {
            for c in 0..lambda {
                prop_assert_eq!(tr.psi[t][c], tr.psi[t][lambda - 1 - c]);
                prop_assert!(tr.psi[t][c] == 0.0 || tr.psi[t][c] == 1.0);
            }
            for r in 0..rows {
                prop_assert!((tr.phi[t][r] - tr.phi[t][rows - 1 - r]).abs() <= 1e-12 * tr.phi[t][r]);
                prop_assert!(tr.phi[t][r] >= 1.0);
            }
            if t > 0 {
                // decoded set only grows; every decode statistic only improves
                for c in 0..lambda {
                    prop_assert!(tr.psi[t][c] <= tr.psi[t - 1][c]);
                    prop_assert!(tr.effective_snr[t][c] >= tr.effective_snr[t - 1][c]);
                }
                // undecoded neighbours of a newly decoded column strictly improve
                for c in 0..lambda {
                    if tr.psi[t][c] == 0.0 && tr.psi[t - 1][c] == 1.0 {
                        let lo = c.saturating_sub(omega - 1);
                        let hi = (c + omega - 1).min(lambda - 1);
                        for d in lo..=hi {
                            if tr.psi[t][d] == 1.0 && t + 1 < tr.effective_snr.len() {
                                prop_assert!(tr.effective_snr[t + 1][d] > tr.effective_snr[t][d]);
                            }
                        }
                    }
                }
            }
        }
        prop_assert!(tr.converged);
        prop_assert!(tr.iterations <= lambda);
    }

    #[test]
    fn design_bounds_hold(omega in 1usize..11, extra in 0usize..60, snr in 2.0f64..40.0, frac in 0.3f64..0.99) {
        let lambda = 2 * omega - 1 + extra;
        let rate = frac * capacity(snr);
        let rep = proposition_one(omega, lambda, snr, rate).unwrap();
        prop_assume!(rep.rate_condition_ok && rep.omega_condition_ok);
        let tr = asymptotic_se_band(omega, lambda, snr, rate).unwrap();
        // column 1 always starts once the coupling is wide enough
        prop_assert_eq!(tr.psi[1][0], 0.0);
        let c = rep.c_star_lower_bound;
        for k in 0..c {
            prop_assert_eq!(tr.psi[1][k], 0.0);
            prop_assert_eq!(tr.psi[1][lambda - 1 - k], 0.0);
        }
        if let Some(bound) = rep.iteration_upper_bound {
            prop_assert!(tr.fully_decoded());
            prop_assert!(tr.iterations <= bound, "{} > {}", tr.iterations, bound);
        }
    }
}
