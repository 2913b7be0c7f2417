use approx::assert_relative_eq;
use optocool::model::*;
use optocool::units::hz_to_rad;
use proptest::prelude::*;

// Reference values evaluated at 40 significant digits.
const N_MIN_REF: f64 = 1.153_783_672_022_684e-3;
const N_B_REF: f64 = 99.653_395_868_278_38;
const N_BAR_IDEAL_REF: f64 = 0.263_703_567_285_360_17;
const N_C_UNITY_REF: f64 = 5.283_178_360_101_437;

fn reference() -> (f64, f64, f64, f64) {
    (
        hz_to_rad(910e3),
        hz_to_rad(500e6),
        hz_to_rad(35e3),
        hz_to_rad(3.68e9),
    )
}

#[test]
fn cooperativity_unity_photon_number() {
    let (g, kappa, gamma_i, _) = reference();
    let n = photons_for_cooperativity(1.0, g, gamma_i, kappa).unwrap();
    assert_relative_eq!(n, N_C_UNITY_REF, max_relative = 1e-12);
    assert!((n - 5.3).abs() <= 0.1);
    assert_relative_eq!(
        backaction_rate(g, n, kappa).unwrap(),
        gamma_i,
        max_relative = 1e-12
    );
}

#[test]
fn ideal_floor_and_bath() {
    let (g, kappa, gamma_i, omega_m) = reference();
    let n_min = minimum_occupancy(kappa, omega_m);
    assert_relative_eq!(n_min, N_MIN_REF, max_relative = 1e-3);
    assert!((n_min - 1.15e-3).abs() <= 1e-5);
    let bath = BathState::new(17.6, omega_m).unwrap();
    assert_relative_eq!(bath.n_b, N_B_REF, max_relative = 1e-3);
    assert!((bath.n_b - 99.7).abs() <= 0.5);
    let gom = backaction_rate(g, 2000.0, kappa).unwrap();
    assert_relative_eq!(
        gom / (2.0 * std::f64::consts::PI),
        13.25e6,
        max_relative = 1e-3
    );
    let r = cooled_occupancy(bath.n_b, gamma_i, gom, kappa, omega_m).unwrap();
    assert_relative_eq!(r.n_bar, N_BAR_IDEAL_REF, max_relative = 1e-3);
}

#[test]
fn no_cooling_and_decoherence() {
    let (_, kappa, gamma_i, omega_m) = reference();
    let r = cooled_occupancy(99.7, gamma_i, 0.0, kappa, omega_m).unwrap();
    assert_relative_eq!(r.n_bar, 99.7 + r.n_min, max_relative = 1e-15);
    let d = decoherence_figures(17.6, 1.06e5, omega_m).unwrap();
    assert!((d.n_osc - 169.0).abs() < 1.0, "{}", d.n_osc);
    let d2 = decoherence_figures(35.2, 1.06e5, omega_m).unwrap();
    assert_relative_eq!(d2.tau, d.tau / 2.0, max_relative = 1e-15);
    assert_eq!(decoherence_figures(17.6, 0.0, omega_m).unwrap().tau, 0.0);
}

#[test]
fn contrast_examples() {
    let kappa = hz_to_rad(500e6);
    assert_eq!(kappa_e_from_contrast(0.0, kappa).unwrap(), 0.0);
    let ke = kappa_e_from_contrast(0.25, kappa).unwrap();
    assert!((ke / kappa - 0.134).abs() < 5e-4);
    assert_relative_eq!((1.0 - ke / kappa).powi(2), 0.75, max_relative = 1e-14);
    assert_relative_eq!(
        kappa_e_from_contrast(0.75, kappa).unwrap() / kappa,
        0.5,
        max_relative = 1e-15
    );
    assert!(kappa_e_from_contrast(1.0, kappa).is_err());
}

#[test]
fn paper_drive_round_trip() {
    let kappa = hz_to_rad(500e6);
    let cav = CavityParams::new(hz_to_rad(195e12), kappa, 0.268 * kappa).unwrap();
    let wm = hz_to_rad(3.68e9);
    let p = input_power_for_photons(2000.0, wm, &cav).unwrap();
    let d = intracavity_state(p, wm, &cav).unwrap();
    assert_relative_eq!(d.n_c, 2000.0, max_relative = 1e-12);
}

proptest! {
    #[test]
    fn intracavity_round_trip(p in 1e-9f64..1e-2, det_ghz in -10.0f64..10.0, ratio in 0.01f64..2.0) {
        let kappa = hz_to_rad(500e6);
        let cav = CavityParams::new(hz_to_rad(195e12), kappa, ratio * kappa).unwrap();
        let d = intracavity_state(p, hz_to_rad(det_ghz * 1e9), &cav).unwrap();
        prop_assert!((d.n_c - d.alpha_0.norm_sqr()).abs() <= 1e-12 * d.n_c);
        let back = input_power_for_photons(d.n_c, d.detuning, &cav).unwrap();
        prop_assert!((back / p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backaction_is_linear(n_c in 0.0f64..1e4, a in 0.0f64..100.0) {
        let (g, kappa, _, _) = reference();
        let one = backaction_rate(g, n_c, kappa).unwrap();
        let scaled = backaction_rate(g, a * n_c, kappa).unwrap();
        prop_assert!((scaled - a * one).abs() <= 1e-12 * scaled.abs().max(1e-300));
    }

    #[test]
    fn occupancy_nonincreasing(n_b in 0.0f64..1e4, g1 in 0.0f64..1e8, dg in 0.0f64..1e8) {
        let (_, kappa, gamma_i, omega_m) = reference();
        let a = cooled_occupancy(n_b, gamma_i, g1, kappa, omega_m).unwrap();
        let b = cooled_occupancy(n_b, gamma_i, g1 + dg, kappa, omega_m).unwrap();
        prop_assert!(b.n_bar <= a.n_bar);
        prop_assert!(b.n_bar_no_floor <= a.n_bar_no_floor);
        prop_assert!((a.gamma_total - (a.gamma_i + a.gamma_om)).abs() <= 1e-12 * a.gamma_total);
    }

    #[test]
    fn bath_linear_in_temperature(t in 0.0f64..1000.0, a in 0.0f64..10.0) {
        let wm = hz_to_rad(3.68e9);
        let one = BathState::new(t, wm).unwrap().n_b;
        let scaled = BathState::new(a * t, wm).unwrap().n_b;
        prop_assert!((scaled - a * one).abs() <= 1e-12 * scaled.max(1e-300));
    }
}

#[test]
fn large_cooperativity_reaches_floor() {
    let (_, kappa, gamma_i, omega_m) = reference();
    let r = cooled_occupancy(100.0, gamma_i, 1e9 * gamma_i, kappa, omega_m).unwrap();
    assert_relative_eq!(r.n_bar - r.n_min, 100.0 / (1.0 + 1e9), max_relative = 1e-6);
    let r = cooled_occupancy(1.0, gamma_i, 1e9 * gamma_i, kappa, omega_m).unwrap();
    assert!((r.n_bar / r.n_min - 1.0).abs() < 1e-6);
}
