use approx::assert_relative_eq;
use optocool::analysis::*;
use optocool::quantum::{sb_lorentzians, Sideband};
use optocool::units::{hz_to_rad, rad_to_hz};
use optocool::{FrequencyGrid, Sidedness, Spectrum};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

fn lorentz_spectrum(a: f64, wm: f64, gamma: f64, span: f64, n: usize) -> Spectrum {
    let grid = FrequencyGrid::centered(rad_to_hz(wm), span * rad_to_hz(gamma), n).unwrap();
    Spectrum::from_fn(grid, "W/Hz", Sidedness::Single, |w| {
        lorentzian(w, a, wm, gamma)
    })
}

fn averaged(s: &Spectrum, floor: f64, averages: f64, seed: u64) -> (Spectrum, Spectrum) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Gamma::new(averages, 1.0 / averages).unwrap();
    let sig = s
        .values
        .iter()
        .map(|v| (v + floor) * d.sample(&mut rng))
        .collect();
    let bg = s
        .values
        .iter()
        .map(|_| floor * d.sample(&mut rng))
        .collect();
    (
        Spectrum::new(s.grid, sig, s.unit.clone(), s.sidedness).unwrap(),
        Spectrum::new(s.grid, bg, s.unit.clone(), s.sidedness).unwrap(),
    )
}

proptest! {
    #[test]
    fn noiseless_fit_is_exact(a in 1e-15f64..1e3, gamma_khz in 1.0f64..1e4, offset in -0.5f64..0.5) {
        let gamma = hz_to_rad(gamma_khz * 1e3);
        let wm = hz_to_rad(3.68e9) + offset * gamma;
        let s = lorentz_spectrum(a, wm, gamma, 8.0, 601);
        let f = fit_lorentzian(&s, None).unwrap();
        prop_assert!((f.amplitude / a - 1.0).abs() < 1e-6);
        prop_assert!((f.gamma / gamma - 1.0).abs() < 1e-6);
        prop_assert!((f.omega_m - wm).abs() < 1e-6 * gamma);
    }

    #[test]
    fn red_blue_mean_is_exact(gamma_i in 1.0f64..1e7, c in 0.0f64..0.999) {
        let got = intrinsic_linewidth(gamma_i * (1.0 + c), gamma_i * (1.0 - c)).unwrap();
        prop_assert!((got / gamma_i - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gain_invariance(a in 0.1f64..10.0) {
        let record = CalibrationRecord::synthesize(0.83, 0.76, 0.7, 1e-4, 1e-4, 1e-7, 0.5, 4e4, 50.0).unwrap();
        let fit = test_fit(1e-9);
        let sys = test_system();
        let base = phonon_number(&fit, &record, &sys).unwrap().n_bar;
        let mut scaled_record = record;
        scaled_record.v_dc *= a;
        let scaled = phonon_number(&scaled_fit(&fit, a * a), &scaled_record, &sys).unwrap().n_bar;
        prop_assert!((scaled / base - 1.0).abs() < 1e-12);
    }
}

fn test_fit(power: f64) -> LorentzFit {
    let gamma = hz_to_rad(13.3e6);
    LorentzFit {
        amplitude: 4.0 * power / gamma,
        omega_m: hz_to_rad(3.68e9),
        gamma,
        integrated_power: power,
        integrated_power_std: 0.006 * power,
        residual_norm: 0.0,
        covariance: [
            [0.0; 3],
            [0.0, (1e-7 * hz_to_rad(3.68e9)).powi(2), 0.0],
            [0.0, 0.0, (0.006 * gamma).powi(2)],
        ],
        ci95: [0.0; 3],
        iterations: 1,
    }
}

fn scaled_fit(f: &LorentzFit, k: f64) -> LorentzFit {
    LorentzFit {
        amplitude: f.amplitude * k,
        integrated_power: f.integrated_power * k,
        integrated_power_std: f.integrated_power_std * k,
        ..f.clone()
    }
}

fn test_system() -> SystemEstimate {
    let kappa = hz_to_rad(500e6);
    SystemEstimate {
        omega_o: Measured::relative(hz_to_rad(195e12), 0.007),
        kappa: Measured::relative(kappa, 0.007),
        kappa_e: Measured::relative(0.134 * kappa, 0.007),
        detuning: Measured::relative(hz_to_rad(3.68e9), 0.003),
        gamma_i: Measured::relative(hz_to_rad(35e3), 0.016),
    }
}

#[test]
fn edfa_gain_invariance() {
    let mut record =
        CalibrationRecord::synthesize(0.83, 0.76, 0.7, 1e-4, 1e-4, 1e-7, 0.5, 4e4, 50.0).unwrap();
    let fit = test_fit(1e-9);
    let sys = test_system();
    let base = phonon_number(&fit, &record, &sys).unwrap().n_bar;
    record.g_edfa *= 2.0;
    let doubled = phonon_number(&scaled_fit(&fit, 4.0), &record, &sys)
        .unwrap()
        .n_bar;
    assert_relative_eq!(doubled, base, max_relative = 1e-12);
}

#[test]
fn integrated_power_matches_quadrature() {
    let gamma = hz_to_rad(35e3);
    let s = lorentz_spectrum(2.5, hz_to_rad(3.68e9), gamma, 5000.0, 400_001);
    let f = fit_lorentzian(&s, None).unwrap();
    let fitted = Spectrum::from_fn(s.grid, "W/Hz", Sidedness::Single, |w| {
        lorentzian(w, f.amplitude, f.omega_m, f.gamma)
    });
    let analytic_window =
        f.integrated_power * (2.0 / std::f64::consts::PI) * (2.0 * 5000.0f64).atan();
    assert!((fitted.integrate() / analytic_window - 1.0).abs() < 1e-3);
    assert!((fitted.integrate() / f.integrated_power - 1.0).abs() < 1e-3);
}

#[test]
fn low_power_red_blue_pair() {
    let gamma_i = hz_to_rad(35e3);
    let wm = hz_to_rad(3.68e9);
    let grid = FrequencyGrid::centered(3.68e9, 500e3, 801).unwrap();
    let mut widths = vec![];
    for (k, side) in [Sideband::Red, Sideband::Blue].into_iter().enumerate() {
        let clean = sb_lorentzians(1.0, gamma_i, 0.27, wm, &grid, side).unwrap();
        let floor = clean.peak().1 / 10.0;
        let (sig, bg) = averaged(&clean, floor, 1000.0, 17 + k as u64);
        let f = fit_lorentzian(&subtract_background(&sig, &bg).unwrap(), None).unwrap();
        let hz = rad_to_hz(f.gamma);
        assert!((25.5e3..=44.5e3).contains(&hz), "{hz}");
        widths.push((f.gamma, f.ci95[2]));
    }
    let gi = intrinsic_linewidth(widths[0].0, widths[1].0).unwrap();
    let ci = 0.5 * widths[0].1.hypot(widths[1].1);
    assert!(
        (gi - gamma_i).abs() <= ci,
        "{} ± {}",
        rad_to_hz(gi),
        rad_to_hz(ci)
    );
}

#[test]
fn background_subtraction_examples() {
    let s = lorentz_spectrum(1.0, hz_to_rad(3.68e9), hz_to_rad(35e3), 10.0, 801);
    let zero = subtract_background(&s, &s).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
    let shift = |sp: &Spectrum| Spectrum {
        values: sp.values.iter().map(|v| v + 3.0).collect(),
        ..sp.clone()
    };
    let bg = Spectrum::from_fn(s.grid, "W/Hz", Sidedness::Single, |_| 0.2);
    let a = subtract_background(&s, &bg).unwrap();
    let b = subtract_background(&shift(&s), &shift(&bg)).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-12);
    }
    let other = lorentz_spectrum(1.0, hz_to_rad(3.7e9), hz_to_rad(35e3), 10.0, 801);
    assert!(subtract_background(&s, &other).is_err());

    let wide = lorentz_spectrum(1.0, hz_to_rad(3.68e9), hz_to_rad(35e3), 200.0, 16_001);
    let (sig, bg) = averaged(&wide, 0.05, 1000.0, 99);
    let area = subtract_background(&sig, &bg).unwrap().integrate();
    assert!(
        (area / wide.integrate() - 1.0).abs() < 0.01,
        "{}",
        area / wide.integrate()
    );
}

#[test]
fn calibration_examples() {
    let sym =
        CalibrationRecord::synthesize(0.7, 0.7, 0.8, 1e-4, 2e-4, 1e-7, 0.5, 1e3, 50.0).unwrap();
    let l = extract_insertion_losses(&sym).unwrap();
    assert_relative_eq!(l.l_0, l.product.sqrt(), max_relative = 1e-12);
    assert_relative_eq!(l.l_1, l.product.sqrt(), max_relative = 1e-12);

    let r = CalibrationRecord::synthesize(0.8, 0.6, 0.9, 1e-4, 3e-4, 2e-7, 0.4, 1e3, 50.0).unwrap();
    let l = extract_insertion_losses(&r).unwrap();
    assert_relative_eq!(l.l_0, 0.8, max_relative = 1e-12);
    assert_relative_eq!(l.l_1, 0.6, max_relative = 1e-12);
    assert!(l.consistent);

    let paper =
        CalibrationRecord::synthesize(0.8262, 0.7638, 0.7, 1e-4, 1e-4, 1e-7, 0.5, 4e4, 50.0)
            .unwrap();
    let l = extract_insertion_losses(&paper).unwrap();
    assert!((-10.0 * l.product.log10() - 2.0).abs() < 0.05);
    assert!((l.input_power_uncertainty - 0.04).abs() < 1e-3);

    assert_eq!(modulation_depth(0.0, &paper).unwrap(), 0.0);
    for beta in [1e-4, 0.03, 0.5] {
        assert_relative_eq!(
            modulation_depth(paper.tone_power(beta), &paper).unwrap(),
            beta,
            max_relative = 1e-9
        );
    }
    let direct =
        (2.0 * 1e-6 * paper.load).sqrt() / (paper.v_dc / paper.p_rsa_dc * paper.p_rsa_measure);
    assert_relative_eq!(
        modulation_depth(1e-6, &paper).unwrap(),
        direct,
        max_relative = 1e-14
    );
}

fn paper_ledger(scale: f64) -> InputLedger {
    let wm = hz_to_rad(3.68e9);
    let kappa = hz_to_rad(500e6);
    InputLedger {
        omega_o: Measured::relative(hz_to_rad(195e12), 0.007 * scale),
        kappa: Measured::relative(kappa, 0.007 * scale),
        kappa_e: Measured::relative(0.134 * kappa, 0.007 * scale),
        detuning: Measured::relative(wm, 0.003 * scale),
        omega_m: Measured::relative(wm, 1e-7 * scale),
        gamma: Measured::relative(hz_to_rad(13.3e6), 0.006 * scale),
        gamma_i: Measured::relative(hz_to_rad(64.9e3), 0.016 * scale),
        p_in: Measured::relative(1e-4, 0.04 * scale),
        p_rsa: Measured::relative(1e-12, 0.006 * scale),
        gain: 1.0,
    }
}

#[test]
fn uncertainty_examples() {
    let zero = thermometry_from_ledger(paper_ledger(0.0)).unwrap();
    assert_eq!(zero.uncertainty.analytic, 0.0);
    let r = thermometry_from_ledger(paper_ledger(1.0)).unwrap();
    assert!(
        (r.uncertainty.analytic - 0.045).abs() <= 0.005,
        "{}",
        r.uncertainty.analytic
    );
    assert!((r.uncertainty.monte_carlo / r.uncertainty.analytic - 1.0).abs() < 0.15);
    assert_eq!(phonon_uncertainty(&r).unwrap(), r.uncertainty);
    assert_relative_eq!(
        r.n_bar_sigma,
        r.n_bar * r.uncertainty.analytic,
        max_relative = 1e-15
    );

    let mut missing = paper_ledger(1.0);
    missing.kappa.sigma = f64::NAN;
    assert!(thermometry_from_ledger(missing).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_tracks_quadrature(scale in 0.05f64..1.0) {
        let r = thermometry_from_ledger(paper_ledger(scale)).unwrap();
        prop_assert!((r.uncertainty.monte_carlo / r.uncertainty.analytic - 1.0).abs() < 0.15);
    }
}

#[test]
fn bath_temperature_inference() {
    let r = thermometry_from_ledger(paper_ledger(1.0)).unwrap();
    let l = r.ledger;
    let n_b = r.n_bar * l.gamma.value / l.gamma_i.value;
    assert_relative_eq!(
        r.t_b,
        n_b * optocool::units::HBAR * l.omega_m.value / optocool::units::K_B,
        max_relative = 1e-12
    );
}

fn fig3b_points(seed: u64) -> Vec<CurvePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.8).unwrap();
    let mut t_c: Vec<f64> = (2..=10).map(|k| 2.0 * k as f64).collect();
    t_c.extend((5..=30).map(|k| 5.0 * k as f64));
    t_c.into_iter()
        .map(|t| {
            let ideal = if t >= 50.0 {
                t
            } else if t <= 20.0 {
                17.6
            } else {
                17.6 + 32.4 * ((t - 20.0) / 30.0).powi(2)
            };
            CurvePoint {
                t_c: t,
                t_b: ideal + noise.sample(&mut rng),
                t_b_sigma: 0.8,
            }
        })
        .collect()
}

#[test]
fn saturation_plateau_and_onset() {
    for seed in 0..20 {
        let c = mode_thermometry_curve(&fig3b_points(seed)).unwrap();
        let p = c.plateau.expect("plateau");
        assert!((p.mean - 17.6).abs() < 0.8, "seed {seed}: {p:?}");
        assert!(p.std < 1.6);
        let onset = c.onset.unwrap();
        assert!((40.0..=60.0).contains(&onset), "seed {seed}: onset {onset}");
    }
}
