use optocool::experiment::{
    analyze_point, simulate_point, system_estimate, InputErrors, OperatingPoint, Setup,
};
use optocool::measurement::{ChainModel, DetectorParams};
use optocool::model::{backaction_rate, SystemParams};
use optocool::units::{HBAR, K_B};

fn setup(snr: Option<f64>, seed: u64) -> Setup {
    let dev = SystemParams::reference_device();
    Setup {
        cavity: dev.cavity,
        omega_m: dev.mech.omega_m(),
        g: dev.g,
        detector: DetectorParams::default(),
        chain: ChainModel::new(0.7638, 10f64.powf(0.5)).unwrap(),
        l_0: 0.8262,
        l_taper: 0.7,
        span_linewidths: 10.0,
        grid_points: 801,
        averages: 1000,
        seed,
        snr_target: snr,
    }
}

fn point_for(n_bar: f64, n_c: f64, s: &Setup) -> OperatingPoint {
    let gamma_i = SystemParams::reference_device().mech.gamma_i0();
    let c = backaction_rate(s.g, n_c, s.cavity.kappa()).unwrap() / gamma_i;
    let n_b = n_bar * (1.0 + c);
    OperatingPoint {
        n_c,
        t_b: n_b * HBAR * s.omega_m / K_B,
        gamma_i,
    }
}

#[test]
fn recovers_truth_at_20_db() {
    let s = setup(Some(100.0), 7);
    for (i, (n_bar, n_c)) in [
        (0.5, 2000.0),
        (1.0, 500.0),
        (5.0, 100.0),
        (10.0, 30.0),
        (50.0, 10.0),
    ]
    .into_iter()
    .enumerate()
    {
        let p = point_for(n_bar, n_c, &s);
        let fwd = simulate_point(&s, &p, i as u64).unwrap();
        assert!((fwd.truth.n_bar / n_bar - 1.0).abs() < 1e-9);
        assert!(fwd.budget.snr_predicted >= 100.0 * (1.0 - 1e-12));
        let est = system_estimate(&s.cavity, s.omega_m, p.gamma_i, &InputErrors::default());
        let a = analyze_point(&fwd.signal.spectrum, &fwd.background, &fwd.record, &est).unwrap();
        let rel = a.thermometry.n_bar / n_bar - 1.0;
        assert!(
            rel.abs() < 0.02,
            "n̄ = {n_bar}: recovered {} ({rel:+.4})",
            a.thermometry.n_bar
        );
        let u = a.thermometry.uncertainty;
        assert!((u.analytic / u.monte_carlo - 1.0).abs() < 0.15, "{u:?}");
    }
}

#[test]
fn modeled_chain_low_snr_still_brackets() {
    let s = setup(None, 11);
    let p = point_for(0.85, 2000.0, &s);
    let fwd = simulate_point(&s, &p, 0).unwrap();
    let est = system_estimate(&s.cavity, s.omega_m, p.gamma_i, &InputErrors::default());
    let a = analyze_point(&fwd.signal.spectrum, &fwd.background, &fwd.record, &est).unwrap();
    assert!(
        (0.6..1.1).contains(&a.thermometry.n_bar),
        "{}",
        a.thermometry.n_bar
    );
}
