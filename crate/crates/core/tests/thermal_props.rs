use approx::assert_relative_eq;
use optocool::model::SystemParams;
use optocool::thermal::*;
use optocool::units::hz_to_rad;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LARGEST_SHIFT: f64 = 13.79e-12;

#[test]
fn golden_shift_and_bounds() {
    let table = RefractiveIndexTable::synthetic_silicon();
    let model = ThermoOpticModel::default();
    let s = thermo_optic_shift(300.0, 17.6, &model, &table, Some(BoundMode::Max)).unwrap();
    assert!(
        (s.wavelength / 12.5e-9 - 1.0).abs() < 0.05,
        "{}",
        s.wavelength
    );
    let hi = bound_temperature_rise(LARGEST_SHIFT, 17.6, &model, &table, BoundMode::Max).unwrap();
    let lo = bound_temperature_rise(LARGEST_SHIFT, 17.6, &model, &table, BoundMode::Min).unwrap();
    assert!((hi / 16.8 - 1.0).abs() < 0.03, "{hi}");
    assert!((lo / 7.8 - 1.0).abs() < 0.03, "{lo}");
    assert!(thermo_optic_shift(10.0, 17.6, &model, &table, None).is_err());
}

#[test]
fn heated_bath_sits_inside_bounds() {
    let heating = LinearHeating {
        base: 17.6,
        rise_at_reference: 13.2,
        reference_photons: 2000.0,
    };
    let rise = heating.temperature(2000.0) - 17.6;
    assert_relative_eq!(rise, 13.2, max_relative = 1e-12);
    assert!((7.8..=16.8).contains(&rise));
    let dev = SystemParams::reference_device();
    let d = DampingDecomposition::synthetic_default(dev.mech.gamma_i0(), 17.6);
    let b = total_intrinsic_damping(0.0, 17.6, &d).unwrap();
    assert_eq!(b.total, dev.mech.gamma_i0());
}

fn extended_table(curvature: f64) -> (RefractiveIndexTable, RefractiveIndexTable) {
    let base = RefractiveIndexTable::synthetic_silicon();
    let slope = base.lower_edge_slope();
    let n30 = base.index_at(30.0).unwrap();
    // below 30 K the slope falls from its edge value to zero as (T/30)^curvature
    let mut t: Vec<f64> = (0..=104).map(|k| 4.0 + 0.25 * k as f64).collect();
    let mut n: Vec<f64> = t
        .iter()
        .map(|&x| n30 - slope * 30.0 / (curvature + 1.0) * (1.0 - (x / 30.0).powf(curvature + 1.0)))
        .collect();
    t.pop();
    n.pop();
    for (a, b) in base.rows() {
        t.push(a);
        n.push(b);
    }
    (base, RefractiveIndexTable::new(t, n).unwrap())
}

proptest! {
    #[test]
    fn shift_monotone_in_temperature(t1 in 30.0f64..299.0, dt in 0.01f64..50.0) {
        let table = RefractiveIndexTable::synthetic_silicon();
        let model = ThermoOpticModel::default();
        let t2 = (t1 + dt).min(300.0);
        let a = thermo_optic_shift(t1, 30.0, &model, &table, None).unwrap();
        let b = thermo_optic_shift(t2, 30.0, &model, &table, None).unwrap();
        prop_assert!(b.wavelength > a.wavelength);
    }

    #[test]
    fn bound_modes_bracket_true_rise(curvature in 0.0f64..6.0, rise in 0.5f64..40.0) {
        let (base, truth) = extended_table(curvature);
        let model = ThermoOpticModel::default();
        let shift = thermo_optic_shift(17.6 + rise, 17.6, &model, &truth, None).unwrap().wavelength;
        let hi = bound_temperature_rise(shift, 17.6, &model, &base, BoundMode::Max).unwrap();
        let lo = bound_temperature_rise(shift, 17.6, &model, &base, BoundMode::Min).unwrap();
        prop_assert!(lo <= rise * (1.0 + 1e-6) && rise <= hi * (1.0 + 1e-6), "{lo} {rise} {hi}");
    }

    #[test]
    fn power_law_scale_equivariant(a in 1e-3f64..1e3, b in -2.0f64..2.0, c in 1e-3f64..1e3) {
        let pts: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64 * 37.0, a * (k as f64 * 37.0).powf(b) * (1.0 + 0.01 * (k as f64).sin()))).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, c * y)).collect();
        let (p, q) = (fit_power_law(&pts).unwrap(), fit_power_law(&scaled).unwrap());
        prop_assert!((q.a / (c * p.a) - 1.0).abs() < 1e-10);
        prop_assert!((q.b - p.b).abs() < 1e-10);
    }

    #[test]
    fn exact_power_law_recovered(a in 1e-3f64..1e3, b in -2.0f64..2.0) {
        let pts: Vec<(f64, f64)> = (1..=8).map(|k| (k as f64 * 250.0, a * (k as f64 * 250.0).powf(b))).collect();
        let p = fit_power_law(&pts).unwrap();
        prop_assert!((p.a / a - 1.0).abs() < 1e-10 && (p.b - b).abs() < 1e-10);
    }

    #[test]
    fn channels_sum_to_total(n_c in 0.0f64..5000.0, t in 17.6f64..60.0) {
        let d = DampingDecomposition::synthetic_default(hz_to_rad(35e3), 17.6);
        let b = total_intrinsic_damping(n_c, t, &d).unwrap();
        prop_assert_eq!(b.total, b.intrinsic + b.thermal + b.free_carrier);
    }
}

#[test]
fn constant_and_noisy_power_laws() {
    let flat: Vec<(f64, f64)> = (1..=5).map(|k| (k as f64, 4.2)).collect();
    let p = fit_power_law(&flat).unwrap();
    assert_relative_eq!(p.a, 4.2, max_relative = 1e-12);
    assert!(p.b.abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let noisy: Vec<(f64, f64)> = (0..20)
        .map(|k| {
            let x = 10f64.powf(k as f64 * 3.0 / 19.0);
            (x, 0.3 * x.powf(0.7) * (1.0 + noise.sample(&mut rng)))
        })
        .collect();
    assert!((fit_power_law(&noisy).unwrap().b - 0.7).abs() < 0.05);
}

#[test]
fn far_detuned_extraction() {
    let dev = SystemParams::reference_device();
    let (g, kappa, wm) = (dev.g, dev.cavity.kappa(), dev.mech.omega_m());
    let gamma_i = hz_to_rad(64.897e3);
    let samples: Vec<(f64, f64)> = (0..15)
        .map(|k| {
            let d = hz_to_rad(8e9 + 0.5e9 * k as f64);
            (d, gamma_i + far_detuned_gamma_om(g, 2000.0, kappa, d, wm))
        })
        .collect();
    let exact = extract_excess_loss(&samples, DetuningModel::Exact { kappa, omega_m: wm }).unwrap();
    assert_relative_eq!(exact.gamma_i, gamma_i, max_relative = 1e-6);
    let inv = extract_excess_loss(&samples, DetuningModel::InverseSquare).unwrap();
    for &(d, y) in &samples {
        let model = inv.gamma_i + inv.slope / (d * d);
        assert!((model - y).abs() <= 3.0 * inv.residual_rms);
    }
    assert!(
        (inv.gamma_i - gamma_i).abs() / gamma_i < 0.25,
        "{}",
        inv.gamma_i / gamma_i
    );
}
