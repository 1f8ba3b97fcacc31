use coilbed::experiments::compute_metrics;
use coilbed::plant::{
    disturbance_at, drive, inverse_drive, quantize, sense, AcComponent, DisturbanceSpec, FitDirection, PlantModel,
    SensorSpec,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plant() -> impl Strategy<Value = PlantModel> {
    (1.0..100.0f64, -10.0..10.0f64, -3.0..0.0f64, 0.5..5.0f64).prop_map(|(k, b, lo, span)| PlantModel {
        fit_k: k,
        fit_b: b,
        v_min: lo,
        v_max: lo + span,
        sample_rate_hz: 200.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn drive_is_monotone(p in plant(), a in -10.0..10.0f64, b in -10.0..10.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(drive(&p, lo) <= drive(&p, hi));
    }

    #[test]
    fn drive_is_affine_inside_clamp(p in plant(), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let v = |u: f64| p.v_min + u * (p.v_max - p.v_min);
        let (va, vb) = (v(s), v(t));
        let slope = 1000.0 * p.fit_k;
        let diff = drive(&p, vb) - drive(&p, va);
        prop_assert!((diff - slope * (vb - va)).abs() <= 1e-9 * slope.max(1.0) * 10.0);
    }

    #[test]
    fn inverse_then_drive_is_identity_on_reachable_range(p in plant(), u in 0.0..1.0f64) {
        let (lo, hi) = p.reachable_nt();
        let target = lo + u * (hi - lo);
        let back = drive(&p, inverse_drive(&p, target).unwrap());
        prop_assert!((back - target).abs() <= 1e-9 * target.abs().max(1.0));
    }

    #[test]
    fn noise_free_sensor_is_identity(v in -1e6..1e6f64, seed in any::<u64>()) {
        let spec = SensorSpec { noise_sigma_nt: 0.0, quantization_step_nt: 0.0, sample_rate_hz: 75.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(sense(&spec, v, &mut rng), v);
    }

    #[test]
    fn quantize_is_idempotent_and_close(v in -1e6..1e6f64, step in 1.0..1000.0f64) {
        let q = quantize(v, step);
        prop_assert_eq!(quantize(q, step), q);
        prop_assert!((q - v).abs() <= 0.5 * step + 1e-9 * v.abs());
    }

    #[test]
    fn sensing_is_reproducible(v in -1e6..1e6f64, seed in any::<u64>()) {
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| sense(&SensorSpec::HMC5883L, v, &mut rng)).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(), draw());
    }

    #[test]
    fn disturbance_is_a_pure_function(seed in any::<u64>(), idx in 0u64..100_000, t in 0.0..100.0f64) {
        let spec = DisturbanceSpec {
            dc_offset_nt: 5.0,
            ac_components: vec![AcComponent { amplitude_nt: 30.0, frequency_hz: 50.0, phase_rad: 0.3 }],
            gaussian_sigma_nt: 12.0,
            seed,
        };
        prop_assert_eq!(disturbance_at(&spec, t, idx), disturbance_at(&spec, t, idx));
    }
}

#[test]
fn fitted_full_scale_matches_coil() {
    // 3 V on the ascending fit lands within a few percent of the computed
    // centre field of the testbed coil.
    let full = drive(&PlantModel::fitted(FitDirection::Ascending), 3.0);
    assert!((full - 140_761.0).abs() < 1.0);
}

#[test]
fn quantization_ties_go_to_even() {
    assert_eq!(quantize(1.5, 1.0), 2.0);
    assert_eq!(quantize(2.5, 1.0), 2.0);
    assert_eq!(quantize(-0.5, 1.0), -0.0);
}

#[test]
fn step_metrics_of_a_synthetic_response() {
    // First-order approach to 100 with time constant 0.5 s sampled at 100 Hz.
    let series: Vec<(f64, f64)> = (0..1000)
        .map(|i| {
            let t = i as f64 / 100.0;
            (t, 100.0 * (1.0 - (-t / 0.5).exp()))
        })
        .collect();
    let m = compute_metrics(&series, 100.0, 5.0, 0.02, 100.0);
    // Enters the ±2 band where e^{-t/0.5} ≤ 0.02, i.e. t ≥ 0.5·ln 50.
    let entry = (0.5 * 50f64.ln() * 100.0).ceil() / 100.0;
    assert!((m.reach_target_time_s.unwrap() - entry).abs() < 1e-12);
    let tail: Vec<f64> = series.iter().filter(|(t, _)| *t > 5.0).map(|(_, v)| v - 100.0).collect();
    let rmse = (tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64).sqrt();
    assert!((m.rmse_steady - rmse).abs() < 1e-12);
    assert!((m.mean_steady_nt - 100.0).abs() < 5e-3);
    assert!(m.fluct_min_nt <= m.fluct_max_nt);
}

#[test]
fn step_metrics_without_reach() {
    let series: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, 50.0)).collect();
    let m = compute_metrics(&series, 100.0, 1.0, 0.02, 100.0);
    assert!(m.reach_target_time_s.is_none());
    assert!((m.rmse_steady - 50.0).abs() < 1e-12);
    assert_eq!(m.fluct_span_nt(), 0.0);
}
