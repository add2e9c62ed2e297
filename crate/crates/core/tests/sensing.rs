use isac_core::kinematics::VehicleState;
use isac_core::radio::{steer_tx, RadioConfig};
use isac_core::sensing::*;
use isac_core::IsacError;
use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup() -> (VehicleState<f64>, RadioConfig<f64>) {
    (VehicleState::new(0.6, 35.0, 18.0), RadioConfig::highway(8, 8))
}

#[test]
fn noisy_measurements_are_unbiased_and_calibrated() {
    let (x, cfg) = setup();
    let f = steer_tx(0.55, 8);
    let mean = expected_measurement(&x, &f, &cfg).unwrap().stacked();
    let var = noise_variances(&x, &f, &cfg).unwrap().stacked_variances(8);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 20_000;
    let mut sum = DVector::zeros(mean.len());
    let mut sq = DVector::zeros(mean.len());
    for _ in 0..n {
        let e = synthesize_measurement(&x, &f, &cfg, Some(&mut rng)).unwrap().stacked() - &mean;
        sum += &e;
        sq += e.component_mul(&e);
    }
    for r in 0..mean.len() {
        let sd = var[r].sqrt();
        assert!(
            (sum[r] / n as f64).abs() < 4.0 * sd / (n as f64).sqrt(),
            "row {r} biased"
        );
        let ratio = sq[r] / n as f64 / var[r];
        assert!((ratio - 1.0).abs() < 0.05, "row {r}: variance ratio {ratio}");
    }
}

#[test]
fn noiseless_measurement_is_deterministic() {
    let (x, cfg) = setup();
    let f = steer_tx(0.6, 8);
    let y = synthesize_measurement::<f64, ChaCha8Rng>(&x, &f, &cfg, None).unwrap();
    assert_eq!(y, expected_measurement(&x, &f, &cfg).unwrap());
    assert!((y.nu_tilde - 70.0 / 3e8).abs() < 1e-20);
    assert!((y.mu_tilde - 2.0 * 18.0 * 30e9 / 3e8).abs() < 1e-9);
}

#[test]
fn jacobian_matches_central_differences() {
    let cfg = RadioConfig::highway(8, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..1000 {
        let x: VehicleState<f64> = VehicleState::new(
            rng.random_range(-0.95..0.95),
            rng.random_range(31.0..60.0),
            rng.random_range(-30.0..30.0),
        );
        let f = steer_tx(x.phi + rng.random_range(-0.05..0.05), 8);
        let jac = stack_jacobian(&measurement_jacobian(&x, &f, &cfg, true).unwrap());
        let base = x.to_vector();
        for j in 0..3 {
            let h = 1e-6 * base[j].abs().max(1e-3);
            let eval = |delta: f64| {
                let mut v = base;
                v[j] += delta;
                expected_measurement(&VehicleState::from_vector(&v), &f, &cfg)
                    .unwrap()
                    .stacked()
            };
            let col = (eval(h) - eval(-h)) / (2.0 * h);
            let err = (&col - jac.column(j)).norm() / jac.column(j).norm().max(1e-30);
            assert!(err < 1e-4, "column {j}: {err:e}");
        }
    }
}

#[test]
fn approximate_jacobian_drops_only_range_rows() {
    let (x, cfg) = setup();
    let f = steer_tx(0.6, 8);
    let exact = measurement_jacobian(&x, &f, &cfg, true).unwrap();
    let approx = measurement_jacobian(&x, &f, &cfg, false).unwrap();
    for r in 0..cfg.n_r {
        assert_eq!(approx[(r, 1)], Complex::new(0.0, 0.0));
        assert_ne!(exact[(r, 1)], Complex::new(0.0, 0.0));
        assert_eq!(approx[(r, 0)], exact[(r, 0)]);
    }
}

#[test]
fn matched_beam_minimizes_delay_variance() {
    let (x, cfg) = setup();
    let best = noise_variances(&x, &steer_tx(x.phi, 8), &cfg).unwrap().sigma_nu2;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..200 {
        let f = DVector::from_fn(8, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let f = &f / Complex::new(f.norm(), 0.0);
        if let Ok(n) = noise_variances(&x, &f, &cfg) {
            assert!(n.sigma_nu2 >= best * (1.0 - 1e-12));
        }
    }
}

#[test]
fn nulled_beam_is_reported() {
    let (x, cfg) = setup();
    // a beam orthogonal to a(φ): second grid direction
    let f = steer_tx(x.phi + 2.0 / 8.0, 8);
    assert!(matches!(noise_variances(&x, &f, &cfg), Err(IsacError::BeamNull { .. })));
}
