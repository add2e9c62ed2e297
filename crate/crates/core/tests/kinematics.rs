mod common;

use isac_core::kinematics::*;
use nalgebra::Vector2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T_SLOT: f64 = 0.02;

#[test]
fn matches_cartesian_ground_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 10_000 {
        let pose = common::random_pose(&mut rng);
        let rsu = Vector2::from(common::RSUS[rng.random_range(0..2)]);
        let x = cartesian_to_state(&pose, &rsu).unwrap();
        if x.phi.abs() < 1e-3 {
            continue;
        }
        let want = cartesian_to_state(&pose.advance(T_SLOT), &rsu).unwrap();
        let got = evolve_state(&x, T_SLOT).unwrap();
        worst = worst.max(common::rel_err(got.d, want.d));
        worst = worst.max((got.phi - want.phi).abs() / want.phi.abs().max(1e-3));
        worst = worst.max((got.vdot - want.vdot).abs() / want.vdot.abs().max(1e-3 * pose.speed));
        n += 1;
    }
    assert!(worst < 1e-9, "worst relative error {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn mirrored_rsus_see_mirrored_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let mut pose = common::random_pose(&mut rng);
        pose.position.y = 0.0;
        let [a, b] = common::link_states(&pose);
        if a.phi.abs() < 1e-3 {
            continue;
        }
        let (na, nb) = (evolve_state(&a, T_SLOT).unwrap(), evolve_state(&b, T_SLOT).unwrap());
        assert!((na.d - nb.d).abs() < 1e-12 && (na.phi - nb.phi).abs() < 1e-12);
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 1000 {
        let pose = common::random_pose(&mut rng);
        let x = cartesian_to_state(&pose, &Vector2::from(common::RSUS[0])).unwrap();
        if x.phi.abs() < 1e-2 {
            continue;
        }
        let g = state_jacobian(&x, T_SLOT).unwrap();
        let base = x.to_vector();
        for j in 0..3 {
            let h = 1e-6 * base[j].abs().max(1e-3);
            let mut up = base;
            up[j] += h;
            let mut dn = base;
            dn[j] -= h;
            let fu = evolve_state(&VehicleState::from_vector(&up), T_SLOT)
                .unwrap()
                .to_vector();
            let fd = evolve_state(&VehicleState::from_vector(&dn), T_SLOT)
                .unwrap()
                .to_vector();
            let col = (fu - fd) / (2.0 * h);
            let err = (col - g.column(j)).norm() / g.column(j).norm().max(1e-8);
            assert!(err < 1e-4, "column {j} at {x:?}: {err:e}");
        }
        checked += 1;
    }
}

proptest! {
    #[test]
    fn evolution_preserves_speed_and_bounds(
        phi in prop_oneof![-0.999f64..-0.01, 0.01f64..0.999],
        d in 5.0f64..200.0,
        speed in 5.0f64..45.0,
    ) {
        let x = VehicleState::new(phi, d, speed * phi);
        let y = evolve_state(&x, T_SLOT).unwrap();
        prop_assert!(y.d > 0.0);
        prop_assert!(y.phi.abs() <= 1.0 + 1e-12);
        prop_assert!((y.vdot / y.phi - speed).abs() < 1e-9 * speed);
        prop_assert!((y.d - d).abs() <= speed * T_SLOT + 1e-9);
    }
}

#[test]
fn passing_the_closest_point_flips_the_angle() {
    let rsu = Vector2::new(0.0, 30.0);
    let pose = CartesianPose::new(Vector2::new(-0.2, 0.0), 30.0, Vector2::new(1.0, 0.0));
    let x = cartesian_to_state(&pose, &rsu).unwrap();
    let y = evolve_state(&x, T_SLOT).unwrap();
    assert!(x.phi > 0.0 && y.phi < 0.0 && y.vdot < 0.0);
}
