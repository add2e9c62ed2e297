#![allow(dead_code)]

use isac_core::kinematics::{cartesian_to_state, CartesianPose, VehicleState};
use isac_core::NUM_RSU;
use nalgebra::Vector2;
use rand::Rng;

pub const RSUS: [[f64; 2]; NUM_RSU] = [[0.0, 30.0], [0.0, -30.0]];

/// Random vehicle on the 60 m × 10 m segment, travelling along ±x.
pub fn random_pose<R: Rng>(rng: &mut R) -> CartesianPose<f64> {
    let x = rng.random_range(-30.0..30.0);
    let y = rng.random_range(-5.0..5.0);
    let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    CartesianPose::new(Vector2::new(x, y), rng.random_range(20.0..40.0), Vector2::new(dir, 0.0))
}

pub fn link_states(pose: &CartesianPose<f64>) -> [VehicleState<f64>; NUM_RSU] {
    std::array::from_fn(|i| cartesian_to_state(pose, &Vector2::new(RSUS[i][0], RSUS[i][1])).unwrap())
}

/// Link states of `k` random vehicles, avoiding the degenerate φ ≈ 0 strip.
pub fn random_geometry<R: Rng>(rng: &mut R, k: usize) -> Vec<[VehicleState<f64>; NUM_RSU]> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let s = link_states(&random_pose(rng));
        if s.iter().all(|x| x.phi.abs() > 1e-3) {
            out.push(s);
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
