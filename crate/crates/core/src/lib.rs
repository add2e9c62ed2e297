//! Beam tracking and beamforming for two-RSU vehicular ISAC on a straight highway.
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`, which is what the simulator uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exchange;
pub mod kinematics;
pub mod optimizer;
pub mod radio;
pub mod scalar;
pub mod sensing;
pub mod tracking;

pub use error::{IsacError, Result};
pub use kinematics::{cartesian_to_state, evolve_state, state_jacobian, CartesianPose, ProcessNoise};
pub use radio::{sinr, steer_derivative, steer_rx, steer_tx, sum_rate, Assignment, NUM_RSU};
pub use scalar::Real;
pub use sensing::{expected_measurement, measurement_jacobian, noise_variances, synthesize_measurement};
pub use tracking::{correct, fisher_info, lambda_threshold, predict, steering_derivative, GainMode, TrackingOptions};

pub type VehicleState = kinematics::VehicleState<f64>;
pub type RadioConfig = radio::RadioConfig<f64>;
pub type BeamformingSet = radio::BeamformingSet<f64>;
pub type Measurement = sensing::Measurement<f64>;
pub type MeasurementNoise = sensing::MeasurementNoise<f64>;
pub type TrackState = tracking::TrackState<f64>;
pub type FisherInfo = tracking::FisherInfo<f64>;
pub type CVector = scalar::CVector<f64>;
