//! Vehicle motion relative to a roadside unit.
//!
//! A vehicle is tracked by the polar triple `(phi, d, vdot)`: `phi` is the
//! cosine of the angle between the vehicle heading and the vehicle→RSU line,
//! `d` the range and `vdot = speed * phi` the radial velocity toward the RSU.
//! Over one slot the vehicle travels `s = vdot * T / phi` metres along its
//! heading, so the state update is the law of cosines.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{IsacError, Result};
use crate::scalar::{lit, Real};

/// Polar state of one vehicle with respect to one RSU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState<T> {
    pub phi: T,
    pub d: T,
    pub vdot: T,
}

impl<T: Real> VehicleState<T> {
    pub fn new(phi: T, d: T, vdot: T) -> Self {
        Self { phi, d, vdot }
    }

    pub fn to_vector(&self) -> Vector3<T> {
        Vector3::new(self.phi, self.d, self.vdot)
    }

    pub fn from_vector(v: &Vector3<T>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Along-road speed implied by the state, `vdot / phi`.
    pub fn along_road_speed(&self) -> Option<T> {
        if self.phi == T::zero() {
            None
        } else {
            Some(self.vdot / self.phi)
        }
    }
}

/// Ground-truth pose on the highway.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose<T: Real> {
    pub position: Vector2<T>,
    pub speed: T,
    /// Unit vector along the direction of travel.
    pub heading: Vector2<T>,
}

impl<T: Real> CartesianPose<T> {
    pub fn new(position: Vector2<T>, speed: T, heading: Vector2<T>) -> Self {
        let n = heading.norm();
        Self {
            position,
            speed,
            heading: if n > T::zero() { heading / n } else { heading },
        }
    }

    /// Straight-line motion over `dt` seconds.
    pub fn advance(&self, dt: T) -> Self {
        Self {
            position: self.position + self.heading * (self.speed * dt),
            ..*self
        }
    }
}

/// Variances of the state-prediction noise; assembles `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise<T> {
    pub sigma_phi2: T,
    pub sigma_d2: T,
    pub sigma_vdot2: T,
}

impl<T: Real> ProcessNoise<T> {
    pub fn new(sigma_phi2: T, sigma_d2: T, sigma_vdot2: T) -> Self {
        Self {
            sigma_phi2,
            sigma_d2,
            sigma_vdot2,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_valid(&self) -> bool {
        self.sigma_phi2 >= T::zero() && self.sigma_d2 >= T::zero() && self.sigma_vdot2 >= T::zero()
    }

    pub fn matrix(&self) -> Matrix3<T> {
        Matrix3::from_diagonal(&Vector3::new(self.sigma_phi2, self.sigma_d2, self.sigma_vdot2))
    }
}

fn check_admissible<T: Real>(x: &VehicleState<T>) -> Result<()> {
    if !(x.phi.is_finite() && x.d.is_finite() && x.vdot.is_finite()) {
        return Err(IsacError::DegenerateGeometry("non-finite state".into()));
    }
    if x.phi == T::zero() {
        return Err(IsacError::DegenerateGeometry("phi = 0".into()));
    }
    if x.vdot == T::zero() {
        return Err(IsacError::DegenerateGeometry("vdot = 0".into()));
    }
    if x.d <= T::zero() {
        return Err(IsacError::DegenerateGeometry("non-positive range".into()));
    }
    Ok(())
}

/// Travel distance and law-of-cosines radicand for one slot.
fn step_terms<T: Real>(x: &VehicleState<T>, slot: T) -> Result<(T, T)> {
    check_admissible(x)?;
    let s = x.vdot * slot / x.phi;
    let radicand = x.d * x.d + s * s - lit::<T>(2.0) * x.d * x.vdot * slot;
    if !(radicand > T::zero()) {
        return Err(IsacError::DegenerateGeometry(
            "vehicle passes through the RSU within one slot".into(),
        ));
    }
    Ok((s, radicand))
}

/// Deterministic state transition `g(x)` over one slot of length `slot`.
pub fn evolve_state<T: Real>(x: &VehicleState<T>, slot: T) -> Result<VehicleState<T>> {
    let (s, radicand) = step_terms(x, slot)?;
    let d_next = radicand.sqrt();
    // (d vdot T - s^2) / (s d_next) with s = vdot T / phi
    let phi_next = (x.d * x.phi - s) / d_next;
    let vdot_next = phi_next * x.vdot / x.phi;
    Ok(VehicleState::new(phi_next, d_next, vdot_next))
}

/// Jacobian `∂g/∂x` of [`evolve_state`], rows and columns ordered `(phi, d, vdot)`.
pub fn state_jacobian<T: Real>(x: &VehicleState<T>, slot: T) -> Result<Matrix3<T>> {
    let (s, radicand) = step_terms(x, slot)?;
    let two = lit::<T>(2.0);
    let (phi, d, v) = (x.phi, x.d, x.vdot);
    let dn = radicand.sqrt();

    let ds = [-s / phi, T::zero(), slot / phi];
    let dr = [
        two * s * ds[0],
        two * d - two * v * slot,
        two * s * ds[2] - two * d * slot,
    ];
    let ddn = dr.map(|r| r / (two * dn));

    let num = d * phi - s;
    let dnum = [d - ds[0], phi, -ds[2]];
    let dphi: [T; 3] = std::array::from_fn(|j| (dnum[j] * dn - num * ddn[j]) / (dn * dn));
    let phi_next = num / dn;

    let ratio = v / phi;
    let dv = [
        dphi[0] * ratio - phi_next * v / (phi * phi),
        dphi[1] * ratio,
        dphi[2] * ratio + phi_next / phi,
    ];

    Ok(Matrix3::new(
        dphi[0], dphi[1], dphi[2], ddn[0], ddn[1], ddn[2], dv[0], dv[1], dv[2],
    ))
}

/// Polar state of `pose` relative to an RSU at `rsu`.
pub fn cartesian_to_state<T: Real>(pose: &CartesianPose<T>, rsu: &Vector2<T>) -> Result<VehicleState<T>> {
    let to_rsu = rsu - pose.position;
    let d = to_rsu.norm();
    if !(d > T::zero()) {
        return Err(IsacError::DegenerateGeometry("vehicle at the RSU".into()));
    }
    let phi = pose.heading.dot(&to_rsu) / d;
    Ok(VehicleState::new(phi, d, pose.speed * phi))
}
