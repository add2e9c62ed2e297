//! Array responses, channel gains and the downlink SINR / rate model.

use nalgebra::{Complex, DVector};

use crate::error::{IsacError, Result};
use crate::kinematics::VehicleState;
use crate::scalar::{abs2, cis, inner, lit, norm2, CVector, Real};

/// Number of roadside units in the network.
pub const NUM_RSU: usize = 2;

/// Radio and sensing constants of one deployment. All quantities are linear.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig<T: Real> {
    pub n_t: usize,
    pub n_r: usize,
    /// Carrier frequency (Hz).
    pub f_c: T,
    /// Propagation speed (m/s).
    pub c: T,
    /// Channel power gain at 1 m.
    pub alpha_ref: T,
    /// Complex fading coefficient of the radar cross-section.
    pub varrho: Complex<T>,
    pub sigma_c2: T,
    pub sigma_e2: T,
    /// ISAC signal duration (s).
    pub t_s: T,
    /// Matched-filter gain.
    pub g_mf: T,
    pub rho_r: T,
    pub rho_nu: T,
    pub rho_mu: T,
}

impl<T: Real> RadioConfig<T> {
    /// Highway deployment defaults: 30 GHz carrier, −70 dB channel gain and
    /// noise floors, `ϱ = 10+10j`, matched-filter gain 10.
    pub fn highway(n_t: usize, n_r: usize) -> Self {
        Self {
            n_t,
            n_r,
            f_c: lit(30e9),
            c: lit(3e8),
            alpha_ref: lit(1e-7),
            varrho: Complex::new(lit(10.0), lit(10.0)),
            sigma_c2: lit(1e-7),
            sigma_e2: lit(1e-7),
            t_s: lit(0.01),
            g_mf: lit(10.0),
            rho_r: lit(1.0),
            rho_nu: lit(6.7e-7),
            rho_mu: lit(2e4),
        }
    }

    /// Joint transmit/receive array gain `κ = √(n_t n_r)`.
    pub fn kappa(&self) -> T {
        lit::<T>((self.n_t * self.n_r) as f64).sqrt()
    }

    /// Transmit array gain `κ' = √n_t`.
    pub fn kappa_tx(&self) -> T {
        lit::<T>(self.n_t as f64).sqrt()
    }

    /// Effective downlink gain `κ'² |α|` at range `d`.
    pub fn link_gain(&self, d: T) -> Result<T> {
        Ok(lit::<T>(self.n_t as f64) * path_loss(d, self.alpha_ref)?)
    }
}

fn ula<T: Real>(phi: T, n: usize) -> CVector<T> {
    let scale = T::one() / lit::<T>(n as f64).sqrt();
    DVector::from_fn(n, |k, _| cis(-T::pi() * lit::<T>(k as f64) * phi) * scale)
}

/// Transmit steering vector `a(φ)`.
pub fn steer_tx<T: Real>(phi: T, n_t: usize) -> CVector<T> {
    ula(phi, n_t)
}

/// Receive steering vector `b(φ)`.
pub fn steer_rx<T: Real>(phi: T, n_r: usize) -> CVector<T> {
    ula(phi, n_r)
}

/// Element-wise derivative of a ULA steering vector with respect to `φ`.
pub fn steer_derivative<T: Real>(phi: T, n: usize) -> CVector<T> {
    let v = ula(phi, n);
    DVector::from_fn(n, |k, _| v[k] * Complex::new(T::zero(), -T::pi() * lit::<T>(k as f64)))
}

/// Free-space path loss `ᾱ / d²`.
pub fn path_loss<T: Real>(d: T, alpha_ref: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(IsacError::DegenerateGeometry("path loss at zero range".into()));
    }
    Ok(alpha_ref / (d * d))
}

/// Radar reflection coefficient `ϱ / (2d)`.
pub fn reflection_coeff<T: Real>(d: T, varrho: Complex<T>) -> Result<Complex<T>> {
    if !(d > T::zero()) {
        return Err(IsacError::DegenerateGeometry("reflection at zero range".into()));
    }
    Ok(varrho / (lit::<T>(2.0) * d))
}

/// Per-RSU beamforming columns, one per vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSet<T: Real> {
    columns: [Vec<CVector<T>>; NUM_RSU],
}

impl<T: Real> BeamformingSet<T> {
    pub fn new(columns: [Vec<CVector<T>>; NUM_RSU]) -> Result<Self> {
        if columns[0].len() != columns[1].len() {
            return Err(IsacError::DimensionMismatch {
                what: "beam columns per RSU",
                expected: columns[0].len(),
                found: columns[1].len(),
            });
        }
        let n_t = columns.iter().flatten().map(|c| c.len()).next().unwrap_or(0);
        if let Some(bad) = columns.iter().flatten().find(|c| c.len() != n_t) {
            return Err(IsacError::DimensionMismatch {
                what: "beam length",
                expected: n_t,
                found: bad.len(),
            });
        }
        Ok(Self { columns })
    }

    /// All-zero beams.
    pub fn zeros(n_t: usize, k: usize) -> Self {
        Self {
            columns: std::array::from_fn(|_| vec![DVector::zeros(n_t); k]),
        }
    }

    /// Matched beams `f_[i,k] = a(φ_[i,k])`; `phis[k][i]`.
    pub fn matched(n_t: usize, phis: &[[T; NUM_RSU]]) -> Self {
        Self {
            columns: std::array::from_fn(|i| phis.iter().map(|p| steer_tx(p[i], n_t)).collect()),
        }
    }

    pub fn num_vehicles(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_t(&self) -> usize {
        self.columns.iter().flatten().map(|c| c.len()).next().unwrap_or(0)
    }

    pub fn column(&self, rsu: usize, k: usize) -> &CVector<T> {
        &self.columns[rsu][k]
    }

    pub fn column_mut(&mut self, rsu: usize, k: usize) -> &mut CVector<T> {
        &mut self.columns[rsu][k]
    }

    pub fn set_column(&mut self, rsu: usize, k: usize, f: CVector<T>) {
        self.columns[rsu][k] = f;
    }

    pub fn rsu_columns(&self, rsu: usize) -> &[CVector<T>] {
        &self.columns[rsu]
    }

    /// Largest squared column norm.
    pub fn max_norm2(&self) -> T {
        self.columns
            .iter()
            .flatten()
            .map(norm2)
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Vehicle→RSU association. `None` marks a vehicle not yet placed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    serving: Vec<Option<usize>>,
}

impl Assignment {
    pub fn from_serving(serving: Vec<usize>) -> Self {
        Self {
            serving: serving.into_iter().map(Some).collect(),
        }
    }

    /// No vehicle placed.
    pub fn unassigned(k: usize) -> Self {
        Self { serving: vec![None; k] }
    }

    pub fn num_vehicles(&self) -> usize {
        self.serving.len()
    }

    /// Indicator `ξ_[i,k]`.
    pub fn xi(&self, rsu: usize, k: usize) -> bool {
        self.serving[k] == Some(rsu)
    }

    pub fn serving(&self, k: usize) -> Option<usize> {
        self.serving[k]
    }

    pub fn set(&mut self, k: usize, rsu: Option<usize>) {
        self.serving[k] = rsu;
    }

    /// Moves vehicle `k` to the other RSU.
    pub fn flip(&mut self, k: usize) {
        if let Some(i) = self.serving[k] {
            self.serving[k] = Some(1 - i);
        }
    }

    /// Every vehicle served by exactly one RSU.
    pub fn is_complete(&self) -> bool {
        self.serving.iter().all(|s| matches!(s, Some(i) if *i < NUM_RSU))
    }

    pub fn served_by(&self, rsu: usize) -> impl Iterator<Item = usize> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == Some(rsu))
            .map(|(k, _)| k)
    }

    pub fn as_vec(&self) -> Vec<Option<usize>> {
        self.serving.clone()
    }
}

fn check_dims<T: Real>(
    states: &[[VehicleState<T>; NUM_RSU]],
    beams: &BeamformingSet<T>,
    xi: &Assignment,
) -> Result<()> {
    if beams.num_vehicles() != states.len() {
        return Err(IsacError::DimensionMismatch {
            what: "beam columns",
            expected: states.len(),
            found: beams.num_vehicles(),
        });
    }
    if xi.num_vehicles() != states.len() {
        return Err(IsacError::DimensionMismatch {
            what: "assignment",
            expected: states.len(),
            found: xi.num_vehicles(),
        });
    }
    Ok(())
}

/// Downlink SINR of vehicle `k` served by RSU `rsu`; zero when not served.
///
/// Interference sums the other beams of the same RSU as seen through vehicle
/// `k`'s own channel.
pub fn sinr<T: Real>(
    k: usize,
    rsu: usize,
    states: &[[VehicleState<T>; NUM_RSU]],
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    cfg: &RadioConfig<T>,
) -> Result<T> {
    check_dims(states, beams, xi)?;
    if !xi.xi(rsu, k) {
        return Ok(T::zero());
    }
    let link = &states[k][rsu];
    let gain = cfg.link_gain(link.d)?;
    let a = steer_tx(link.phi, cfg.n_t);
    let signal = gain * abs2(inner(&a, beams.column(rsu, k)));
    let mut interference = cfg.sigma_c2;
    for m in xi.served_by(rsu).filter(|&m| m != k) {
        interference += gain * abs2(inner(&a, beams.column(rsu, m)));
    }
    Ok(signal / interference)
}

/// Sum rate in bits/s/Hz, `Σ_i Σ_k log₂(1 + SINR)`.
pub fn sum_rate<T: Real>(
    states: &[[VehicleState<T>; NUM_RSU]],
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    cfg: &RadioConfig<T>,
) -> Result<T> {
    let mut total = T::zero();
    for k in 0..states.len() {
        for rsu in 0..NUM_RSU {
            total += (T::one() + sinr(k, rsu, states, beams, xi, cfg)?).log2();
        }
    }
    Ok(total)
}
