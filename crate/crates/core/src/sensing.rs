//! Post-matched-filter measurement model.
//!
//! The echo of a served vehicle is summarized by `y = [r̃, ν̃, μ̃]`: the
//! matched-filter output vector, a round-trip delay estimate and a Doppler
//! estimate. Their statistics follow the usual SNR-scaled error model, so
//! the waveform itself is never synthesized.
//!
//! The filter operates on a real-valued stacking of `y`,
//! `[Re r̃; Im r̃; ν̃; μ̃]`, with the circular noise of `r̃` split evenly
//! between the real and imaginary parts.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{IsacError, Result};
use crate::kinematics::VehicleState;
use crate::radio::{reflection_coeff, steer_derivative, steer_rx, steer_tx, RadioConfig};
use crate::scalar::{abs2, cabs, inner, lit, real, CVector, Real};

/// Smallest `|aᴴf|` for which the delay/Doppler variances are considered finite.
pub const BEAM_NULL_THRESHOLD: f64 = 1e-6;

/// Matched-filter output plus delay and Doppler estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T: Real> {
    pub r_tilde: CVector<T>,
    /// Round-trip delay (s).
    pub nu_tilde: T,
    /// Doppler shift (Hz).
    pub mu_tilde: T,
}

impl<T: Real> Measurement<T> {
    /// `[Re r̃; Im r̃; ν̃; μ̃]`.
    pub fn stacked(&self) -> DVector<T> {
        let n = self.r_tilde.len();
        DVector::from_fn(2 * n + 2, |row, _| match row {
            r if r < n => self.r_tilde[r].re,
            r if r < 2 * n => self.r_tilde[r - n].im,
            r if r == 2 * n => self.nu_tilde,
            _ => self.mu_tilde,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.nu_tilde.is_finite()
            && self.mu_tilde.is_finite()
            && self.r_tilde.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Measurement-noise variances of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise<T> {
    /// Per-entry variance of the circular noise on `r̃`.
    pub sigma_r2: T,
    pub sigma_nu2: T,
    pub sigma_mu2: T,
    pub rho_r: T,
    pub rho_nu: T,
    pub rho_mu: T,
}

impl<T: Real> MeasurementNoise<T> {
    /// Diagonal of `Q = diag(σ_r² 1_{n_r}, σ_ν², σ_μ²)`.
    pub fn q_diagonal(&self, n_r: usize) -> DVector<T> {
        DVector::from_fn(n_r + 2, |row, _| match row {
            r if r < n_r => self.sigma_r2,
            r if r == n_r => self.sigma_nu2,
            _ => self.sigma_mu2,
        })
    }

    /// Diagonal of the covariance of [`Measurement::stacked`].
    pub fn stacked_variances(&self, n_r: usize) -> DVector<T> {
        let half = self.sigma_r2 / lit(2.0);
        DVector::from_fn(2 * n_r + 2, |row, _| match row {
            r if r < 2 * n_r => half,
            r if r == 2 * n_r => self.sigma_nu2,
            _ => self.sigma_mu2,
        })
    }

    pub fn is_positive(&self) -> bool {
        self.sigma_r2 > T::zero() && self.sigma_nu2 > T::zero() && self.sigma_mu2 > T::zero()
    }
}

/// Beamforming gain factor `η = aᴴ(φ) f`.
pub fn beam_gain<T: Real>(x: &VehicleState<T>, f: &CVector<T>) -> Complex<T> {
    inner(&steer_tx(x.phi, f.len()), f)
}

fn variances_for_gain<T: Real>(d: T, eta2: T, cfg: &RadioConfig<T>) -> Result<MeasurementNoise<T>> {
    let beta = reflection_coeff(d, cfg.varrho)?;
    let kappa2 = lit::<T>((cfg.n_t * cfg.n_r) as f64);
    let snr = cfg.g_mf * kappa2 * abs2(beta) * eta2;
    Ok(MeasurementNoise {
        sigma_r2: cfg.rho_r * cfg.rho_r * cfg.sigma_e2 / cfg.g_mf,
        sigma_nu2: cfg.rho_nu * cfg.rho_nu * cfg.sigma_e2 / snr,
        sigma_mu2: cfg.rho_mu * cfg.rho_mu * cfg.sigma_e2 / snr,
        rho_r: cfg.rho_r,
        rho_nu: cfg.rho_nu,
        rho_mu: cfg.rho_mu,
    })
}

/// Noise variances of the link when vehicle `x` is illuminated with beam `f`.
pub fn noise_variances<T: Real>(
    x: &VehicleState<T>,
    f: &CVector<T>,
    cfg: &RadioConfig<T>,
) -> Result<MeasurementNoise<T>> {
    let eta = cabs(beam_gain(x, f));
    if !(eta >= lit(BEAM_NULL_THRESHOLD)) {
        return Err(IsacError::BeamNull {
            gain: crate::scalar::to_f64(eta),
        });
    }
    variances_for_gain(x.d, eta * eta, cfg)
}

/// Noise variances assuming a unit beamforming gain, `|η| = 1`.
pub fn nominal_noise<T: Real>(x: &VehicleState<T>, cfg: &RadioConfig<T>) -> Result<MeasurementNoise<T>> {
    variances_for_gain(x.d, T::one(), cfg)
}

/// Noiseless measurement `h(x)` for beam `f`.
pub fn expected_measurement<T: Real>(
    x: &VehicleState<T>,
    f: &CVector<T>,
    cfg: &RadioConfig<T>,
) -> Result<Measurement<T>> {
    let beta = reflection_coeff(x.d, cfg.varrho)?;
    let scale = beta * real(cfg.kappa() * cfg.g_mf) * beam_gain(x, f);
    let two = lit::<T>(2.0);
    Ok(Measurement {
        r_tilde: steer_rx(x.phi, cfg.n_r) * scale,
        nu_tilde: two * x.d / cfg.c,
        mu_tilde: two * x.vdot * cfg.f_c / cfg.c,
    })
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    lit(z)
}

/// Draws one noisy measurement of `x_true`; `rng = None` gives the noiseless one.
pub fn synthesize_measurement<T: Real, R: Rng + ?Sized>(
    x_true: &VehicleState<T>,
    f: &CVector<T>,
    cfg: &RadioConfig<T>,
    rng: Option<&mut R>,
) -> Result<Measurement<T>> {
    let noise = noise_variances(x_true, f, cfg)?;
    let mut y = expected_measurement(x_true, f, cfg)?;
    if let Some(rng) = rng {
        let sd_r = (noise.sigma_r2 / lit(2.0)).sqrt();
        for z in y.r_tilde.iter_mut() {
            let re: T = gaussian(rng);
            let im: T = gaussian(rng);
            *z += Complex::new(re * sd_r, im * sd_r);
        }
        let e_nu: T = gaussian(rng);
        let e_mu: T = gaussian(rng);
        y.nu_tilde += e_nu * noise.sigma_nu2.sqrt();
        y.mu_tilde += e_mu * noise.sigma_mu2.sqrt();
    }
    Ok(y)
}

/// Complex Jacobian `∂h/∂x`, `(n_r + 2) × 3`.
///
/// With `exact = false` the `r̃` rows carry only the angle derivative; with
/// `exact = true` the range dependence of the reflection coefficient is
/// included as well.
pub fn measurement_jacobian<T: Real>(
    x: &VehicleState<T>,
    f: &CVector<T>,
    cfg: &RadioConfig<T>,
    exact: bool,
) -> Result<DMatrix<Complex<T>>> {
    let n_r = cfg.n_r;
    let beta = reflection_coeff(x.d, cfg.varrho)?;
    let amp = beta * real(cfg.kappa() * cfg.g_mf);
    let a = steer_tx(x.phi, f.len());
    let da = steer_derivative(x.phi, f.len());
    let b = steer_rx(x.phi, n_r);
    let db = steer_derivative(x.phi, n_r);
    let eta = inner(&a, f);
    let deta = inner(&da, f);

    let mut j = DMatrix::from_element(n_r + 2, 3, real(T::zero()));
    for p in 0..n_r {
        j[(p, 0)] = amp * (db[p] * eta + b[p] * deta);
        if exact {
            j[(p, 1)] = -amp / real(x.d) * b[p] * eta;
        }
    }
    let two = lit::<T>(2.0);
    j[(n_r, 1)] = real(two / cfg.c);
    j[(n_r + 1, 2)] = real(two * cfg.f_c / cfg.c);
    Ok(j)
}

/// Real stacking of a complex measurement Jacobian, matching [`Measurement::stacked`].
pub fn stack_jacobian<T: Real>(j: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let n_r = j.nrows() - 2;
    DMatrix::from_fn(2 * n_r + 2, j.ncols(), |row, col| match row {
        r if r < n_r => j[(r, col)].re,
        r if r < 2 * n_r => j[(r - n_r, col)].im,
        r => j[(r - n_r, col)].re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> RadioConfig<f64> {
        RadioConfig::highway(16, 8)
    }

    #[test]
    fn r_variance_from_defaults() {
        let x = VehicleState::new(0.4, 30.0, 12.0);
        let f = steer_tx(0.4, 16);
        let q = noise_variances(&x, &f, &cfg()).unwrap();
        assert_relative_eq!(q.sigma_r2, 1e-8, max_relative = 1e-12);
    }

    #[test]
    fn delay_variance_scales_with_range_squared() {
        let f = steer_tx(0.4, 16);
        let near = noise_variances(&VehicleState::new(0.4, 20.0, 12.0), &f, &cfg()).unwrap();
        let far = noise_variances(&VehicleState::new(0.4, 40.0, 12.0), &f, &cfg()).unwrap();
        assert_relative_eq!(far.sigma_nu2 / near.sigma_nu2, 4.0, max_relative = 1e-12);
        assert_relative_eq!(far.sigma_mu2 / near.sigma_mu2, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn null_beam_rejected() {
        let x = VehicleState::new(0.4, 30.0, 12.0);
        let f = CVector::<f64>::zeros(16);
        assert!(matches!(
            noise_variances(&x, &f, &cfg()),
            Err(IsacError::BeamNull { .. })
        ));
    }

    #[test]
    fn means_of_delay_and_doppler() {
        let x = VehicleState::new(0.5, 150.0, 30.0);
        let y = expected_measurement(&x, &steer_tx(0.5, 16), &cfg()).unwrap();
        assert_relative_eq!(y.nu_tilde, 1e-6, max_relative = 1e-12);
        assert_relative_eq!(y.mu_tilde, 6000.0, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_synthesis_matches_expected() {
        let x = VehicleState::new(-0.2, 33.0, -6.0);
        let f = steer_tx(-0.2, 16);
        let y = synthesize_measurement::<f64, ChaCha8Rng>(&x, &f, &cfg(), None).unwrap();
        assert_eq!(y, expected_measurement(&x, &f, &cfg()).unwrap());
    }

    #[test]
    fn phase_rotation_of_beam_rotates_echo() {
        let x = VehicleState::new(0.3, 25.0, 9.0);
        let f = steer_tx(0.31, 16);
        let rot = Complex::from_polar(1.0, 0.7);
        let y0 = expected_measurement(&x, &f, &cfg()).unwrap();
        let y1 = expected_measurement(&x, &(f.clone() * rot), &cfg()).unwrap();
        for (a, b) in y0.r_tilde.iter().zip(y1.r_tilde.iter()) {
            assert_relative_eq!((a * rot - b).norm(), 0.0, epsilon = 1e-12);
        }
        assert_eq!(y0.nu_tilde, y1.nu_tilde);
        assert_eq!(y0.mu_tilde, y1.mu_tilde);
    }

    #[test]
    fn delay_and_doppler_rows() {
        let x = VehicleState::new(0.3, 25.0, 9.0);
        let j = measurement_jacobian(&x, &steer_tx(0.3, 16), &cfg(), false).unwrap();
        assert_relative_eq!(j[(8, 1)].re, 2.0 / 3e8, max_relative = 1e-12);
        assert_eq!(j[(8, 0)].re, 0.0);
        assert_eq!(j[(8, 2)].re, 0.0);
        assert_relative_eq!(j[(9, 2)].re, 200.0, max_relative = 1e-12);
        assert_eq!(j[(9, 1)].re, 0.0);
        // default form: no range column in the echo rows
        assert!((0..8).all(|p| j[(p, 1)].norm() == 0.0));
    }

    #[test]
    fn stacking_layout() {
        let y = Measurement {
            r_tilde: CVector::from_vec(vec![Complex::new(1.0, 2.0), Complex::new(3.0, 4.0)]),
            nu_tilde: 5.0,
            mu_tilde: 6.0,
        };
        assert_eq!(y.stacked().as_slice(), &[1.0, 3.0, 2.0, 4.0, 5.0, 6.0]);
        let n = MeasurementNoise {
            sigma_r2: 2.0,
            sigma_nu2: 3.0,
            sigma_mu2: 4.0,
            rho_r: 1.0,
            rho_nu: 1.0,
            rho_mu: 1.0,
        };
        assert_eq!(n.stacked_variances(2).as_slice(), &[1.0, 1.0, 1.0, 1.0, 3.0, 4.0]);
        assert_eq!(n.q_diagonal(2).as_slice(), &[2.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn noisy_draws_are_seed_deterministic() {
        let x = VehicleState::new(0.3, 25.0, 9.0);
        let f = steer_tx(0.3, 16);
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let a = synthesize_measurement(&x, &f, &cfg(), Some(&mut r1)).unwrap();
        let b = synthesize_measurement(&x, &f, &cfg(), Some(&mut r2)).unwrap();
        assert_eq!(a, b);
    }
}
