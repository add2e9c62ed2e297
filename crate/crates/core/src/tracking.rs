//! Extended Kalman filter, posterior Cramér–Rao bound and the angle-accuracy
//! threshold that feeds the beamforming optimizer.
//!
//! Measurement Jacobians are used in their real-stacked form (see
//! [`crate::sensing`]): `J` is `(2 n_r + 2) × 3` and `Q` is diagonal. The gain
//! is `K = M̂ Jᵀ (Q + J M̂ Jᵀ)⁻¹`, evaluated in information form, and the
//! Fisher information is `Jᵀ Q⁻¹ J + M̂⁻¹`.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};

use crate::error::{IsacError, Result};
use crate::kinematics::{evolve_state, state_jacobian, ProcessNoise, VehicleState};
use crate::radio::{reflection_coeff, steer_derivative, steer_rx, steer_tx, RadioConfig};
use crate::scalar::{abs2, inner, lit, norm2, real, CVector, Real};
use crate::sensing::{
    expected_measurement, measurement_jacobian, noise_variances, nominal_noise, stack_jacobian, Measurement,
    MeasurementNoise,
};

/// How the correction step forms its gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// Textbook EKF gain from the propagated covariance.
    #[default]
    Standard,
    /// Gain from the empirical prediction-error covariance implied by the
    /// echo residual, falling back to [`GainMode::Standard`] when that
    /// estimate is not positive semidefinite.
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingOptions<T> {
    pub gain_mode: GainMode,
    /// Include the range dependence of the reflection coefficient in `∂r̃/∂d`.
    pub exact_jacobian: bool,
    /// Use `G M̃ Gᵀ` (no process noise) as the prior in the bound recursion.
    pub pcrb_no_process_noise: bool,
    /// Forgetting factor of the residual second-moment average.
    pub innovation_forgetting: T,
}

impl<T: Real> Default for TrackingOptions<T> {
    fn default() -> Self {
        Self {
            gain_mode: GainMode::Standard,
            exact_jacobian: false,
            pcrb_no_process_noise: false,
            innovation_forgetting: lit(0.9),
        }
    }
}

/// Filter state of one (vehicle, RSU) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState<T: Real> {
    pub x_pred: VehicleState<T>,
    pub x_meas: VehicleState<T>,
    pub m_pred: Matrix3<T>,
    pub m_meas: Matrix3<T>,
    /// `G M̃ₙ₋₁ Gᵀ` from the latest prediction.
    pub m_pred_noiseless: Matrix3<T>,
    pub slot: u64,
    /// Number of measurement updates absorbed so far.
    pub corrections: u32,
    /// Running second moment of the projected echo residual.
    pub innovation_moment: Option<Matrix3<T>>,
}

impl<T: Real> TrackState<T> {
    /// Track initialized from a state fix with covariance `m0`.
    pub fn new(x0: VehicleState<T>, m0: Matrix3<T>) -> Self {
        Self {
            x_pred: x0,
            x_meas: x0,
            m_pred: m0,
            m_meas: m0,
            m_pred_noiseless: m0,
            slot: 0,
            corrections: 0,
            innovation_moment: None,
        }
    }

    /// Carries the prediction over as the estimate when no echo is available.
    pub fn coast(&self) -> Self {
        Self {
            x_meas: self.x_pred,
            m_meas: self.m_pred,
            ..self.clone()
        }
    }
}

/// Posterior Fisher information of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherInfo<T: Real>(pub Matrix3<T>);

impl<T: Real> FisherInfo<T> {
    /// The bound, `FisherInfo⁻¹`.
    pub fn pcrb(&self) -> Result<Matrix3<T>> {
        spd_inverse(&self.0).ok_or(IsacError::SingularPrior)
    }
}

/// Gain together with the covariance it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct GainResult<T: Real> {
    pub gain: DMatrix<T>,
    pub posterior: Matrix3<T>,
    /// `true` when the residual gain was rejected and the standard gain used.
    pub fallback: bool,
}

/// Outcome of one correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction<T: Real> {
    pub track: TrackState<T>,
    pub fallback: bool,
    pub residual: DVector<T>,
}

fn symmetrize<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

fn spd_inverse<T: Real>(m: &Matrix3<T>) -> Option<Matrix3<T>> {
    let d = Vector3::from_fn(|i, _| {
        let v = m[(i, i)];
        if v > T::zero() {
            T::one() / v.sqrt()
        } else {
            T::zero()
        }
    });
    if d.iter().any(|v| *v == T::zero()) {
        return None;
    }
    // Jacobi scaling keeps mixed-unit matrices well conditioned.
    let scaled = Matrix3::from_fn(|i, j| m[(i, j)] * d[i] * d[j]);
    let inv = Cholesky::new(symmetrize(&scaled))?.inverse();
    let out = Matrix3::from_fn(|i, j| inv[(i, j)] * d[i] * d[j]);
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Symmetrizes `m` and, if it is not positive definite, clips its spectrum
/// to a floor relative to the largest eigenvalue.
pub fn sanitize_covariance<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let sym = symmetrize(m);
    if Cholesky::new(sym).is_some() {
        return sym;
    }
    let eig = SymmetricEigen::new(sym);
    let top = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |a, &b| if b > a { b } else { a });
    let floor = top * lit(1e-14);
    let vals = eig.eigenvalues.map(|v| if v > floor { v } else { floor });
    symmetrize(&(eig.eigenvectors * Matrix3::from_diagonal(&vals) * eig.eigenvectors.transpose()))
}

/// Time update: `x̂ = g(x̃)`, `M̂ = G M̃ Gᵀ + E`.
pub fn predict<T: Real>(track: &TrackState<T>, slot: T, noise: &ProcessNoise<T>) -> Result<TrackState<T>> {
    let g = state_jacobian(&track.x_meas, slot)?;
    let x_pred = evolve_state(&track.x_meas, slot)?;
    let propagated = symmetrize(&(g * track.m_meas * g.transpose()));
    Ok(TrackState {
        x_pred,
        m_pred: sanitize_covariance(&(propagated + noise.matrix())),
        m_pred_noiseless: propagated,
        slot: track.slot + 1,
        ..track.clone()
    })
}

/// `Jᵀ Q⁻¹ J` for a stacked Jacobian and diagonal `Q`.
pub fn measurement_information<T: Real>(jac: &DMatrix<T>, q_diag: &DVector<T>) -> Result<Matrix3<T>> {
    if jac.ncols() != 3 || jac.nrows() != q_diag.len() {
        return Err(IsacError::DimensionMismatch {
            what: "measurement Jacobian rows",
            expected: q_diag.len(),
            found: jac.nrows(),
        });
    }
    let mut info = Matrix3::zeros();
    for r in 0..jac.nrows() {
        let w = T::one() / q_diag[r];
        for i in 0..3 {
            for j in 0..3 {
                info[(i, j)] += jac[(r, i)] * w * jac[(r, j)];
            }
        }
    }
    Ok(info)
}

fn gain_from_covariance<T: Real>(prior: &Matrix3<T>, jac: &DMatrix<T>, q_diag: &DVector<T>) -> Result<GainResult<T>> {
    let info = measurement_information(jac, q_diag)?;
    let posterior = match spd_inverse(prior) {
        Some(prior_inv) => spd_inverse(&(prior_inv + info)).ok_or(IsacError::SingularInnovation)?,
        None => {
            // singular prior: M = L Lᵀ, posterior = L (I + Lᵀ F L)⁻¹ Lᵀ
            let eig = SymmetricEigen::new(symmetrize(prior));
            if eig
                .eigenvalues
                .iter()
                .any(|v| *v < -lit::<T>(1e-12) * prior.trace().abs())
            {
                return Err(IsacError::SingularInnovation);
            }
            let root = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|v| v.max(T::zero()).sqrt()));
            let inner = Matrix3::identity() + root.transpose() * info * root;
            let inv = Cholesky::new(symmetrize(&inner))
                .ok_or(IsacError::SingularInnovation)?
                .inverse();
            symmetrize(&(root * inv * root.transpose()))
        }
    };
    let weighted = DMatrix::from_fn(jac.nrows(), 3, |r, c| jac[(r, c)] / q_diag[r]);
    let p = DMatrix::from_fn(3, 3, |i, j| posterior[(i, j)]);
    let gain = p * weighted.transpose();
    if gain.iter().any(|v| !v.is_finite()) {
        return Err(IsacError::SingularInnovation);
    }
    Ok(GainResult {
        gain,
        posterior,
        fallback: false,
    })
}

/// Standard EKF gain `M̂ Jᵀ (Q + J M̂ Jᵀ)⁻¹`.
pub fn standard_gain<T: Real>(m_pred: &Matrix3<T>, jac: &DMatrix<T>, q_diag: &DVector<T>) -> Result<GainResult<T>> {
    gain_from_covariance(m_pred, jac, q_diag)
}

/// Left inverse `(JᵀJ)⁻¹ Jᵀ`.
pub fn left_inverse<T: Real>(jac: &DMatrix<T>) -> Result<DMatrix<T>> {
    let scale: Vec<T> = (0..jac.ncols())
        .map(|c| {
            let n = jac.column(c).norm();
            if n > T::zero() {
                T::one() / n
            } else {
                T::zero()
            }
        })
        .collect();
    if scale.iter().any(|s| *s == T::zero()) {
        return Err(IsacError::SingularInnovation);
    }
    let js = DMatrix::from_fn(jac.nrows(), jac.ncols(), |r, c| jac[(r, c)] * scale[c]);
    let gram = js.transpose() * &js;
    let inv = gram.cholesky().ok_or(IsacError::SingularInnovation)?.inverse();
    let left = inv * js.transpose();
    Ok(DMatrix::from_fn(left.nrows(), left.ncols(), |r, c| {
        left[(r, c)] * scale[r]
    }))
}

/// Empirical prediction-error covariance `H_L⁻¹ (S − Q) H_L⁻ᵀ` from a
/// residual second moment projected onto the state space,
/// `moment ≈ E[u uᵀ]` with `u = H_L⁻¹ e`.
pub fn empirical_prior<T: Real>(left: &DMatrix<T>, q_diag: &DVector<T>, moment: &Matrix3<T>) -> Matrix3<T> {
    let mut projected_q = Matrix3::zeros();
    for r in 0..left.ncols() {
        for i in 0..3 {
            for j in 0..3 {
                projected_q[(i, j)] += left[(i, r)] * q_diag[r] * left[(j, r)];
            }
        }
    }
    symmetrize(&(moment - projected_q))
}

fn outer3<T: Real>(u: &Vector3<T>) -> Matrix3<T> {
    u * u.transpose()
}

fn project3<T: Real>(left: &DMatrix<T>, e: &DVector<T>) -> Vector3<T> {
    let u = left * e;
    Vector3::new(u[0], u[1], u[2])
}

/// Gain built from a residual second moment; standard gain as fallback.
pub fn residual_gain_from_moment<T: Real>(
    m_pred: &Matrix3<T>,
    jac: &DMatrix<T>,
    q_diag: &DVector<T>,
    moment: &Matrix3<T>,
) -> Result<GainResult<T>> {
    let left = left_inverse(jac)?;
    let m_emp = empirical_prior(&left, q_diag, moment);
    let tol = lit::<T>(1e-12) * q_diag.iter().fold(T::zero(), |a, b| a + *b);
    let eig = SymmetricEigen::new(m_emp);
    let indefinite = eig.eigenvalues.iter().any(|v| *v < -tol || !v.is_finite());
    if !indefinite {
        if let Ok(mut g) = gain_from_covariance(&m_emp, jac, q_diag) {
            // M̃ = K Q H_L⁻ᵀ
            let kq = DMatrix::from_fn(3, jac.nrows(), |i, r| g.gain[(i, r)] * q_diag[r]);
            let m = kq * left.transpose();
            g.posterior = Matrix3::from_fn(|i, j| m[(i, j)]);
            return Ok(g);
        }
    }
    log::debug!("residual gain rejected, using standard gain");
    let mut g = standard_gain(m_pred, jac, q_diag)?;
    g.fallback = true;
    Ok(g)
}

/// Gain from a single echo residual `e`, i.e. with `S = e eᵀ`.
pub fn residual_gain<T: Real>(
    m_pred: &Matrix3<T>,
    jac: &DMatrix<T>,
    q_diag: &DVector<T>,
    e: &DVector<T>,
) -> Result<GainResult<T>> {
    let left = left_inverse(jac)?;
    let u = project3(&left, e);
    residual_gain_from_moment(m_pred, jac, q_diag, &outer3(&u))
}

/// Stacked Jacobian and noise diagonal of the link at the predicted state.
pub fn linearize<T: Real>(
    x: &VehicleState<T>,
    f: &CVector<T>,
    cfg: &RadioConfig<T>,
    exact: bool,
) -> Result<(DMatrix<T>, MeasurementNoise<T>)> {
    let noise = noise_variances(x, f, cfg)?;
    let jac = stack_jacobian(&measurement_jacobian(x, f, cfg, exact)?);
    Ok((jac, noise))
}

/// Measurement update with the echo `y` received through beam `f`.
pub fn correct<T: Real>(
    track: &TrackState<T>,
    y: &Measurement<T>,
    f: &CVector<T>,
    cfg: &RadioConfig<T>,
    opts: &TrackingOptions<T>,
) -> Result<Correction<T>> {
    let (jac, noise) = linearize(&track.x_pred, f, cfg, opts.exact_jacobian)?;
    let q = noise.stacked_variances(cfg.n_r);
    let e = y.stacked() - expected_measurement(&track.x_pred, f, cfg)?.stacked();

    let mut moment = track.innovation_moment;
    let g = match opts.gain_mode {
        GainMode::Standard => standard_gain(&track.m_pred, &jac, &q)?,
        GainMode::Residual => {
            let u = project3(&left_inverse(&jac)?, &e);
            let lam = opts.innovation_forgetting;
            let m = match moment {
                Some(prev) => prev * lam + outer3(&u) * (T::one() - lam),
                None => outer3(&u),
            };
            moment = Some(m);
            residual_gain_from_moment(&track.m_pred, &jac, &q, &m)?
        }
    };

    let dx = &g.gain * &e;
    let x_meas = VehicleState::new(
        track.x_pred.phi + dx[0],
        track.x_pred.d + dx[1],
        track.x_pred.vdot + dx[2],
    );
    Ok(Correction {
        track: TrackState {
            x_meas,
            m_meas: sanitize_covariance(&g.posterior),
            corrections: track.corrections + 1,
            innovation_moment: moment,
            ..track.clone()
        },
        fallback: g.fallback,
        residual: e,
    })
}

/// Posterior Fisher information `Jᵀ Q⁻¹ J + M̂⁻¹`.
pub fn fisher_info<T: Real>(m_pred: &Matrix3<T>, jac: &DMatrix<T>, q_diag: &DVector<T>) -> Result<FisherInfo<T>> {
    let prior_inv = spd_inverse(m_pred).ok_or(IsacError::SingularPrior)?;
    Ok(FisherInfo(symmetrize(
        &(measurement_information(jac, q_diag)? + prior_inv),
    )))
}

/// One step of the bound recursion `M̃ₙ = (Jᵀ Q⁻¹ J + (G M̃ₙ₋₁ Gᵀ + E)⁻¹)⁻¹`.
pub fn pcrb_step<T: Real>(
    m_prev: &Matrix3<T>,
    transition: &Matrix3<T>,
    process: Option<&ProcessNoise<T>>,
    jac: &DMatrix<T>,
    q_diag: &DVector<T>,
) -> Result<Matrix3<T>> {
    let mut prior = transition * m_prev * transition.transpose();
    if let Some(e) = process {
        prior += e.matrix();
    }
    fisher_info(&symmetrize(&prior), jac, q_diag)?.pcrb()
}

/// Angle derivative of the two-way array response, `Π = ∂(b(φ) aᴴ(φ))/∂φ`.
pub fn steering_derivative<T: Real>(phi: T, n_r: usize, n_t: usize) -> DMatrix<Complex<T>> {
    let op = AngleSensitivity::new(phi, n_r, n_t);
    DMatrix::from_fn(n_r, n_t, |p, q| op.db[p] * op.a[q].conj() + op.b[p] * op.da[q].conj())
}

/// Rank-two factorization of `Π = ∂b aᴴ + b ∂aᴴ` for fast evaluation of
/// `‖Π f‖²` and of its top right-singular pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSensitivity<T: Real> {
    pub a: CVector<T>,
    pub da: CVector<T>,
    pub b: CVector<T>,
    pub db: CVector<T>,
}

impl<T: Real> AngleSensitivity<T> {
    pub fn new(phi: T, n_r: usize, n_t: usize) -> Self {
        Self {
            a: steer_tx(phi, n_t),
            da: steer_derivative(phi, n_t),
            b: steer_rx(phi, n_r),
            db: steer_derivative(phi, n_r),
        }
    }

    /// `Π f`.
    pub fn apply(&self, f: &CVector<T>) -> CVector<T> {
        &self.db * inner(&self.a, f) + &self.b * inner(&self.da, f)
    }

    /// `‖Π f‖²`.
    pub fn gain(&self, f: &CVector<T>) -> T {
        norm2(&self.apply(f))
    }

    /// Largest squared singular value of `Π` and its unit right-singular vector.
    pub fn top_singular(&self) -> (T, CVector<T>) {
        // Π = P Uᴴ with P = [∂b, b], U = [a, ∂a]; with UᴴU = L Lᴴ the nonzero
        // spectrum of ΠᴴΠ is that of Lᴴ (PᴴP) L.
        let w = Matrix2::new(
            real(norm2(&self.a)),
            inner(&self.a, &self.da),
            inner(&self.da, &self.a),
            real(norm2(&self.da)),
        );
        let p = Matrix2::new(
            real(norm2(&self.db)),
            inner(&self.db, &self.b),
            inner(&self.b, &self.db),
            real(norm2(&self.b)),
        );
        let det = w[(0, 0)].re * w[(1, 1)].re - abs2(w[(0, 1)]);
        let well_posed = det > lit::<T>(1e-12) * w[(0, 0)].re * w[(1, 1)].re;
        let (lambda, coeffs) = match Cholesky::new(w).filter(|_| well_posed) {
            Some(ch) => {
                let l = ch.l();
                let c = l.adjoint() * p * l;
                let (lam, e) = top_hermitian_2x2(&c);
                let linv_h = l.adjoint().try_inverse().unwrap_or_else(Matrix2::identity);
                (lam, linv_h * e)
            }
            // n_t = 1: ∂a = 0 and Π = ∂b aᴴ
            None => (
                norm2(&self.db) * norm2(&self.a),
                Vector2::new(real(T::one()), real(T::zero())),
            ),
        };
        let mut v = &self.a * coeffs[0] + &self.da * coeffs[1];
        let n = norm2(&v).sqrt();
        if n > T::zero() {
            v /= real(n);
        }
        (lambda, v)
    }
}

fn top_hermitian_2x2<T: Real>(m: &Matrix2<Complex<T>>) -> (T, Vector2<Complex<T>>) {
    let p = m[(0, 0)].re;
    let r = m[(1, 1)].re;
    let q = m[(0, 1)];
    let half = lit::<T>(0.5);
    let lam = (p + r) * half + (((p - r) * half).powi(2) + abs2(q)).sqrt();
    let v = if abs2(q) > T::zero() {
        Vector2::new(q, real(lam - p))
    } else if p >= r {
        Vector2::new(real(T::one()), real(T::zero()))
    } else {
        Vector2::new(real(T::zero()), real(T::one()))
    };
    let n = (abs2(v[0]) + abs2(v[1])).sqrt();
    (lam, v / real(n))
}

/// Fisher weight of `‖Π f‖²` in the angle entry: the echo rows contribute
/// `scale · ‖Π f‖²` to `(Jᵀ Q⁻¹ J)₁₁`.
pub fn angle_information_scale<T: Real>(
    x: &VehicleState<T>,
    noise: &MeasurementNoise<T>,
    cfg: &RadioConfig<T>,
) -> Result<T> {
    let beta = reflection_coeff(x.d, cfg.varrho)?;
    let kappa2 = lit::<T>((cfg.n_t * cfg.n_r) as f64);
    Ok(lit::<T>(2.0) * kappa2 * abs2(beta) * cfg.g_mf * cfg.g_mf / noise.sigma_r2)
}

/// Smallest `(Ω)₁₁` keeping the angle bound at or below `prev_m11`, given the
/// rest of `Ω`; solves `det Ω / cof₁₁ ≥ 1 / prev_m11` for `ω₁₁`.
pub fn required_angle_information<T: Real>(omega: &Matrix3<T>, prev_m11: T) -> T {
    let w = |i: usize, j: usize| omega[(i - 1, j - 1)];
    let a = w(2, 2) * w(3, 3) - w(2, 3) * w(3, 2);
    let b = w(2, 1) * w(3, 3) - w(2, 3) * w(3, 1);
    let d = w(2, 1) * w(3, 2) - w(2, 2) * w(3, 1);
    let inv_prev = if prev_m11.is_finite() { a / prev_m11 } else { T::zero() };
    (inv_prev + w(1, 2) * b - w(1, 3) * d) / a
}

/// `Λ` from the non-echo part of `Ω` (`Ω` with `‖Π f‖² = 0`), the echo weight
/// and the previous angle bound. Clamped at zero.
pub fn lambda_from_information<T: Real>(omega_base: &Matrix3<T>, scale: T, prev_m11: T) -> T {
    let needed = required_angle_information(omega_base, prev_m11) - omega_base[(0, 0)];
    let lambda = needed / scale;
    if lambda > T::zero() {
        lambda
    } else {
        T::zero()
    }
}

/// `Λ` in its literal closed form: the `ω₁₃` cofactor term enters with a plus
/// sign, the prior enters through `m̂₁₁ = (M̂)₁₁` and the echo weight is
/// `κ²|β|²G²/σ_r²`. Kept for comparison with [`lambda_from_information`].
pub fn lambda_literal<T: Real>(omega: &Matrix3<T>, m_hat11: T, literal_scale: T, prev_m11: T) -> T {
    let w = |i: usize, j: usize| omega[(i - 1, j - 1)];
    let a = w(2, 2) * w(3, 3) - w(2, 3) * w(3, 2);
    let b = w(2, 1) * w(3, 3) - w(2, 3) * w(3, 1);
    let d = w(2, 1) * w(3, 2) - w(2, 2) * w(3, 1);
    ((w(1, 2) * b + w(1, 3) * d + a / prev_m11) / a - m_hat11) / literal_scale
}

/// Prior used by the bound recursion for this track.
pub fn bound_prior<T: Real>(track: &TrackState<T>, opts: &TrackingOptions<T>) -> Matrix3<T> {
    if opts.pcrb_no_process_noise {
        track.m_pred_noiseless
    } else {
        track.m_pred
    }
}

/// Delay and Doppler rows of the stacked Jacobian with their variances.
pub fn ranging_rows<T: Real>(cfg: &RadioConfig<T>, noise: &MeasurementNoise<T>) -> (DMatrix<T>, DVector<T>) {
    let two = lit::<T>(2.0);
    let mut jac = DMatrix::zeros(2, 3);
    jac[(0, 1)] = two / cfg.c;
    jac[(1, 2)] = two * cfg.f_c / cfg.c;
    (jac, DVector::from_vec(vec![noise.sigma_nu2, noise.sigma_mu2]))
}

/// Sensing threshold `Λ` for a served track: any beam with `‖Π f‖² ≥ Λ`
/// keeps the angle bound from growing. Zero before the first correction.
pub fn lambda_threshold<T: Real>(track: &TrackState<T>, cfg: &RadioConfig<T>, opts: &TrackingOptions<T>) -> Result<T> {
    if track.corrections == 0 {
        return Ok(T::zero());
    }
    let noise = nominal_noise(&track.x_pred, cfg)?;
    let (jac, q) = ranging_rows(cfg, &noise);
    let prior_inv = spd_inverse(&bound_prior(track, opts)).ok_or(IsacError::SingularPrior)?;
    let omega_base = measurement_information(&jac, &q)? + prior_inv;
    let scale = angle_information_scale(&track.x_pred, &noise, cfg)?;
    Ok(lambda_from_information(&omega_base, scale, track.m_meas[(0, 0)]))
}
