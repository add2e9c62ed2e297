//! Quadratic-transform pieces of the sum-rate objective.
//!
//! With `h_{ik} = κ'√α_{ik} a(φ_{ik})` and the served set `S_i` of RSU `i`,
//!
//! ```text
//! f_q = Σ_{i,k} ln(1+γ) − γ + 2 ξ Re(ȳ √(1+γ) h_{ik}ᴴ f_{ik}) − |y|² (Σ_{m∈S_i} |h_{ik}ᴴ f_{im}|² + σ_c²)
//! ```
//!
//! Natural logarithms are used inside the optimizer.

use nalgebra::Complex;

use super::{AuxiliaryState, Problem};
use crate::radio::{Assignment, BeamformingSet, NUM_RSU};
use crate::scalar::{abs2, inner, lit, real, CVector, Real};

/// Inner products `h_{ik}ᴴ f_{im}` for every vehicle pair and RSU.
#[derive(Debug, Clone)]
pub struct LinkTable<T: Real> {
    amp: Vec<[Vec<Complex<T>>; NUM_RSU]>,
}

impl<T: Real> LinkTable<T> {
    pub fn new(problem: &Problem<T>, beams: &BeamformingSet<T>) -> Self {
        let k = problem.num_vehicles();
        let amp = (0..k)
            .map(|v| {
                std::array::from_fn(|i| {
                    (0..k)
                        .map(|m| inner(&problem.channels[v][i], beams.column(i, m)))
                        .collect()
                })
            })
            .collect();
        Self { amp }
    }

    /// `h_{ik}ᴴ f_{im}`.
    pub fn amp(&self, rsu: usize, k: usize, m: usize) -> Complex<T> {
        self.amp[k][rsu][m]
    }

    /// `Σ_{m∈S_i} |h_{ik}ᴴ f_{im}|²`, optionally leaving out `skip`.
    pub fn received(&self, xi: &Assignment, rsu: usize, k: usize, skip: Option<usize>) -> T {
        xi.served_by(rsu)
            .filter(|&m| Some(m) != skip)
            .fold(T::zero(), |acc, m| acc + abs2(self.amp[k][rsu][m]))
    }
}

/// `γ*`: the SINR at the current beams and assignment.
pub fn update_gamma<T: Real>(problem: &Problem<T>, beams: &BeamformingSet<T>, xi: &Assignment) -> Vec<[T; NUM_RSU]> {
    gamma_from_table(problem, &LinkTable::new(problem, beams), xi)
}

pub(crate) fn gamma_from_table<T: Real>(
    problem: &Problem<T>,
    table: &LinkTable<T>,
    xi: &Assignment,
) -> Vec<[T; NUM_RSU]> {
    let s2 = problem.cfg.sigma_c2;
    (0..problem.num_vehicles())
        .map(|k| {
            std::array::from_fn(|i| {
                if xi.xi(i, k) {
                    abs2(table.amp(i, k, k)) / (s2 + table.received(xi, i, k, Some(k)))
                } else {
                    T::zero()
                }
            })
        })
        .collect()
}

/// `y*`, the exact maximizer of `f_q` in `y`:
/// `√(1+γ) h_{ik}ᴴ f_{ik} / (Σ_{m∈S_i} |h_{ik}ᴴ f_{im}|² + σ_c²)` for served links.
pub fn update_y<T: Real>(
    problem: &Problem<T>,
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
) -> Vec<[Complex<T>; NUM_RSU]> {
    y_from_table(problem, &LinkTable::new(problem, beams), xi, gamma)
}

pub(crate) fn y_from_table<T: Real>(
    problem: &Problem<T>,
    table: &LinkTable<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
) -> Vec<[Complex<T>; NUM_RSU]> {
    let s2 = problem.cfg.sigma_c2;
    (0..problem.num_vehicles())
        .map(|k| {
            std::array::from_fn(|i| {
                if xi.xi(i, k) {
                    let scale = (T::one() + gamma[k][i]).sqrt() / (s2 + table.received(xi, i, k, None));
                    table.amp(i, k, k) * scale
                } else {
                    real(T::zero())
                }
            })
        })
        .collect()
}

/// The multiplier in its literal closed form (sensing-side constants, no `√(1+γ)`),
/// kept for comparison with [`update_y`].
pub fn update_y_literal<T: Real>(
    problem: &Problem<T>,
    beams: &BeamformingSet<T>,
    xi: &Assignment,
) -> Vec<[T; NUM_RSU]> {
    let cfg = &problem.cfg;
    let kappa = cfg.kappa();
    let beta = |k: usize, i: usize| -> T { crate::scalar::cabs(cfg.varrho) / (lit::<T>(2.0) * problem.states[k][i].d) };
    (0..problem.num_vehicles())
        .map(|k| {
            std::array::from_fn(|i| {
                if !xi.xi(i, k) {
                    return T::zero();
                }
                let a = crate::radio::steer_tx(problem.states[k][i].phi, cfg.n_t);
                let num = kappa * beta(k, i) * crate::scalar::cabs(inner(&a, beams.column(i, k)));
                let den = xi.served_by(i).filter(|&m| m != k).fold(cfg.sigma_e2, |acc, m| {
                    acc + kappa * kappa * beta(m, i).powi(2) * abs2(inner(&a, beams.column(i, m)))
                });
                num / den
            })
        })
        .collect()
}

/// Per-link term `ζ_{ik}` of `f_q`.
pub fn zeta<T: Real>(
    problem: &Problem<T>,
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
    rsu: usize,
    k: usize,
) -> T {
    zeta_from_table(problem, &LinkTable::new(problem, beams), xi, gamma, y, rsu, k)
}

pub(crate) fn zeta_from_table<T: Real>(
    problem: &Problem<T>,
    table: &LinkTable<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
    rsu: usize,
    k: usize,
) -> T {
    let g = gamma[k][rsu];
    let yk = y[k][rsu];
    let mut z = (T::one() + g).ln() - g;
    if xi.xi(rsu, k) {
        z += lit::<T>(2.0) * (yk.conj() * table.amp(rsu, k, k)).re * (T::one() + g).sqrt();
    }
    z - abs2(yk) * (table.received(xi, rsu, k, None) + problem.cfg.sigma_c2)
}

/// All `ζ_{ik}`.
pub fn zeta_all<T: Real>(
    problem: &Problem<T>,
    table: &LinkTable<T>,
    xi: &Assignment,
    aux: &AuxiliaryState<T>,
) -> Vec<[T; NUM_RSU]> {
    (0..problem.num_vehicles())
        .map(|k| std::array::from_fn(|i| zeta_from_table(problem, table, xi, &aux.gamma, &aux.y, i, k)))
        .collect()
}

/// The transformed objective `f_q = Σ ζ`.
pub fn eval_fq<T: Real>(
    problem: &Problem<T>,
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
) -> T {
    fq_from_table(problem, &LinkTable::new(problem, beams), xi, gamma, y)
}

pub(crate) fn fq_from_table<T: Real>(
    problem: &Problem<T>,
    table: &LinkTable<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
) -> T {
    (0..problem.num_vehicles()).fold(T::zero(), |acc, k| {
        (0..NUM_RSU).fold(acc, |acc, i| acc + zeta_from_table(problem, table, xi, gamma, y, i, k))
    })
}

/// Dual variables `λ* = 1 / (1 + γ)`.
pub fn dual_lambda<T: Real>(gamma: &[[T; NUM_RSU]]) -> Vec<[T; NUM_RSU]> {
    gamma.iter().map(|g| g.map(|v| T::one() / (T::one() + v))).collect()
}

/// Tight auxiliaries (`γ*`, then `y*`) at the given beams.
pub fn tight_auxiliaries<T: Real>(problem: &Problem<T>, table: &LinkTable<T>, xi: &Assignment) -> AuxiliaryState<T> {
    let gamma = gamma_from_table(problem, table, xi);
    let y = y_from_table(problem, table, xi, &gamma);
    let lambda = dual_lambda(&gamma);
    AuxiliaryState { gamma, y, lambda }
}

/// Linear and quadratic coefficients of `f_q` in column `(i, m)`:
/// `f_q = 2 Re(bᴴ f) − fᴴ A f + const`.
pub(crate) fn column_terms<T: Real>(
    problem: &Problem<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
    rsu: usize,
    m: usize,
) -> CVector<T> {
    if !xi.xi(rsu, m) {
        return CVector::zeros(problem.cfg.n_t);
    }
    &problem.channels[m][rsu] * (y[m][rsu] * real((T::one() + gamma[m][rsu]).sqrt()))
}

/// `A_i = Σ_k |y_{ik}|² h_{ik} h_{ik}ᴴ`.
pub(crate) fn penalty_matrix<T: Real>(
    problem: &Problem<T>,
    y: &[[Complex<T>; NUM_RSU]],
    rsu: usize,
) -> nalgebra::DMatrix<Complex<T>> {
    let n = problem.cfg.n_t;
    let mut a = nalgebra::DMatrix::zeros(n, n);
    for (k, yk) in y.iter().enumerate() {
        let w = abs2(yk[rsu]);
        if w > T::zero() {
            let h = &problem.channels[k][rsu];
            a.ger(real(w), h, &h.conjugate(), real(T::one()));
        }
    }
    a
}

/// Gradient of `f_q` with respect to column `(rsu, m)`, packed as
/// `∂f_q/∂Re f + j ∂f_q/∂Im f = 2 (b − A f)`. Zero for unserved columns.
pub fn fq_gradient<T: Real>(
    problem: &Problem<T>,
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
    rsu: usize,
    m: usize,
) -> CVector<T> {
    if !xi.xi(rsu, m) {
        return CVector::zeros(problem.cfg.n_t);
    }
    let b = column_terms(problem, xi, gamma, y, rsu, m);
    let a = penalty_matrix(problem, y, rsu);
    (b - a * beams.column(rsu, m)) * real(lit::<T>(2.0))
}
