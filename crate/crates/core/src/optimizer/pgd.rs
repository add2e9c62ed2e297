//! Projected gradient ascent on the beam columns for fixed `γ`, `y`, `ξ`.
//!
//! For fixed auxiliaries `f_q` separates over columns into concave
//! quadratics `2 Re(bᴴ f) − fᴴ A f`, so every served column is optimized on
//! its own. Feasibility is the unit ball intersected with the exterior of
//! the ellipsoid `‖Π f‖² ≥ Λ`.

use nalgebra::{Complex, DMatrix};

use super::fp::{column_terms, penalty_matrix};
use super::{OptimizerOptions, Problem};
use crate::radio::{Assignment, BeamformingSet, NUM_RSU};
use crate::scalar::{inner, lit, norm2, real, CVector, Real};
use crate::tracking::AngleSensitivity;

#[derive(Debug, Clone, PartialEq)]
pub struct PgdOutcome<T: Real> {
    pub beams: BeamformingSet<T>,
    pub steps: usize,
    pub infeasible: Vec<(usize, usize)>,
}

fn project_ball<T: Real>(f: CVector<T>) -> CVector<T> {
    let n = norm2(&f);
    if n > T::one() {
        f / real(n.sqrt())
    } else {
        f
    }
}

/// Moves `f` (inside the unit ball) the least distance along the extremal
/// beam `v` needed for `‖Π f‖² ≥ λ`. Returns `None` when `λ` exceeds the
/// attainable maximum `top`.
pub fn restore_sensing<T: Real>(
    f: &CVector<T>,
    op: &AngleSensitivity<T>,
    top: T,
    v: &CVector<T>,
    lambda: T,
) -> Option<CVector<T>> {
    let current = op.gain(f);
    if current >= lambda {
        return Some(f.clone());
    }
    if lambda > top {
        return None;
    }
    // align v with Π f so the cross term is non-negative
    let pf = op.apply(f);
    let pv = op.apply(v);
    let cross = inner(&pv, &pf);
    let mag = crate::scalar::cabs(cross);
    let v = if mag > T::zero() {
        v * (cross / real(mag))
    } else {
        v.clone()
    };
    let c = mag;
    // top t² + 2 c t + current − λ = 0
    let disc = c * c - top * (current - lambda);
    let t = (-c + disc.max(T::zero()).sqrt()) / top;
    let candidate = f + &v * real(t);
    if norm2(&candidate) <= T::one() + lit::<T>(1e-12) {
        return Some(project_ball(candidate));
    }
    // walk the normalized path from f to v, which ends at the maximum
    let path = |s: T| -> CVector<T> {
        let g = f * real(T::one() - s) + &v * real(s);
        let n = norm2(&g).sqrt();
        if n > T::zero() {
            g / real(n)
        } else {
            v.clone()
        }
    };
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..80 {
        let mid = (lo + hi) * lit::<T>(0.5);
        if op.gain(&path(mid)) >= lambda {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(path(hi))
}

fn objective<T: Real>(f: &CVector<T>, b: &CVector<T>, a: &DMatrix<Complex<T>>) -> T {
    lit::<T>(2.0) * inner(b, f).re - inner(f, &(a * f)).re
}

/// Makes a column feasible, relaxing `Λ` to its attainable maximum when needed.
pub(crate) fn feasible_column<T: Real>(
    problem: &Problem<T>,
    rsu: usize,
    k: usize,
    f: &CVector<T>,
) -> (CVector<T>, bool) {
    let f = project_ball(f.clone());
    match problem.sensing(rsu, k) {
        None => (f, true),
        Some((op, top, v)) => {
            let lambda = problem.lambdas[k][rsu];
            match restore_sensing(&f, op, *top, v, lambda) {
                Some(g) => (g, true),
                None => (v.clone(), false),
            }
        }
    }
}

fn ascend_column<T: Real>(
    problem: &Problem<T>,
    rsu: usize,
    k: usize,
    f0: &CVector<T>,
    b: &CVector<T>,
    a: &DMatrix<Complex<T>>,
    opts: &OptimizerOptions<T>,
) -> (CVector<T>, usize, bool) {
    let (mut f, feasible) = feasible_column(problem, rsu, k, f0);
    if !feasible {
        return (f, 0, false);
    }
    let mut value = objective(&f, b, a);
    let mut steps = 0;
    for _ in 0..opts.pgd_max_steps {
        let g = b - a * &f;
        let gg = norm2(&g);
        if !(gg > T::zero()) {
            break;
        }
        let curv = inner(&g, &(a * &g)).re;
        // exact step for the unconstrained quadratic; unit move if flat
        let mut t = if curv > gg * lit(1e-300) {
            gg / curv
        } else {
            T::one() / gg.sqrt()
        };
        let mut accepted = None;
        for _ in 0..60 {
            let (cand, _) = feasible_column(problem, rsu, k, &(&f + &g * real(t)));
            let cand_value = objective(&cand, b, a);
            let predicted = lit::<T>(2.0) * inner(&g, &(&cand - &f)).re;
            if cand_value >= value && cand_value - value >= opts.armijo_c * predicted {
                accepted = Some((cand, cand_value));
                break;
            }
            t *= opts.armijo_shrink;
        }
        let Some((cand, cand_value)) = accepted else { break };
        let moved = norm2(&(&cand - &f));
        let gain = cand_value - value;
        f = cand;
        value = cand_value;
        steps += 1;
        if moved < lit(1e-24) || gain <= lit::<T>(1e-12) * value.abs() {
            break;
        }
    }
    (f, steps, true)
}

/// Optimizes every served column; unserved columns are left untouched.
pub fn pgd_beams<T: Real>(
    problem: &Problem<T>,
    beams: &BeamformingSet<T>,
    xi: &Assignment,
    gamma: &[[T; NUM_RSU]],
    y: &[[Complex<T>; NUM_RSU]],
    opts: &OptimizerOptions<T>,
) -> PgdOutcome<T> {
    let mut out = beams.clone();
    let mut steps = 0;
    let mut infeasible = Vec::new();
    for rsu in 0..NUM_RSU {
        let served: Vec<usize> = xi.served_by(rsu).collect();
        if served.is_empty() {
            continue;
        }
        let a = penalty_matrix(problem, y, rsu);
        for k in served {
            let b = column_terms(problem, xi, gamma, y, rsu, k);
            let (f, n, ok) = ascend_column(problem, rsu, k, beams.column(rsu, k), &b, &a, opts);
            if !ok {
                infeasible.push((rsu, k));
            }
            steps += n;
            out.set_column(rsu, k, f);
        }
    }
    PgdOutcome {
        beams: out,
        steps,
        infeasible,
    }
}
