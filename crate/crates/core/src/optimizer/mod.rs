//! Joint vehicle assignment and beamforming.
//!
//! The sum rate is handled through its quadratic transform `f_q` (see
//! [`fp`]): alternating closed-form updates of the SINR surrogates `γ` and
//! the multipliers `y`, then projected gradient ascent on the beams
//! ([`pgd`]). [`assign`] wraps that inner loop in the assignment searches.

pub mod assign;
pub mod fp;
pub mod pgd;

use nalgebra::Complex;

use crate::error::Result;
use crate::kinematics::VehicleState;
use crate::radio::{steer_tx, Assignment, BeamformingSet, RadioConfig, NUM_RSU};
use crate::scalar::{lit, real, CVector, Real};
use crate::tracking::AngleSensitivity;

pub use assign::{
    assign_distance, assign_greedy, assign_heuristic, polish_assignment, solve, solve_distance, swap_gains, Solver,
};
pub use fp::{
    dual_lambda, eval_fq, fq_gradient, tight_auxiliaries, update_gamma, update_y, update_y_literal, zeta, zeta_all,
    LinkTable,
};
pub use pgd::{pgd_beams, restore_sensing, PgdOutcome};

/// Tuning knobs of the inner loop and the assignment search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions<T> {
    /// Relative change of `f_q` below which the FP loop stops.
    pub fp_tolerance: T,
    pub fp_max_iterations: usize,
    pub pgd_max_steps: usize,
    pub armijo_c: T,
    pub armijo_shrink: T,
    /// Swap budget per vehicle for the heuristic search.
    pub swaps_per_vehicle: usize,
    /// Minimum `f_q` gain for a swap to be kept (nats).
    pub min_swap_gain: T,
}

impl<T: Real> Default for OptimizerOptions<T> {
    fn default() -> Self {
        Self {
            fp_tolerance: lit(1e-6),
            fp_max_iterations: 50,
            pgd_max_steps: 200,
            armijo_c: lit(1e-4),
            armijo_shrink: lit(0.5),
            swaps_per_vehicle: 4,
            min_swap_gain: lit(1e-9),
        }
    }
}

/// One slot's optimization inputs: predicted link geometry, the derived
/// channels `h = κ'√α a(φ)` and the sensing thresholds `Λ`.
/// Sensitivity operator of a link with its top singular value and vector.
pub type SensingLink<T> = (AngleSensitivity<T>, T, CVector<T>);

#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub cfg: RadioConfig<T>,
    pub states: Vec<[VehicleState<T>; NUM_RSU]>,
    pub channels: Vec<[CVector<T>; NUM_RSU]>,
    pub lambdas: Vec<[T; NUM_RSU]>,
    sensing: Vec<[Option<SensingLink<T>>; NUM_RSU]>,
}

impl<T: Real> Problem<T> {
    /// Problem without sensing constraints (`Λ = 0` everywhere).
    pub fn new(states: Vec<[VehicleState<T>; NUM_RSU]>, cfg: RadioConfig<T>) -> Result<Self> {
        let channels = states
            .iter()
            .map(|pair| -> Result<[CVector<T>; NUM_RSU]> {
                let mk = |x: &VehicleState<T>| -> Result<CVector<T>> {
                    Ok(steer_tx(x.phi, cfg.n_t) * real(cfg.link_gain(x.d)?.sqrt()))
                };
                Ok([mk(&pair[0])?, mk(&pair[1])?])
            })
            .collect::<Result<Vec<_>>>()?;
        let k = states.len();
        Ok(Self {
            cfg,
            states,
            channels,
            lambdas: vec![[T::zero(); NUM_RSU]; k],
            sensing: vec![[None, None]; k],
        })
    }

    /// Attaches per-link sensing thresholds `Λ`.
    pub fn with_lambdas(mut self, lambdas: Vec<[T; NUM_RSU]>) -> Self {
        assert_eq!(lambdas.len(), self.states.len(), "one threshold pair per vehicle");
        self.sensing = self
            .states
            .iter()
            .zip(&lambdas)
            .map(|(pair, lam)| {
                std::array::from_fn(|i| {
                    (lam[i] > T::zero()).then(|| {
                        let op = AngleSensitivity::new(pair[i].phi, self.cfg.n_r, self.cfg.n_t);
                        let (top, v) = op.top_singular();
                        (op, top, v)
                    })
                })
            })
            .collect();
        self.lambdas = lambdas;
        self
    }

    pub fn num_vehicles(&self) -> usize {
        self.states.len()
    }

    /// Sensing operator, `Λ_max` and extremal beam for a constrained link.
    pub fn sensing(&self, rsu: usize, k: usize) -> Option<&SensingLink<T>> {
        self.sensing[k][rsu].as_ref()
    }

    /// Matched beams `f = a(φ)` on every column.
    pub fn matched_beams(&self) -> BeamformingSet<T> {
        let phis: Vec<[T; NUM_RSU]> = self.states.iter().map(|p| [p[0].phi, p[1].phi]).collect();
        BeamformingSet::matched(self.cfg.n_t, &phis)
    }
}

/// Auxiliary variables of the quadratic transform.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryState<T: Real> {
    pub gamma: Vec<[T; NUM_RSU]>,
    /// Quadratic-transform multipliers; complex so that the transform stays
    /// tight for any beam phase.
    pub y: Vec<[Complex<T>; NUM_RSU]>,
    /// Dual variables `1 / (1 + γ)`.
    pub lambda: Vec<[T; NUM_RSU]>,
}

/// Result of one assignment-and-beamforming solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T: Real> {
    pub assignment: Assignment,
    pub beams: BeamformingSet<T>,
    pub aux: AuxiliaryState<T>,
    /// `f_q` after each block update of every inner loop, in order.
    pub objective_trace: Vec<T>,
    pub zeta: Vec<[T; NUM_RSU]>,
    /// Final `Σ log₂(1 + SINR)`.
    pub sum_rate: T,
    pub fp_iterations: usize,
    pub swaps: usize,
    pub swap_budget_exhausted: bool,
    /// Links whose sensing threshold exceeded what any unit-norm beam attains.
    pub infeasible_sensing: Vec<(usize, usize)>,
}

impl<T: Real> SolveReport<T> {
    /// Checks the constraint families: one RSU per vehicle, unit-norm beams
    /// and the sensing bound on every served link not flagged infeasible.
    pub fn is_feasible(&self, problem: &Problem<T>) -> bool {
        let tol = lit::<T>(1e-6);
        if !self.assignment.is_complete() || self.beams.max_norm2() > T::one() + tol {
            return false;
        }
        (0..problem.num_vehicles()).all(|k| {
            let Some(i) = self.assignment.serving(k) else {
                return false;
            };
            if self.infeasible_sensing.contains(&(i, k)) {
                return true;
            }
            match problem.sensing(i, k) {
                Some((op, _, _)) => op.gain(self.beams.column(i, k)) >= problem.lambdas[k][i] * (T::one() - tol) - tol,
                None => true,
            }
        })
    }
}
