//! Vehicle–RSU assignment searches around the FP inner loop.

use super::fp::{fq_from_table, tight_auxiliaries, zeta_all, LinkTable};
use super::pgd::{feasible_column, pgd_beams};
use super::{OptimizerOptions, Problem, SolveReport};
use crate::error::Result;
use crate::kinematics::VehicleState;
use crate::radio::{Assignment, BeamformingSet, NUM_RSU};
use crate::scalar::{abs2, lit, Real};

/// Assignment strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Heuristic,
    Greedy,
    Distance,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Heuristic => "heuristic",
            Solver::Greedy => "greedy",
            Solver::Distance => "distance",
        }
    }
}

/// Nearer RSU for every vehicle; ties go to the first RSU.
pub fn assign_distance<T: Real>(states: &[[VehicleState<T>; NUM_RSU]]) -> Assignment {
    Assignment::from_serving(states.iter().map(|p| usize::from(p[1].d < p[0].d)).collect())
}

/// Output of one FP inner loop.
#[derive(Debug, Clone)]
pub(crate) struct Polish<T: Real> {
    pub beams: BeamformingSet<T>,
    pub fq: T,
    pub trace: Vec<T>,
    pub iterations: usize,
    pub infeasible: Vec<(usize, usize)>,
}

/// Alternates `γ`, `y` and PGD updates until `f_q` settles. The returned
/// `fq` is evaluated at tight auxiliaries, so it equals `Σ ln(1 + SINR)`.
pub(crate) fn fp_polish<T: Real>(
    problem: &Problem<T>,
    xi: &Assignment,
    start: &BeamformingSet<T>,
    opts: &OptimizerOptions<T>,
) -> Polish<T> {
    let mut beams = start.clone();
    let mut infeasible = Vec::new();
    for k in 0..problem.num_vehicles() {
        if let Some(i) = xi.serving(k) {
            let (f, ok) = feasible_column(problem, i, k, beams.column(i, k));
            if !ok {
                infeasible.push((i, k));
            }
            beams.set_column(i, k, f);
        }
    }
    let mut trace = Vec::new();
    let mut last: Option<T> = None;
    let mut iterations = 0;
    let mut table = LinkTable::new(problem, &beams);
    for _ in 0..opts.fp_max_iterations {
        let aux = tight_auxiliaries(problem, &table, xi);
        let tight = fq_from_table(problem, &table, xi, &aux.gamma, &aux.y);
        trace.push(tight);
        if let Some(prev) = last {
            let scale = tight.abs().max(lit(1e-300));
            if (tight - prev).abs() <= opts.fp_tolerance * scale {
                break;
            }
        }
        last = Some(tight);
        iterations += 1;
        let step = pgd_beams(problem, &beams, xi, &aux.gamma, &aux.y, opts);
        for link in step.infeasible {
            if !infeasible.contains(&link) {
                infeasible.push(link);
            }
        }
        beams = step.beams;
        table = LinkTable::new(problem, &beams);
        trace.push(fq_from_table(problem, &table, xi, &aux.gamma, &aux.y));
    }
    let aux = tight_auxiliaries(problem, &table, xi);
    let fq = fq_from_table(problem, &table, xi, &aux.gamma, &aux.y);
    Polish {
        beams,
        fq,
        trace,
        iterations,
        infeasible,
    }
}

fn finish<T: Real>(
    problem: &Problem<T>,
    xi: Assignment,
    polish: Polish<T>,
    trace: Vec<T>,
    fp_iterations: usize,
    swaps: usize,
    swap_budget_exhausted: bool,
) -> SolveReport<T> {
    let table = LinkTable::new(problem, &polish.beams);
    let aux = tight_auxiliaries(problem, &table, &xi);
    let zeta = zeta_all(problem, &table, &xi, &aux);
    let sum_rate = aux
        .gamma
        .iter()
        .flat_map(|g| g.iter())
        .fold(T::zero(), |acc, g| acc + (T::one() + *g).log2());
    SolveReport {
        assignment: xi,
        beams: polish.beams,
        aux,
        objective_trace: trace,
        zeta,
        sum_rate,
        fp_iterations,
        swaps,
        swap_budget_exhausted,
        infeasible_sensing: polish.infeasible,
    }
}

/// FP-polished beams for a fixed assignment, from matched initial beams.
pub fn polish_assignment<T: Real>(problem: &Problem<T>, xi: &Assignment, opts: &OptimizerOptions<T>) -> SolveReport<T> {
    let polish = fp_polish(problem, xi, &problem.matched_beams(), opts);
    let trace = polish.trace.clone();
    let it = polish.iterations;
    finish(problem, xi.clone(), polish, trace, it, 0, false)
}

/// Distance-based matching with FP-optimized beams.
pub fn solve_distance<T: Real>(problem: &Problem<T>, opts: &OptimizerOptions<T>) -> SolveReport<T> {
    polish_assignment(problem, &assign_distance(&problem.states), opts)
}

/// Change of `Σ ln(1 + SINR)` if vehicle `k` alone switched RSU, with every
/// beam held fixed (the switching vehicle uses its column at the new RSU).
/// Counts the vehicle's own rate and the interference it adds or removes.
pub fn swap_gains<T: Real>(problem: &Problem<T>, beams: &BeamformingSet<T>, xi: &Assignment) -> Vec<T> {
    let table = LinkTable::new(problem, beams);
    let s2 = problem.cfg.sigma_c2;
    let rate = |sig: T, int: T| (T::one() + sig / int).ln();
    (0..problem.num_vehicles())
        .map(|k| {
            let Some(old) = xi.serving(k) else { return T::zero() };
            let new = 1 - old;
            let mut delta = T::zero();
            // own link
            delta -= rate(abs2(table.amp(old, k, k)), s2 + table.received(xi, old, k, Some(k)));
            delta += rate(abs2(table.amp(new, k, k)), s2 + table.received(xi, new, k, None));
            // others at the old RSU lose an interferer
            for m in xi.served_by(old).filter(|&m| m != k) {
                let sig = abs2(table.amp(old, m, m));
                let int = s2 + table.received(xi, old, m, Some(m));
                delta += rate(sig, int - abs2(table.amp(old, m, k))) - rate(sig, int);
            }
            // others at the new RSU gain one
            for m in xi.served_by(new) {
                let sig = abs2(table.amp(new, m, m));
                let int = s2 + table.received(xi, new, m, Some(m));
                delta += rate(sig, int + abs2(table.amp(new, m, k))) - rate(sig, int);
            }
            delta
        })
        .collect()
}

/// Swap search: start from the distance matching, repeatedly move the
/// vehicle with the largest positive swap gain, re-optimize the beams and
/// keep the move only if `f_q` rises by at least `min_swap_gain`.
pub fn assign_heuristic<T: Real>(problem: &Problem<T>, opts: &OptimizerOptions<T>) -> SolveReport<T> {
    let k_total = problem.num_vehicles();
    let mut xi = assign_distance(&problem.states);
    let mut polish = fp_polish(problem, &xi, &problem.matched_beams(), opts);
    let mut trace = polish.trace.clone();
    let mut fp_iterations = polish.iterations;
    let budget = opts.swaps_per_vehicle * k_total;
    let mut swaps = 0;
    let mut attempts = 0;
    let mut tabu = vec![false; k_total];
    let mut exhausted = false;
    loop {
        let gains = swap_gains(problem, &polish.beams, &xi);
        let best = (0..k_total)
            .filter(|&k| !tabu[k] && gains[k] > T::zero())
            .fold(None, |acc: Option<usize>, k| match acc {
                Some(b) if gains[b] >= gains[k] => Some(b),
                _ => Some(k),
            });
        let Some(k) = best else { break };
        if attempts >= budget {
            exhausted = true;
            log::warn!("swap budget of {budget} exhausted");
            break;
        }
        attempts += 1;
        let mut cand_xi = xi.clone();
        cand_xi.flip(k);
        let cand = fp_polish(problem, &cand_xi, &polish.beams, opts);
        fp_iterations += cand.iterations;
        if cand.fq >= polish.fq + opts.min_swap_gain {
            trace.extend_from_slice(&cand.trace);
            xi = cand_xi;
            polish = cand;
            swaps += 1;
            tabu.iter_mut().for_each(|t| *t = false);
        } else {
            tabu[k] = true;
        }
    }
    finish(problem, xi, polish, trace, fp_iterations, swaps, exhausted)
}

/// Sequential allocation: vehicles sorted by `|1/d₁ − 1/d₂|²` (largest
/// first); the first goes to its nearer RSU, each later one to the RSU with
/// the larger `ζ` after re-optimizing the beams of the vehicles placed so far.
pub fn assign_greedy<T: Real>(problem: &Problem<T>, opts: &OptimizerOptions<T>) -> SolveReport<T> {
    let k_total = problem.num_vehicles();
    let key = |k: usize| {
        let p = &problem.states[k];
        (T::one() / p[0].d - T::one() / p[1].d).powi(2)
    };
    let mut order: Vec<usize> = (0..k_total).collect();
    order.sort_by(|&a, &b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut xi = Assignment::unassigned(k_total);
    let mut beams = problem.matched_beams();
    let mut trace = Vec::new();
    let mut fp_iterations = 0;
    let mut last: Option<Polish<T>> = None;
    for (pos, &k) in order.iter().enumerate() {
        if pos == 0 {
            let p = &problem.states[k];
            xi.set(k, Some(usize::from(p[1].d < p[0].d)));
            let pol = fp_polish(problem, &xi, &beams, opts);
            fp_iterations += pol.iterations;
            trace.extend_from_slice(&pol.trace);
            beams = pol.beams.clone();
            last = Some(pol);
            continue;
        }
        let mut best: Option<(T, Assignment, Polish<T>)> = None;
        for rsu in 0..NUM_RSU {
            let mut cand_xi = xi.clone();
            cand_xi.set(k, Some(rsu));
            let mut start = beams.clone();
            start.set_column(rsu, k, problem.matched_beams().column(rsu, k).clone());
            let pol = fp_polish(problem, &cand_xi, &start, opts);
            fp_iterations += pol.iterations;
            let table = LinkTable::new(problem, &pol.beams);
            let aux = tight_auxiliaries(problem, &table, &cand_xi);
            let z = super::fp::zeta_from_table(problem, &table, &cand_xi, &aux.gamma, &aux.y, rsu, k);
            if best.as_ref().is_none_or(|(bz, _, _)| z > *bz) {
                best = Some((z, cand_xi, pol));
            }
        }
        let (_, chosen_xi, pol) = best.expect("two candidates evaluated");
        trace.extend_from_slice(&pol.trace);
        xi = chosen_xi;
        beams = pol.beams.clone();
        last = Some(pol);
    }
    let polish = last.unwrap_or_else(|| fp_polish(problem, &xi, &beams, opts));
    finish(problem, xi, polish, trace, fp_iterations, 0, false)
}

/// Runs the chosen solver.
pub fn solve<T: Real>(solver: Solver, problem: &Problem<T>, opts: &OptimizerOptions<T>) -> Result<SolveReport<T>> {
    Ok(match solver {
        Solver::Heuristic => assign_heuristic(problem, opts),
        Solver::Greedy => assign_greedy(problem, opts),
        Solver::Distance => solve_distance(problem, opts),
    })
}
