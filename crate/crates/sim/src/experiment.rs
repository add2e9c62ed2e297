//! Sweeps over vehicle count, array size and the bound's time evolution.

use isac_core::optimizer::{solve, Problem};
use isac_core::radio::{sum_rate, NUM_RSU};
use isac_core::{cartesian_to_state, IsacError, VehicleState};
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Scenario, SolverChoice};
use crate::traffic::{place_vehicles, populate};
use crate::world::World;

/// Seed of replication `rep`.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// Sum rate of one snapshot of `k` vehicles for one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DropRow {
    pub k: usize,
    pub n_t: usize,
    pub rep: usize,
    pub seed: u64,
    pub solver: SolverChoice,
    pub sum_rate: f64,
}

impl DropRow {
    pub fn per_vehicle(&self) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            self.sum_rate / self.k as f64
        }
    }
}

/// Link states of `k` vehicles scattered over the road.
pub fn drop_geometry(scenario: &Scenario, k: usize, seed: u64) -> Vec<[VehicleState; NUM_RSU]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    populate(&scenario.traffic, k, &mut rng)
        .iter()
        .map(|a| {
            let pose = a.pose(0.0, &scenario.traffic);
            std::array::from_fn(|i| {
                cartesian_to_state(&pose, &Vector2::from(scenario.rsus[i])).expect("vehicle away from RSU")
            })
        })
        .collect()
}

/// Solves one snapshot with perfectly known states and no sensing
/// threshold, and scores the result on those states.
pub fn evaluate_drop(
    scenario: &Scenario,
    states: &[[VehicleState; NUM_RSU]],
    solver: SolverChoice,
) -> Result<f64, IsacError> {
    let core = solver
        .core()
        .ok_or_else(|| IsacError::Io("snapshot sweeps need a built-in solver".into()))?;
    if states.is_empty() {
        return Ok(0.0);
    }
    let cfg = scenario.radio_config();
    let problem = Problem::new(states.to_vec(), cfg.clone())?;
    let report = solve(core, &problem, &scenario.optimizer_options())?;
    sum_rate(states, &report.beams, &report.assignment, &cfg)
}

fn sweep(
    scenario: &Scenario,
    cells: Vec<(usize, usize, usize)>,
    solvers: &[SolverChoice],
) -> Result<Vec<DropRow>, IsacError> {
    let rows: Vec<Result<Vec<DropRow>, IsacError>> = cells
        .into_par_iter()
        .map(|(k, n_t, rep)| {
            let mut s = scenario.clone();
            s.radio.n_t = n_t;
            s.radio.n_r = n_t;
            let seed = replication_seed(scenario.seed, rep);
            let states = drop_geometry(&s, k, seed);
            solvers
                .iter()
                .map(|&solver| {
                    Ok(DropRow {
                        k,
                        n_t,
                        rep,
                        seed,
                        solver,
                        sum_rate: evaluate_drop(&s, &states, solver)?,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect())
}

/// Throughput against the number of vehicles at the scenario's array size.
/// Replication `r` uses the same geometry for every solver.
pub fn throughput_vs_vehicles(
    scenario: &Scenario,
    ks: &[usize],
    reps: usize,
    solvers: &[SolverChoice],
) -> Result<Vec<DropRow>, IsacError> {
    let n_t = scenario.radio.n_t;
    let cells = ks.iter().flat_map(|&k| (0..reps).map(move |r| (k, n_t, r))).collect();
    sweep(scenario, cells, solvers)
}

/// Throughput against the array size (`n_t = n_r`) for a fixed vehicle count.
/// Replication `r` uses the same geometry at every array size.
pub fn throughput_vs_antennas(
    scenario: &Scenario,
    antennas: &[usize],
    k: usize,
    reps: usize,
    solvers: &[SolverChoice],
) -> Result<Vec<DropRow>, IsacError> {
    let cells = antennas
        .iter()
        .flat_map(|&n| (0..reps).map(move |r| (k, n, r)))
        .collect();
    sweep(scenario, cells, solvers)
}

/// Mean bound of the served vehicles in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RcrbRow {
    pub n_t: usize,
    pub slot: u64,
    pub rcrb: f64,
}

/// Closed-loop bound evolution for a fixed group of `k` vehicles whose
/// tracks start with range standard deviation `initial_rcrb`. The group
/// stays on the road for the whole horizon.
pub fn rcrb_evolution(scenario: &Scenario, antennas: &[usize], k: usize, initial_rcrb: f64) -> Vec<RcrbRow> {
    let duration = scenario.horizon as f64 * scenario.slot_s;
    let road = &scenario.traffic;
    let reach = (road.speed_mean + 4.0 * road.speed_std) * duration;
    let span = (road.length() - reach).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let schedule: Vec<_> = place_vehicles(road, k, span.max(1e-9), &mut rng)
        .into_iter()
        .map(|mut a| {
            // keep everyone on the segment through the horizon
            a.speed = a.speed.min(reach / duration);
            a
        })
        .collect();
    antennas
        .par_iter()
        .map(|&n| {
            let mut s = scenario.clone();
            s.radio.n_t = n;
            s.radio.n_r = n;
            s.tracking.initial_variance[1] = initial_rcrb * initial_rcrb;
            s.traffic.rate_per_direction = 0.0;
            let mut world = World::with_schedule(s, schedule.clone());
            let mut rows = vec![RcrbRow {
                n_t: n,
                slot: 0,
                rcrb: initial_rcrb,
            }];
            for r in world.run() {
                if let Some(m) = r.mean_rcrb() {
                    rows.push(RcrbRow {
                        n_t: n,
                        slot: r.slot + 1,
                        rcrb: m,
                    });
                }
            }
            rows
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Mean of the last `tail` values of the bound for array size `n_t`.
pub fn stationary_rcrb(rows: &[RcrbRow], n_t: usize, tail: usize) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter(|r| r.n_t == n_t).map(|r| r.rcrb).collect();
    if v.is_empty() {
        return None;
    }
    let tail = tail.clamp(1, v.len());
    Some(v[v.len() - tail..].iter().sum::<f64>() / tail as f64)
}

/// Sample mean with a normal-approximation 95% interval half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            count: 0,
            mean: f64::NAN,
            std: f64::NAN,
            ci95: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary {
        count: n,
        mean,
        std,
        ci95: 1.96 * std / (n as f64).sqrt(),
    }
}

/// One aggregate line: a metric for one group and solver.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub metric: String,
    pub group: String,
    pub solver: String,
    pub summary: Summary,
}

/// Per-vehicle throughput of snapshot rows, grouped by `(k, n_t, solver)`.
pub fn aggregate_drops(rows: &[DropRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, usize, SolverChoice)> = rows.iter().map(|r| (r.k, r.n_t, r.solver)).collect();
    keys.sort_by_key(|(k, n, s)| (*k, *n, s.name()));
    keys.dedup();
    keys.into_iter()
        .map(|(k, n, s)| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.k == k && r.n_t == n && r.solver == s)
                .map(DropRow::per_vehicle)
                .collect();
            AggregateRow {
                metric: "per_vehicle_rate_bps_hz".into(),
                group: format!("k={k};n_t={n}"),
                solver: s.name().into(),
                summary: summarize(&values),
            }
        })
        .collect()
}
