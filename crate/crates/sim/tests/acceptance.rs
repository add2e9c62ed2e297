//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` fail with the shipped defaults; they are
//! still evaluated and printed at full strength, and the run fails if any
//! of them starts passing (so the list stays honest) or if any other
//! criterion fails.

use std::io::Write as _;
use std::time::Instant;

use isac_core::optimizer::{
    assign_heuristic, eval_fq, fq_gradient, polish_assignment, update_gamma, update_y, OptimizerOptions, Problem,
};
use isac_core::sensing::stack_jacobian;
use isac_core::tracking::{linearize, pcrb_step};
use isac_core::{
    cartesian_to_state, correct, evolve_state, expected_measurement, fisher_info, measurement_jacobian, sinr,
    state_jacobian, steer_rx, steer_tx, steering_derivative, synthesize_measurement, Assignment, BeamformingSet,
    CartesianPose, ProcessNoise, RadioConfig, TrackState, TrackingOptions, VehicleState,
};
use isac_sim::config::{Scenario, SolverChoice};
use isac_sim::experiment::{rcrb_evolution, stationary_rcrb, throughput_vs_antennas, throughput_vs_vehicles, DropRow};
use isac_sim::traffic::generate_traffic;
use nalgebra::{Complex, DVector, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const KNOWN_RED: &[&str] = &["throughput vs vehicles"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

const RSUS: [[f64; 2]; 2] = [[0.0, 30.0], [0.0, -30.0]];

fn random_pose(rng: &mut ChaCha8Rng) -> CartesianPose<f64> {
    let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    CartesianPose::new(
        Vector2::new(rng.random_range(-30.0..30.0), rng.random_range(-5.0..5.0)),
        rng.random_range(20.0..40.0),
        Vector2::new(dir, 0.0),
    )
}

fn random_geometry(rng: &mut ChaCha8Rng, k: usize) -> Vec<[VehicleState; 2]> {
    let mut out = Vec::new();
    while out.len() < k {
        let p = random_pose(rng);
        let s: [VehicleState; 2] = std::array::from_fn(|i| cartesian_to_state(&p, &Vector2::from(RSUS[i])).unwrap());
        if s.iter().all(|x| x.phi.abs() > 1e-3) {
            out.push(s);
        }
    }
    out
}

fn random_beams(rng: &mut ChaCha8Rng, n_t: usize, k: usize) -> BeamformingSet {
    let mut cols = || -> Vec<DVector<Complex<f64>>> {
        (0..k)
            .map(|_| {
                let v = DVector::from_fn(n_t, |_, _| {
                    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let scale = v.norm() / rng.random_range(0.3..1.0);
                v / Complex::new(scale, 0.0)
            })
            .collect()
    };
    let a = cols();
    BeamformingSet::new([a, cols()]).unwrap()
}

fn random_assignment(rng: &mut ChaCha8Rng, k: usize) -> Assignment {
    Assignment::from_serving((0..k).map(|_| rng.random_range(0..2)).collect())
}

fn col_err(fd: &[f64], an: &[f64]) -> f64 {
    let diff: f64 = fd.iter().zip(an).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = an.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

fn kinematics_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let (mut worst, mut n) = (0.0f64, 0);
    while n < 10_000 {
        let pose = random_pose(&mut rng);
        let rsu = Vector2::from(RSUS[rng.random_range(0..2)]);
        let x = cartesian_to_state(&pose, &rsu).unwrap();
        if x.phi.abs() < 1e-3 {
            continue;
        }
        let want = cartesian_to_state(&pose.advance(0.02), &rsu).unwrap();
        let got = evolve_state(&x, 0.02).unwrap();
        let speed_scale = 1e-3 * pose.speed;
        worst = worst
            .max((got.d - want.d).abs() / want.d)
            .max((got.phi - want.phi).abs() / want.phi.abs().max(1e-3))
            .max((got.vdot - want.vdot).abs() / want.vdot.abs().max(speed_scale));
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "kinematics oracle",
        worst < 1e-9 && secs < 1.0,
        format!("10000 states, max rel err {worst:.2e} (< 1e-9), {secs:.3} s (< 1 s)"),
    )
}

fn jacobian_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = [0.0f64; 4];

    // state transition
    let mut n = 0;
    while n < 1000 {
        let pose = random_pose(&mut rng);
        let x = cartesian_to_state(&pose, &Vector2::from(RSUS[0])).unwrap();
        if x.phi.abs() < 1e-2 {
            continue;
        }
        let g = state_jacobian(&x, 0.02).unwrap();
        let base = x.to_vector();
        for j in 0..3 {
            let h = 1e-6 * base[j].abs().max(1e-3);
            let eval = |s: f64| {
                let mut v = base;
                v[j] += s * h;
                evolve_state(&VehicleState::from_vector(&v), 0.02).unwrap().to_vector()
            };
            let fd = (eval(1.0) - eval(-1.0)) / (2.0 * h);
            worst[0] = worst[0].max(col_err(fd.as_slice(), g.column(j).clone_owned().as_slice()));
        }
        n += 1;
    }

    // measurement model, exact mode
    let cfg = RadioConfig::highway(8, 8);
    for _ in 0..1000 {
        let x = VehicleState::new(
            rng.random_range(-0.95..0.95),
            rng.random_range(31.0..60.0),
            rng.random_range(-30.0..30.0),
        );
        let f = steer_tx(x.phi + rng.random_range(-0.05..0.05), 8);
        let jac = stack_jacobian(&measurement_jacobian(&x, &f, &cfg, true).unwrap());
        let base = x.to_vector();
        for j in 0..3 {
            let h = 1e-6 * base[j].abs().max(1e-3);
            let eval = |s: f64| {
                let mut v = base;
                v[j] += s * h;
                expected_measurement(&VehicleState::from_vector(&v), &f, &cfg)
                    .unwrap()
                    .stacked()
            };
            let fd = (eval(1.0) - eval(-1.0)) / (2.0 * h);
            worst[1] = worst[1].max(col_err(fd.as_slice(), jac.column(j).clone_owned().as_slice()));
        }
    }

    // angle sensitivity Π = ∂(b aᴴ)/∂φ
    for _ in 0..1000 {
        let phi = rng.random_range(-0.95..0.95);
        let (n_r, n_t) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let h = 1e-6;
        let outer = |p: f64| steer_rx(p, n_r) * steer_tx(p, n_t).adjoint();
        let fd = (outer(phi + h) - outer(phi - h)) / Complex::new(2.0 * h, 0.0);
        let an = steering_derivative(phi, n_r, n_t);
        let err = (fd - &an).norm() / an.norm().max(f64::MIN_POSITIVE);
        // n_r = n_t = 1 has Π = 0
        if an.norm() > 0.0 {
            worst[2] = worst[2].max(err);
        }
    }

    // beam gradient of the transformed objective
    for _ in 0..1000 {
        let k = rng.random_range(1..=8);
        let n_t = [2usize, 4, 8, 16][rng.random_range(0..4)];
        let mut cfg = RadioConfig::highway(n_t, n_t);
        cfg.sigma_c2 = 1e-10;
        let p = Problem::new(random_geometry(&mut rng, k), cfg).unwrap();
        let f = random_beams(&mut rng, n_t, k);
        let xi = random_assignment(&mut rng, k);
        let g = update_gamma(&p, &f, &xi);
        let y = update_y(&p, &f, &xi, &g);
        let m = rng.random_range(0..k);
        let i = xi.serving(m).unwrap();
        let grad = fq_gradient(&p, &f, &xi, &g, &y, i, m);
        let h = 1e-6;
        let mut fd = Vec::with_capacity(2 * n_t);
        let mut an = Vec::with_capacity(2 * n_t);
        for q in 0..n_t {
            for unit in [Complex::new(h, 0.0), Complex::new(0.0, h)] {
                let eval = |s: f64| {
                    let mut f2 = f.clone();
                    f2.column_mut(i, m)[q] += unit * s;
                    eval_fq(&p, &f2, &xi, &g, &y)
                };
                fd.push((eval(1.0) - eval(-1.0)) / (2.0 * h));
                an.push(if unit.re != 0.0 { grad[q].re } else { grad[q].im });
            }
        }
        worst[3] = worst[3].max(col_err(&fd, &an));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "jacobian suite",
        worst.iter().all(|w| *w < 1e-4) && secs < 10.0,
        format!(
            "1000 points each, max rel err state {:.1e} measurement {:.1e} steering {:.1e} gradient {:.1e} (< 1e-4), {secs:.2} s (< 10 s)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn transform_tightness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut gap, mut drop) = (0.0f64, 0.0f64);
    for inst in 0..100 {
        let k = rng.random_range(1..=8);
        let n_t = [2usize, 4, 8, 16][rng.random_range(0..4)];
        let mut cfg = RadioConfig::highway(n_t, n_t);
        if inst % 2 == 1 {
            cfg.sigma_c2 = 1e-10;
        }
        let p = Problem::new(random_geometry(&mut rng, k), cfg).unwrap();
        let f = random_beams(&mut rng, n_t, k);
        let xi = random_assignment(&mut rng, k);
        let g = update_gamma(&p, &f, &xi);
        let y = update_y(&p, &f, &xi, &g);
        let fq = eval_fq(&p, &f, &xi, &g, &y);
        let rate: f64 = (0..k)
            .flat_map(|m| (0..2).map(move |i| (m, i)))
            .map(|(m, i)| (1.0 + sinr(m, i, &p.states, &f, &xi, &p.cfg).unwrap()).ln())
            .sum();
        gap = gap.max((fq - rate).abs());
        let r = polish_assignment(&p, &xi, &OptimizerOptions::default());
        for w in r.objective_trace.windows(2) {
            drop = drop.max(w[0] - w[1]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "transform tightness",
        gap < 1e-8 && drop <= 1e-9 && secs < 30.0,
        format!("100 instances, max |f_q - sum ln(1+SINR)| {gap:.1e} (< 1e-8), largest trace decrease {drop:.1e} (<= 1e-9), {secs:.2} s"),
    )
}

/// Largest shortfall of the heuristic against the best FP-polished
/// assignment, and how many of `count` geometries miss by more than 1e-6.
fn exhaustive_gap(seed: u64, count: usize, noise: Option<f64>) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = OptimizerOptions::default();
    let (mut worst, mut misses) = (f64::NEG_INFINITY, 0);
    for _ in 0..count {
        let k = rng.random_range(2..=4);
        let mut cfg = RadioConfig::highway(4, 4);
        if let Some(n) = noise {
            cfg.sigma_c2 = n;
        }
        let p = Problem::new(random_geometry(&mut rng, k), cfg).unwrap();
        let best = (0..1usize << k)
            .map(|mask| {
                let xi = Assignment::from_serving((0..k).map(|v| (mask >> v) & 1).collect());
                polish_assignment(&p, &xi, &opts).sum_rate
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = best - assign_heuristic(&p, &opts).sum_rate;
        worst = worst.max(gap);
        misses += usize::from(gap > 1e-6);
    }
    (worst, misses)
}

fn exhaustive_oracle() -> Outcome {
    let start = Instant::now();
    let (worst, misses) = exhaustive_gap(103, 30, None);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "exhaustive assignment oracle",
        misses == 0 && secs < 120.0,
        format!("30 geometries (K 2..4, n_t 4, default radio), {misses} short by > 1e-6, largest shortfall {worst:.1e}; {secs:.2} s"),
    )
}

/// Not a criterion: the same oracle with the noise floor lowered by 40 dB.
fn exhaustive_interference_limited() -> String {
    let (worst, misses) = exhaustive_gap(203, 30, Some(1e-11));
    format!("INFO exhaustive oracle at noise 1e-11 (interference-limited): {misses}/30 geometries short by > 1e-6, largest shortfall {worst:.2} bps/Hz")
}

fn pcrb_consistency() -> Outcome {
    let start = Instant::now();
    let cfg = RadioConfig::highway(16, 16);
    let x = VehicleState::new(0.6, 35.0, 18.0);
    let f = steer_tx(x.phi, 16);
    let m_hat = Matrix3::from_diagonal(&Vector3::new(1e-10, 1e-4, 1e-2));
    let opts = TrackingOptions {
        exact_jacobian: true,
        ..Default::default()
    };
    let (jac, noise) = linearize(&x, &f, &cfg, true).unwrap();
    let q = noise.stacked_variances(16);
    let bound = fisher_info(&m_hat, &jac, &q).unwrap().pcrb().unwrap()[(0, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let trials = 10_000;
    let mut mse = 0.0;
    let sd = m_hat.map(f64::sqrt);
    for _ in 0..trials {
        let mut t = TrackState::new(x, m_hat);
        let e: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        t.x_pred = VehicleState::new(
            x.phi + sd[(0, 0)] * e[0],
            x.d + sd[(1, 1)] * e[1],
            x.vdot + sd[(2, 2)] * e[2],
        );
        let y = synthesize_measurement(&x, &f, &cfg, Some(&mut rng)).unwrap();
        let c = correct(&t, &y, &f, &cfg, &opts).unwrap();
        mse += (c.track.x_meas.phi - x.phi).powi(2) / trials as f64;
    }
    let ratio = mse / bound;

    // bound recursion with the default (angle-only) echo Jacobian
    let (jac, noise) = linearize(&x, &f, &cfg, false).unwrap();
    let q = noise.stacked_variances(16);
    let g = state_jacobian(&x, 0.02).unwrap();
    let e = ProcessNoise::new(1e-9, 1e-4, 1e-2);
    let mut m = Matrix3::from_diagonal(&Vector3::new(1e-2, 1e-2, 1.0));
    let mut prev = f64::INFINITY;
    let mut converged = None;
    for step in 1..=200 {
        m = pcrb_step(&m, &g, Some(&e), &jac, &q).unwrap();
        if converged.is_none() && (m[(0, 0)] - prev).abs() <= 1e-10 * m[(0, 0)] {
            converged = Some(step);
        }
        prev = m[(0, 0)];
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "bound consistency",
        (0.8..=1.5).contains(&ratio) && converged.is_some() && secs < 60.0,
        format!(
            "angle MSE / bound {ratio:.3} over {trials} trials (in [0.8, 1.5]); recursion Cauchy-converged (rel 1e-10) at step {} (<= 200); {secs:.2} s",
            converged.map_or("never".to_string(), |s| s.to_string())
        ),
    )
}

fn beats(a: f64, b: f64) -> bool {
    a > b * (1.0 + 1e-9)
}

fn count_wins(rows: &[DropRow], k: usize, winner: SolverChoice, loser: SolverChoice) -> (usize, usize) {
    let reps: Vec<usize> = {
        let mut r: Vec<usize> = rows.iter().filter(|r| r.k == k).map(|r| r.rep).collect();
        r.sort();
        r.dedup();
        r
    };
    let get = |rep: usize, s: SolverChoice| {
        rows.iter()
            .find(|r| r.k == k && r.rep == rep && r.solver == s)
            .unwrap()
            .sum_rate
    };
    let wins = reps
        .iter()
        .filter(|&&rep| beats(get(rep, winner), get(rep, loser)))
        .count();
    (wins, reps.len())
}

fn throughput_vs_vehicles_trend() -> Outcome {
    let start = Instant::now();
    let mut s = Scenario::default();
    s.radio.n_t = 32;
    s.radio.n_r = 32;
    let solvers = [SolverChoice::Heuristic, SolverChoice::Greedy, SolverChoice::Distance];
    let rows = throughput_vs_vehicles(&s, &[5, 20, 50], 20, &solvers).unwrap();
    let (h20, n20) = count_wins(&rows, 20, SolverChoice::Heuristic, SolverChoice::Distance);
    let (h50, n50) = count_wins(&rows, 50, SolverChoice::Heuristic, SolverChoice::Distance);
    let (g5, n5) = count_wins(&rows, 5, SolverChoice::Distance, SolverChoice::Greedy);
    let secs = start.elapsed().as_secs_f64();
    let pass = h20 * 100 >= 95 * n20 && h50 * 100 >= 95 * n50 && 2 * g5 > n5 && secs < 600.0;
    outcome(
        "throughput vs vehicles",
        pass,
        format!(
            "n_t 32: heuristic > distance in {h20}/{n20} reps at K=20 and {h50}/{n50} at K=50 (need >= 95%); greedy < distance in {g5}/{n5} at K=5 (need majority); {secs:.1} s"
        ),
    )
}

fn throughput_vs_antennas_trend() -> Outcome {
    let start = Instant::now();
    let s = Scenario::default();
    let antennas = [16, 32, 64];
    let reps = 10;
    let rows = throughput_vs_antennas(&s, &antennas, 50, reps, &[SolverChoice::Heuristic]).unwrap();
    let mut ok = 0;
    let mut worst_step = f64::INFINITY;
    for rep in 0..reps {
        let rate = |n: usize| rows.iter().find(|r| r.rep == rep && r.n_t == n).unwrap().sum_rate;
        let seq: Vec<f64> = antennas.iter().map(|&n| rate(n)).collect();
        if seq.windows(2).all(|w| w[1] > w[0]) {
            ok += 1;
        }
        worst_step = seq.windows(2).map(|w| w[1] - w[0]).fold(worst_step, f64::min);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "throughput vs antennas",
        ok == reps && secs < 600.0,
        format!("K=50: sum rate strictly increasing over n_t 16/32/64 in {ok}/{reps} seeds, smallest step {worst_step:.3} bps/Hz; {secs:.1} s"),
    )
}

fn rcrb_trend() -> Outcome {
    let start = Instant::now();
    let s = Scenario {
        horizon: 50,
        ..Scenario::default()
    };
    let antennas = [16, 32, 64];
    let rows = rcrb_evolution(&s, &antennas, 10, 0.1);
    let stat: Vec<f64> = antennas
        .iter()
        .map(|&n| stationary_rcrb(&rows, n, 10).unwrap())
        .collect();
    let first: Vec<f64> = antennas
        .iter()
        .map(|&n| {
            rows.iter()
                .find(|r| r.n_t == n && r.slot == 1)
                .map_or(f64::NAN, |r| r.rcrb)
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = stat.iter().all(|v| *v < 0.02) && stat.windows(2).all(|w| w[1] < w[0]) && secs < 300.0;
    outcome(
        "range bound evolution",
        pass,
        format!(
            "start 0.1 m, after first echo {:.2e}/{:.2e}/{:.2e} m, stationary {:.3e}/{:.3e}/{:.3e} m for n_t 16/32/64 (< 0.02, strictly decreasing); {secs:.1} s",
            first[0], first[1], first[2], stat[0], stat[1], stat[2]
        ),
    )
}

fn littles_law() -> Outcome {
    let start = Instant::now();
    let s = Scenario::default();
    let (warm, slots) = (s.warmup_slots(), 10_000);
    let horizon = (warm + slots) as f64 * s.slot_s;
    let schedule = generate_traffic(&s.traffic, horizon, &mut ChaCha8Rng::seed_from_u64(105));
    let mut total = 0usize;
    for n in warm..warm + slots {
        let t = n as f64 * s.slot_s;
        total += schedule.iter().filter(|a| a.is_active(t, &s.traffic)).count();
    }
    let mean = total as f64 / slots as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "little's law",
        (mean - 20.0).abs() <= 2.0 && secs < 120.0,
        format!(
            "5 vehicles/s per direction, mean active {mean:.2} over {slots} slots after warmup (20 +/- 2); {secs:.1} s"
        ),
    )
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = d.path().to_str().unwrap().to_string();
        let code = isac_sim::cli::main_with_args(["isac", "run", "--horizon", "300", "--seed", "9", "--out", &out]);
        assert_eq!(code, 0);
    }
    let mut compared = Vec::new();
    let mut same = true;
    for name in ["results.csv", "slots.csv", "aggregate.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        same &= a == b && !a.is_empty();
        compared.push(format!("{name} {} B", a.len()));
    }
    outcome(
        "determinism",
        same,
        format!("two identical 300-slot runs, byte-identical: {}", compared.join(", ")),
    )
}

#[test]
fn acceptance() {
    let outcomes = [
        kinematics_oracle(),
        jacobian_suite(),
        transform_tightness(),
        exhaustive_oracle(),
        pcrb_consistency(),
        throughput_vs_vehicles_trend(),
        throughput_vs_antennas_trend(),
        rcrb_trend(),
        littles_law(),
        determinism(),
    ];
    let mut report = std::io::stderr().lock();
    writeln!(report).unwrap();
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_RED.contains(&o.name);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        writeln!(report, "{tag} {}: {}", o.name, o.detail).unwrap();
        if o.pass == known {
            unexpected.push(o.name);
        }
    }
    writeln!(report, "{}", exhaustive_interference_limited()).unwrap();
    assert!(
        unexpected.is_empty(),
        "criteria with unexpected outcome: {unexpected:?}"
    );
}
