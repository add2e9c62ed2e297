//! Fast invariant checks behind the `selftest` subcommand.

use isac_core::optimizer::{eval_fq, tight_auxiliaries, LinkTable, Problem};
use isac_core::radio::{Assignment, BeamformingSet};
use isac_core::{cartesian_to_state, evolve_state, RadioConfig};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Scenario;
use crate::experiment::drop_geometry;
use crate::output::results_csv;
use crate::traffic::populate;
use crate::world::World;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn kinematics() -> Check {
    let s = Scenario::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for a in populate(&s.traffic, 1000, &mut rng) {
        let rsu = Vector2::from(s.rsus[0]);
        let p = a.pose(0.0, &s.traffic);
        let x = cartesian_to_state(&p, &rsu).unwrap();
        if x.phi.abs() < 1e-3 {
            continue;
        }
        let want = cartesian_to_state(&a.pose(s.slot_s, &s.traffic), &rsu).unwrap();
        let got = evolve_state(&x, s.slot_s).unwrap();
        worst = worst.max((got.d - want.d).abs() / want.d);
    }
    Check {
        name: "kinematics",
        pass: worst < 1e-9,
        detail: format!("worst range error {worst:.2e}"),
    }
}

fn transform_tightness() -> Check {
    let s = Scenario::default();
    let cfg = RadioConfig::highway(8, 8);
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let states = drop_geometry(&s, 6, seed);
        let problem = Problem::new(states.clone(), cfg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = Assignment::from_serving((0..6).map(|_| rng.random_range(0..2)).collect());
        let phis: Vec<_> = states.iter().map(|p| [p[0].phi, p[1].phi]).collect();
        let beams = BeamformingSet::matched(cfg.n_t, &phis);
        let aux = tight_auxiliaries(&problem, &LinkTable::new(&problem, &beams), &xi);
        let fq = eval_fq(&problem, &beams, &xi, &aux.gamma, &aux.y);
        let rate = isac_core::sum_rate(&states, &beams, &xi, &cfg).unwrap() * std::f64::consts::LN_2;
        worst = worst.max((fq - rate).abs());
    }
    Check {
        name: "transform tightness",
        pass: worst < 1e-8,
        detail: format!("worst gap {worst:.2e}"),
    }
}

fn determinism() -> Check {
    let s = Scenario {
        horizon: 40,
        ..Scenario::default()
    };
    let a = results_csv(&World::new(s.clone()).run(), "heuristic", s.seed).unwrap();
    let b = results_csv(&World::new(s.clone()).run(), "heuristic", s.seed).unwrap();
    Check {
        name: "determinism",
        pass: a == b && !a.is_empty(),
        detail: format!("{} bytes", a.len()),
    }
}

pub fn run() -> Vec<Check> {
    vec![kinematics(), transform_tightness(), determinism()]
}
