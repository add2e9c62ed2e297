//! The closed sense → decide → act loop, one slot at a time.

use std::collections::BTreeMap;

use isac_core::exchange::BeamBlock;
use isac_core::optimizer::{assign_distance, solve, OptimizerOptions, Problem};
use isac_core::radio::{sinr, Assignment, NUM_RSU};
use isac_core::{
    cartesian_to_state, correct, lambda_threshold, predict, synthesize_measurement, BeamformingSet, CVector, IsacError,
    Measurement, ProcessNoise, RadioConfig, TrackState, TrackingOptions, VehicleState,
};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::Scenario;
use crate::traffic::{generate_traffic, Arrival};

/// Outcome for one active vehicle in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleResult {
    pub id: u64,
    /// Along-road coordinate of the true position (m).
    pub position_x: f64,
    pub rsu: Option<usize>,
    pub sinr: f64,
    pub rate: f64,
    /// Square root of the range entry of the serving track's covariance (m).
    pub rcrb: f64,
    /// Absolute error of the serving track's range estimate (m).
    pub range_err: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotResult {
    pub slot: u64,
    /// Vehicles ordered by along-road position.
    pub vehicles: Vec<VehicleResult>,
    pub sum_rate: f64,
    pub fp_iterations: usize,
    pub swaps: usize,
    /// Corrections that fell back to the standard gain.
    pub gain_fallbacks: usize,
    /// Links whose sensing threshold no unit-norm beam can meet.
    pub infeasible_links: usize,
    /// Served vehicles whose beam missed them, so no echo was usable.
    pub missed_echoes: usize,
    /// Tracks re-seeded from a fresh fix.
    pub track_resets: usize,
    /// Set when the solver failed and the slot ran on the fallback policy.
    pub solver_error: Option<String>,
}

impl SlotResult {
    pub fn active_ids(&self) -> Vec<u64> {
        self.vehicles.iter().map(|v| v.id).collect()
    }

    pub fn served(&self) -> impl Iterator<Item = &VehicleResult> {
        self.vehicles.iter().filter(|v| v.rsu.is_some())
    }

    pub fn mean_rcrb(&self) -> Option<f64> {
        let (n, s) = self.served().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v.rcrb));
        (n > 0).then(|| s / n as f64)
    }
}

/// Trainer record for one vehicle in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub slot: u64,
    /// Position rank within the slot.
    pub k: usize,
    /// `Re r̃, Im r̃, Re f_prev, Im f_prev, ν̃, μ̃` from the previous slot.
    pub features: Vec<f64>,
    /// `Re f, Im f` of the chosen beam followed by the serving RSU index.
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone)]
struct VehicleSim {
    arrival: Arrival,
    tracks: [TrackState; NUM_RSU],
    speed_hint: f64,
    last_echo: Option<Measurement>,
    last_beam: Option<CVector>,
}

/// Ground truth plus the digital twin's tracks for every active vehicle.
pub struct World {
    scenario: Scenario,
    cfg: RadioConfig,
    tracking: TrackingOptions<f64>,
    noise: ProcessNoise<f64>,
    optimizer: OptimizerOptions<f64>,
    schedule: Vec<Arrival>,
    next_arrival: usize,
    active: Vec<VehicleSim>,
    slot: u64,
    measurement_rng: ChaCha8Rng,
    fix_rng: ChaCha8Rng,
    external: Option<BTreeMap<u64, BeamBlock<f64>>>,
    dataset: Option<Vec<DatasetRecord>>,
    beam_log: Option<Vec<BeamBlock<f64>>>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl World {
    /// World driven by Poisson traffic drawn from the scenario seed.
    pub fn new(scenario: Scenario) -> Self {
        let duration = scenario.horizon as f64 * scenario.slot_s;
        let schedule = generate_traffic(&scenario.traffic, duration, &mut stream(scenario.seed, 0));
        Self::with_schedule(scenario, schedule)
    }

    /// World with a prescribed arrival schedule.
    pub fn with_schedule(scenario: Scenario, mut schedule: Vec<Arrival>) -> Self {
        schedule.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.id.cmp(&b.id)));
        Self {
            cfg: scenario.radio_config(),
            tracking: scenario.tracking_options(),
            noise: scenario.process_noise(),
            optimizer: scenario.optimizer_options(),
            measurement_rng: stream(scenario.seed, 1),
            fix_rng: stream(scenario.seed, 2),
            scenario,
            schedule,
            next_arrival: 0,
            active: Vec::new(),
            slot: 0,
            external: None,
            dataset: None,
            beam_log: None,
        }
    }

    /// Supplies the beam blocks used by the external solver.
    pub fn set_external_beams(&mut self, blocks: Vec<BeamBlock<f64>>) {
        self.external = Some(blocks.into_iter().map(|b| (b.slot, b)).collect());
    }

    pub fn record_dataset(&mut self) {
        self.dataset = Some(Vec::new());
    }

    pub fn take_dataset(&mut self) -> Vec<DatasetRecord> {
        self.dataset.take().unwrap_or_default()
    }

    /// Keeps the serving beams of every slot in exchange form.
    pub fn record_beams(&mut self) {
        self.beam_log = Some(Vec::new());
    }

    pub fn take_beams(&mut self) -> Vec<BeamBlock<f64>> {
        self.beam_log.take().unwrap_or_default()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    fn rsu(&self, i: usize) -> Vector2<f64> {
        Vector2::from(self.scenario.rsus[i])
    }

    fn truth(&self, v: &Arrival, t: f64) -> [VehicleState; NUM_RSU] {
        let pose = v.pose(t, &self.scenario.traffic);
        std::array::from_fn(|i| {
            cartesian_to_state(&pose, &self.rsu(i)).expect("vehicles stay on the carriageway, away from the RSUs")
        })
    }

    fn fix(&mut self, truth: &VehicleState, speed: f64) -> VehicleState {
        let [sp, sd, sv] = self.scenario.tracking.fix_std;
        let mut g = || -> f64 { self.fix_rng.sample(StandardNormal) };
        let mut phi = (truth.phi + sp * g()).clamp(-1.0, 1.0);
        if phi == 0.0 {
            phi = f64::EPSILON;
        }
        let d = (truth.d + sd * g()).max(1e-3);
        let vdot = speed * phi + sv * g();
        VehicleState::new(phi, d, vdot)
    }

    fn seed_track(&mut self, truth: &VehicleState, speed: f64) -> TrackState {
        let x = self.fix(truth, speed);
        let mut t = TrackState::new(x, self.scenario.initial_covariance());
        t.slot = self.slot;
        t
    }

    /// Keeps an estimate on the admissible set. Returns `false` if the track
    /// must be re-seeded.
    fn repair(&self, track: &mut TrackState, hint: &mut f64) -> bool {
        let x = &mut track.x_meas;
        if !(x.phi.is_finite() && x.d.is_finite() && x.vdot.is_finite()) || x.d <= 0.0 || x.phi == 0.0 {
            return false;
        }
        x.phi = x.phi.clamp(-1.0, 1.0);
        let traffic = &self.scenario.traffic;
        let speed = x.vdot / x.phi;
        let plausible = 0.5 * traffic.speed_min.max(1.0)..=3.0 * traffic.speed_mean;
        if speed.is_finite() && plausible.contains(&speed) {
            *hint = speed;
        } else {
            x.vdot = x.phi * *hint;
        }
        x.vdot != 0.0
    }

    /// Advances the world by one slot.
    #[allow(clippy::needless_range_loop)]
    pub fn run_slot(&mut self) -> SlotResult {
        let t = self.slot as f64 * self.scenario.slot_s;
        let road = self.scenario.traffic.clone();
        let mut result = SlotResult {
            slot: self.slot,
            ..Default::default()
        };

        // ground truth: departures, then predictions for vehicles already tracked
        self.active.retain(|v| v.arrival.is_active(t, &road));
        for idx in 0..self.active.len() {
            let truth = self.truth(&self.active[idx].arrival, t);
            for i in 0..NUM_RSU {
                match predict(&self.active[idx].tracks[i], self.scenario.slot_s, &self.noise) {
                    Ok(p) => self.active[idx].tracks[i] = p,
                    Err(_) => {
                        let speed = self.active[idx].arrival.speed;
                        self.active[idx].tracks[i] = self.seed_track(&truth[i], speed);
                        result.track_resets += 1;
                    }
                }
            }
        }
        while let Some(a) = self.schedule.get(self.next_arrival).copied() {
            if a.time > t {
                break;
            }
            self.next_arrival += 1;
            if !a.is_active(t, &road) {
                continue;
            }
            let truth = self.truth(&a, t);
            let tracks = [self.seed_track(&truth[0], a.speed), self.seed_track(&truth[1], a.speed)];
            self.active.push(VehicleSim {
                arrival: a,
                tracks,
                speed_hint: road.speed_mean,
                last_echo: None,
                last_beam: None,
            });
        }
        self.active.sort_by(|a, b| {
            let xa = a.arrival.pose(t, &road).position.x;
            let xb = b.arrival.pose(t, &road).position.x;
            xa.total_cmp(&xb).then(a.arrival.id.cmp(&b.arrival.id))
        });
        if self.active.is_empty() {
            self.slot += 1;
            return result;
        }

        // decide
        let predicted: Vec<[VehicleState; NUM_RSU]> = self
            .active
            .iter()
            .map(|v| [v.tracks[0].x_pred, v.tracks[1].x_pred])
            .collect();
        let (xi, beams) = match self.decide(&predicted, &mut result) {
            Ok(d) => d,
            Err(e) => {
                result.solver_error = Some(e.to_string());
                let phis: Vec<[f64; NUM_RSU]> = predicted.iter().map(|p| [p[0].phi, p[1].phi]).collect();
                (
                    assign_distance(&predicted),
                    BeamformingSet::matched(self.cfg.n_t, &phis),
                )
            }
        };

        if let Some(log) = self.beam_log.as_mut() {
            log.push(BeamBlock::from_solution(self.slot, &xi, &beams));
        }

        // act: sense with the chosen beams, then update the twin
        let truths: Vec<[VehicleState; NUM_RSU]> = self.active.iter().map(|v| self.truth(&v.arrival, t)).collect();
        for (k, truth) in truths.iter().enumerate() {
            let serving = xi.serving(k);
            if let (Some(records), Some(i)) = (self.dataset.as_mut(), serving) {
                records.push(dataset_record(
                    self.slot,
                    k,
                    &self.active[k],
                    beams.column(i, k),
                    i,
                    &self.cfg,
                ));
            }
            for i in 0..NUM_RSU {
                let track = self.active[k].tracks[i].clone();
                let updated = if serving == Some(i) {
                    let f = beams.column(i, k);
                    let echo = synthesize_measurement(&truth[i], f, &self.cfg, Some(&mut self.measurement_rng));
                    match echo.and_then(|y| correct(&track, &y, f, &self.cfg, &self.tracking).map(|c| (y, c))) {
                        Ok((y, c)) => {
                            result.gain_fallbacks += usize::from(c.fallback);
                            self.active[k].last_echo = Some(y);
                            c.track
                        }
                        Err(_) => {
                            result.missed_echoes += 1;
                            self.active[k].last_echo = None;
                            track.coast()
                        }
                    }
                } else {
                    track.coast()
                };
                let mut updated = updated;
                let mut hint = self.active[k].speed_hint;
                if self.repair(&mut updated, &mut hint) {
                    self.active[k].tracks[i] = updated;
                    self.active[k].speed_hint = hint;
                } else {
                    let speed = self.active[k].arrival.speed;
                    self.active[k].tracks[i] = self.seed_track(&truth[i], speed);
                    result.track_resets += 1;
                }
            }
            self.active[k].last_beam = serving.map(|i| beams.column(i, k).clone());
        }

        // metrics from ground truth
        for (k, truth) in truths.iter().enumerate() {
            let v = &self.active[k];
            let serving = xi.serving(k);
            let (s, rcrb, err) = match serving {
                Some(i) => (
                    sinr(k, i, &truths, &beams, &xi, &self.cfg).unwrap_or(0.0),
                    v.tracks[i].m_meas[(1, 1)].max(0.0).sqrt(),
                    (v.tracks[i].x_meas.d - truth[i].d).abs(),
                ),
                None => (0.0, f64::NAN, f64::NAN),
            };
            let rate = (1.0 + s).log2();
            result.sum_rate += rate;
            result.vehicles.push(VehicleResult {
                id: v.arrival.id,
                position_x: v.arrival.pose(t, &road).position.x,
                rsu: serving,
                sinr: s,
                rate,
                rcrb,
                range_err: err,
            });
        }
        self.slot += 1;
        result
    }

    fn decide(
        &self,
        predicted: &[[VehicleState; NUM_RSU]],
        result: &mut SlotResult,
    ) -> Result<(Assignment, BeamformingSet), IsacError> {
        match self.scenario.solver.core() {
            Some(solver) => {
                let lambdas = self
                    .active
                    .iter()
                    .map(|v| {
                        std::array::from_fn(|i| {
                            lambda_threshold(&v.tracks[i], &self.cfg, &self.tracking).unwrap_or(0.0)
                        })
                    })
                    .collect();
                let problem = Problem::new(predicted.to_vec(), self.cfg.clone())?.with_lambdas(lambdas);
                let report = solve(solver, &problem, &self.optimizer)?;
                result.fp_iterations = report.fp_iterations;
                result.swaps = report.swaps;
                result.infeasible_links = report.infeasible_sensing.len();
                Ok((report.assignment, report.beams))
            }
            None => {
                let block = self
                    .external
                    .as_ref()
                    .and_then(|m| m.get(&self.slot))
                    .ok_or_else(|| IsacError::Io(format!("no external beams for slot {}", self.slot)))?;
                if block.num_vehicles != predicted.len() {
                    return Err(IsacError::DimensionMismatch {
                        what: "external beam block vehicles",
                        expected: predicted.len(),
                        found: block.num_vehicles,
                    });
                }
                if block.n_t != self.cfg.n_t {
                    return Err(IsacError::DimensionMismatch {
                        what: "external beam length",
                        expected: self.cfg.n_t,
                        found: block.n_t,
                    });
                }
                Ok((block.assignment(), block.to_beams()))
            }
        }
    }

    /// Runs the configured horizon.
    pub fn run(&mut self) -> Vec<SlotResult> {
        (0..self.scenario.horizon).map(|_| self.run_slot()).collect()
    }
}

fn dataset_record(slot: u64, k: usize, v: &VehicleSim, beam: &CVector, rsu: usize, cfg: &RadioConfig) -> DatasetRecord {
    let mut features = Vec::with_capacity(2 * cfg.n_r + 2 * cfg.n_t + 2);
    match &v.last_echo {
        Some(y) => {
            features.extend(y.r_tilde.iter().map(|z| z.re));
            features.extend(y.r_tilde.iter().map(|z| z.im));
        }
        None => features.extend(std::iter::repeat_n(0.0, 2 * cfg.n_r)),
    }
    match &v.last_beam {
        Some(f) => {
            features.extend(f.iter().map(|z| z.re));
            features.extend(f.iter().map(|z| z.im));
        }
        None => features.extend(std::iter::repeat_n(0.0, 2 * cfg.n_t)),
    }
    match &v.last_echo {
        Some(y) => features.extend([y.nu_tilde, y.mu_tilde]),
        None => features.extend([0.0, 0.0]),
    }
    let mut labels: Vec<f64> = beam.iter().map(|z| z.re).chain(beam.iter().map(|z| z.im)).collect();
    labels.push(rsu as f64);
    DatasetRecord {
        slot,
        k,
        features,
        labels,
    }
}
