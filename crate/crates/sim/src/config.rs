//! Scenario description and its TOML loader.
//!
//! Every key is optional; missing keys take the highway defaults. Radio
//! powers are given in dB in the file and converted to linear units here.

use std::path::Path;

use isac_core::optimizer::OptimizerOptions;
use isac_core::{GainMode, ProcessNoise, RadioConfig, TrackingOptions};
use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Which beam/assignment policy drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Heuristic,
    Greedy,
    Distance,
    /// Beams read from an exchange file.
    External,
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Heuristic => "heuristic",
            Self::Greedy => "greedy",
            Self::Distance => "distance",
            Self::External => "external",
        }
    }

    pub fn core(&self) -> Option<isac_core::optimizer::Solver> {
        use isac_core::optimizer::Solver;
        match self {
            Self::Heuristic => Some(Solver::Heuristic),
            Self::Greedy => Some(Solver::Greedy),
            Self::Distance => Some(Solver::Distance),
            Self::External => None,
        }
    }
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "heuristic" => Ok(Self::Heuristic),
            "greedy" => Ok(Self::Greedy),
            "distance" => Ok(Self::Distance),
            "external" => Ok(Self::External),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainChoice {
    Standard,
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Poisson arrival rate per travel direction (vehicles/s).
    pub rate_per_direction: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Speeds are redrawn until they exceed this value (m/s).
    pub speed_min: f64,
    pub road_start_x: f64,
    pub road_end_x: f64,
    pub road_width: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            rate_per_direction: 5.0,
            speed_mean: 30.0,
            speed_std: 3.0,
            speed_min: 5.0,
            road_start_x: -30.0,
            road_end_x: 30.0,
            road_width: 10.0,
        }
    }
}

impl TrafficConfig {
    pub fn length(&self) -> f64 {
        self.road_end_x - self.road_start_x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub n_t: usize,
    pub n_r: usize,
    pub carrier_ghz: f64,
    pub channel_gain_db: f64,
    pub comm_noise_db: f64,
    pub sensing_noise_db: f64,
    pub fading_re: f64,
    pub fading_im: f64,
    pub signal_duration_s: f64,
    pub matched_filter_gain: f64,
    pub rho_r: f64,
    pub rho_nu: f64,
    pub rho_mu: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            n_t: 32,
            n_r: 32,
            carrier_ghz: 30.0,
            channel_gain_db: -70.0,
            comm_noise_db: -70.0,
            sensing_noise_db: -70.0,
            fading_re: 10.0,
            fading_im: 10.0,
            signal_duration_s: 0.01,
            matched_filter_gain: 10.0,
            rho_r: 1.0,
            rho_nu: 6.7e-7,
            rho_mu: 2e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingSection {
    pub gain_mode: GainChoice,
    pub exact_jacobian: bool,
    pub pcrb_no_process_noise: bool,
    pub innovation_forgetting: f64,
    /// Process-noise variances of (φ, d, v̇).
    pub process_noise: [f64; 3],
    /// Initial covariance diagonal of a new track.
    pub initial_variance: [f64; 3],
    /// Standard deviations of the position fix that seeds a new track.
    pub fix_std: [f64; 3],
}

impl Default for TrackingSection {
    fn default() -> Self {
        Self {
            gain_mode: GainChoice::Standard,
            exact_jacobian: false,
            pcrb_no_process_noise: false,
            innovation_forgetting: 0.9,
            process_noise: [1e-8, 1e-6, 1e-4],
            initial_variance: [1e-2, 1.0, 1.0],
            fix_std: [1e-3, 0.1, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub fp_tolerance: f64,
    pub fp_max_iterations: usize,
    pub pgd_max_steps: usize,
    pub swaps_per_vehicle: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerOptions::<f64>::default();
        Self {
            fp_tolerance: o.fp_tolerance,
            fp_max_iterations: o.fp_max_iterations,
            pgd_max_steps: o.pgd_max_steps,
            swaps_per_vehicle: o.swaps_per_vehicle,
        }
    }
}

/// A complete, validated simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    /// Number of slots to simulate.
    pub horizon: usize,
    pub solver: SolverChoice,
    pub slot_s: f64,
    /// Leading time excluded from stationary aggregates (s).
    pub warmup_s: f64,
    /// RSU positions (m).
    pub rsus: [[f64; 2]; 2],
    pub traffic: TrafficConfig,
    pub radio: RadioSection,
    pub tracking: TrackingSection,
    pub optimizer: OptimizerSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            horizon: 500,
            solver: SolverChoice::Heuristic,
            slot_s: 0.02,
            warmup_s: 5.0,
            rsus: [[0.0, 30.0], [0.0, -30.0]],
            traffic: TrafficConfig::default(),
            radio: RadioSection::default(),
            tracking: TrackingSection::default(),
            optimizer: OptimizerSection::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub solver: Option<SolverChoice>,
    pub horizon: Option<usize>,
    pub rate: Option<f64>,
    /// Sets both array sizes.
    pub antennas: Option<usize>,
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let message = e.inner().message().to_string();
            invalid(if key == "." { "<root>" } else { &key }, message)
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.solver {
            self.solver = s;
        }
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(r) = o.rate {
            self.traffic.rate_per_direction = r;
        }
        if let Some(n) = o.antennas {
            self.radio.n_t = n;
            self.radio.n_r = n;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be a positive number, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be a non-negative number, got {v}")))
            }
        };
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        positive("slot_s", self.slot_s)?;
        non_negative("warmup_s", self.warmup_s)?;
        let t = &self.traffic;
        non_negative("traffic.rate_per_direction", t.rate_per_direction)?;
        positive("traffic.speed_mean", t.speed_mean)?;
        non_negative("traffic.speed_std", t.speed_std)?;
        non_negative("traffic.speed_min", t.speed_min)?;
        positive("traffic.road_width", t.road_width)?;
        if !(t.road_end_x > t.road_start_x) {
            return Err(invalid("traffic.road_end_x", "must exceed traffic.road_start_x"));
        }
        if t.speed_std == 0.0 && t.speed_mean <= t.speed_min {
            return Err(invalid(
                "traffic.speed_mean",
                "must exceed traffic.speed_min when the spread is zero",
            ));
        }
        for (i, p) in self.rsus.iter().enumerate() {
            if p[1].abs() <= t.road_width / 2.0 {
                return Err(invalid(&format!("rsus[{i}]"), "RSU must lie off the carriageway"));
            }
        }
        let r = &self.radio;
        if r.n_t == 0 {
            return Err(invalid("radio.n_t", "must be at least 1"));
        }
        if r.n_r == 0 {
            return Err(invalid("radio.n_r", "must be at least 1"));
        }
        positive("radio.carrier_ghz", r.carrier_ghz)?;
        positive("radio.signal_duration_s", r.signal_duration_s)?;
        positive("radio.matched_filter_gain", r.matched_filter_gain)?;
        positive("radio.rho_r", r.rho_r)?;
        positive("radio.rho_nu", r.rho_nu)?;
        positive("radio.rho_mu", r.rho_mu)?;
        for (key, v) in [
            ("radio.channel_gain_db", r.channel_gain_db),
            ("radio.comm_noise_db", r.comm_noise_db),
            ("radio.sensing_noise_db", r.sensing_noise_db),
        ] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        let k = &self.tracking;
        for (i, v) in k.process_noise.iter().enumerate() {
            non_negative(&format!("tracking.process_noise[{i}]"), *v)?;
        }
        for (i, v) in k.initial_variance.iter().enumerate() {
            positive(&format!("tracking.initial_variance[{i}]"), *v)?;
        }
        for (i, v) in k.fix_std.iter().enumerate() {
            non_negative(&format!("tracking.fix_std[{i}]"), *v)?;
        }
        if !(k.innovation_forgetting > 0.0 && k.innovation_forgetting < 1.0) {
            return Err(invalid("tracking.innovation_forgetting", "must lie in (0, 1)"));
        }
        let o = &self.optimizer;
        positive("optimizer.fp_tolerance", o.fp_tolerance)?;
        if o.fp_max_iterations == 0 {
            return Err(invalid("optimizer.fp_max_iterations", "must be at least 1"));
        }
        if o.pgd_max_steps == 0 {
            return Err(invalid("optimizer.pgd_max_steps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn radio_config(&self) -> RadioConfig {
        let r = &self.radio;
        RadioConfig {
            n_t: r.n_t,
            n_r: r.n_r,
            f_c: r.carrier_ghz * 1e9,
            c: 3e8,
            alpha_ref: db(r.channel_gain_db),
            varrho: Complex::new(r.fading_re, r.fading_im),
            sigma_c2: db(r.comm_noise_db),
            sigma_e2: db(r.sensing_noise_db),
            t_s: r.signal_duration_s,
            g_mf: r.matched_filter_gain,
            rho_r: r.rho_r,
            rho_nu: r.rho_nu,
            rho_mu: r.rho_mu,
        }
    }

    pub fn tracking_options(&self) -> TrackingOptions<f64> {
        let k = &self.tracking;
        TrackingOptions {
            gain_mode: match k.gain_mode {
                GainChoice::Standard => GainMode::Standard,
                GainChoice::Residual => GainMode::Residual,
            },
            exact_jacobian: k.exact_jacobian,
            pcrb_no_process_noise: k.pcrb_no_process_noise,
            innovation_forgetting: k.innovation_forgetting,
        }
    }

    pub fn process_noise(&self) -> ProcessNoise<f64> {
        let [a, b, c] = self.tracking.process_noise;
        ProcessNoise::new(a, b, c)
    }

    pub fn initial_covariance(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.tracking.initial_variance))
    }

    pub fn optimizer_options(&self) -> OptimizerOptions<f64> {
        let o = &self.optimizer;
        OptimizerOptions {
            fp_tolerance: o.fp_tolerance,
            fp_max_iterations: o.fp_max_iterations,
            pgd_max_steps: o.pgd_max_steps,
            swaps_per_vehicle: o.swaps_per_vehicle,
            ..OptimizerOptions::default()
        }
    }

    pub fn warmup_slots(&self) -> usize {
        (self.warmup_s / self.slot_s).round() as usize
    }
}

/// Reads a scenario file, applies overrides and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<Scenario, ConfigError> {
    let mut scenario = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            Scenario::from_toml_str(&text)?
        }
        None => Scenario::default(),
    };
    scenario.apply(overrides);
    scenario.validate()?;
    Ok(scenario)
}
