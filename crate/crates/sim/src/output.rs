//! CSV tables, the trainer dataset and run manifests.
//!
//! Dataset layout: one header line
//!
//! ```text
//! dataset n_t=<N_t> n_r=<N_r> features=<F> labels=<L>
//! ```
//!
//! then one line per (slot, vehicle): `slot k` followed by `F` features and
//! `L` labels, space separated. Features are `Re r̃ (N_r), Im r̃ (N_r),
//! Re f_prev (N_t), Im f_prev (N_t), ν̃ (s), μ̃ (Hz)` from the previous slot
//! and are zero for a vehicle's first slot. Labels are `Re f (N_t), Im f
//! (N_t), rsu`. `k` is the vehicle's rank by along-road position.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::config::Scenario;
use crate::experiment::{AggregateRow, DropRow, RcrbRow};
use crate::world::{DatasetRecord, SlotResult};

pub const RESULTS_HEADER: [&str; 9] = [
    "slot",
    "vehicle",
    "rsu",
    "sinr_db",
    "rate_bps_hz",
    "rcrb_m",
    "range_err_m",
    "solver",
    "seed",
];

pub const SLOTS_HEADER: [&str; 13] = [
    "slot",
    "time_s",
    "active",
    "sum_rate_bps_hz",
    "mean_rate_bps_hz",
    "mean_rcrb_m",
    "fp_iterations",
    "swaps",
    "gain_fallbacks",
    "infeasible_links",
    "missed_echoes",
    "track_resets",
    "solver_error",
];

pub const DROPS_HEADER: [&str; 7] = [
    "k",
    "n_t",
    "rep",
    "seed",
    "solver",
    "sum_rate_bps_hz",
    "per_vehicle_bps_hz",
];

pub const RCRB_HEADER: [&str; 4] = ["n_t", "slot", "time_s", "rcrb_m"];

pub const AGGREGATE_HEADER: [&str; 8] = [
    "metric",
    "group",
    "solver",
    "count",
    "mean",
    "std",
    "ci95_low",
    "ci95_high",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
}

fn table<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, OutputError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| OutputError::Io(e.into_error()))
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// One row per served vehicle per slot.
pub fn results_csv(slots: &[SlotResult], solver: &str, seed: u64) -> Result<Vec<u8>, OutputError> {
    let rows = slots.iter().flat_map(|s| {
        s.served().map(move |v| {
            vec![
                s.slot.to_string(),
                v.id.to_string(),
                v.rsu.map(|i| i.to_string()).unwrap_or_default(),
                num(10.0 * v.sinr.log10()),
                num(v.rate),
                num(v.rcrb),
                num(v.range_err),
                solver.to_string(),
                seed.to_string(),
            ]
        })
    });
    table(&RESULTS_HEADER, rows)
}

/// Per-slot time series.
pub fn slots_csv(slots: &[SlotResult], slot_s: f64) -> Result<Vec<u8>, OutputError> {
    let rows = slots.iter().map(|s| {
        let n = s.vehicles.len();
        vec![
            s.slot.to_string(),
            num(s.slot as f64 * slot_s),
            n.to_string(),
            num(s.sum_rate),
            num(if n > 0 { s.sum_rate / n as f64 } else { 0.0 }),
            s.mean_rcrb().map(num).unwrap_or_default(),
            s.fp_iterations.to_string(),
            s.swaps.to_string(),
            s.gain_fallbacks.to_string(),
            s.infeasible_links.to_string(),
            s.missed_echoes.to_string(),
            s.track_resets.to_string(),
            s.solver_error.clone().unwrap_or_default(),
        ]
    });
    table(&SLOTS_HEADER, rows)
}

pub fn drops_csv(rows: &[DropRow]) -> Result<Vec<u8>, OutputError> {
    table(
        &DROPS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.n_t.to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                r.solver.name().to_string(),
                num(r.sum_rate),
                num(r.per_vehicle()),
            ]
        }),
    )
}

pub fn rcrb_csv(rows: &[RcrbRow], slot_s: f64) -> Result<Vec<u8>, OutputError> {
    table(
        &RCRB_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n_t.to_string(),
                r.slot.to_string(),
                num(r.slot as f64 * slot_s),
                num(r.rcrb),
            ]
        }),
    )
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>, OutputError> {
    table(
        &AGGREGATE_HEADER,
        rows.iter().map(|r| {
            let s = &r.summary;
            vec![
                r.metric.clone(),
                r.group.clone(),
                r.solver.clone(),
                s.count.to_string(),
                num(s.mean),
                num(s.std),
                num(s.mean - s.ci95),
                num(s.mean + s.ci95),
            ]
        }),
    )
}

/// Stationary aggregates of a closed-loop run, skipping the first `warmup` slots.
pub fn run_aggregates(slots: &[SlotResult], warmup: usize, solver: &str) -> Vec<AggregateRow> {
    use crate::experiment::summarize;
    let tail: Vec<&SlotResult> = slots.iter().skip(warmup).collect();
    let metric = |name: &str, values: Vec<f64>| AggregateRow {
        metric: name.into(),
        group: "stationary".into(),
        solver: solver.into(),
        summary: summarize(&values),
    };
    vec![
        metric(
            "active_vehicles",
            tail.iter().map(|s| s.vehicles.len() as f64).collect(),
        ),
        metric("sum_rate_bps_hz", tail.iter().map(|s| s.sum_rate).collect()),
        metric(
            "per_vehicle_rate_bps_hz",
            tail.iter().flat_map(|s| s.served().map(|v| v.rate)).collect(),
        ),
        metric("rcrb_m", tail.iter().filter_map(|s| s.mean_rcrb()).collect()),
        metric(
            "range_err_m",
            tail.iter().flat_map(|s| s.served().map(|v| v.range_err)).collect(),
        ),
    ]
}

/// Serialized dataset in the documented layout.
pub fn format_dataset(records: &[DatasetRecord], n_t: usize, n_r: usize) -> String {
    let features = 2 * n_r + 2 * n_t + 2;
    let labels = 2 * n_t + 1;
    let mut out = format!("dataset n_t={n_t} n_r={n_r} features={features} labels={labels}\n");
    for r in records {
        let _ = write!(out, "{} {}", r.slot, r.k);
        for v in r.features.iter().chain(&r.labels) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

/// Dataset dimensions from the header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetShape {
    pub n_t: usize,
    pub n_r: usize,
    pub features: usize,
    pub labels: usize,
}

pub fn parse_dataset(text: &str) -> Result<(DatasetShape, Vec<DatasetRecord>), OutputError> {
    let err = |line: usize, message: String| OutputError::Dataset { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("dataset") {
        return Err(err(1, "missing `dataset` header".into()));
    }
    let mut field = |name: &str| -> Result<usize, OutputError> {
        let tok = toks.next().ok_or_else(|| err(1, format!("missing {name}")))?;
        tok.strip_prefix(name)
            .and_then(|t| t.strip_prefix('='))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(1, format!("expected {name}=<count>, found {tok:?}")))
    };
    let shape = DatasetShape {
        n_t: field("n_t")?,
        n_r: field("n_r")?,
        features: field("features")?,
        labels: field("labels")?,
    };
    if shape.features != 2 * shape.n_r + 2 * shape.n_t + 2 || shape.labels != 2 * shape.n_t + 1 {
        return Err(err(1, "feature/label counts disagree with the array sizes".into()));
    }
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.len() != 2 + shape.features + shape.labels {
            return Err(err(
                line,
                format!(
                    "expected {} fields, found {}",
                    2 + shape.features + shape.labels,
                    toks.len()
                ),
            ));
        }
        let slot = toks[0]
            .parse()
            .map_err(|_| err(line, format!("bad slot {:?}", toks[0])))?;
        let k = toks[1]
            .parse()
            .map_err(|_| err(line, format!("bad vehicle rank {:?}", toks[1])))?;
        let values = toks[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| err(line, format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let (features, labels) = values.split_at(shape.features);
        records.push(DatasetRecord {
            slot,
            k,
            features: features.to_vec(),
            labels: labels.to_vec(),
        });
    }
    Ok((shape, records))
}

/// Everything needed to repeat a run exactly.
pub fn manifest(command: &str, scenario: &Scenario, extra: &[(&str, String)]) -> String {
    let mut run = toml::Table::new();
    run.insert("command".into(), command.into());
    run.insert("commit".into(), env!("ISAC_COMMIT").into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("seed".into(), toml::Value::Integer(scenario.seed as i64));
    for (k, v) in extra {
        run.insert((*k).into(), v.clone().into());
    }
    let mut doc = toml::Table::new();
    doc.insert("run".into(), toml::Value::Table(run));
    doc.insert(
        "scenario".into(),
        toml::Value::try_from(scenario).expect("scenario serializes"),
    );
    toml::to_string(&doc).expect("manifest serializes")
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), OutputError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), bytes)?;
    Ok(())
}
