//! Text exchange format for externally predicted beams.
//!
//! A file is a sequence of blocks, one per slot. Each block starts with a
//! header line `n_t K slot` followed by one line per beam column:
//!
//! ```text
//! rsu k re_0 im_0 re_1 im_1 … re_{n_t−1} im_{n_t−1}
//! ```
//!
//! `rsu` and `k` are zero-based. A vehicle's serving RSU is the one whose
//! column is present; columns that are absent are zero. Floats are written in
//! shortest round-trip form, so export followed by import is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Complex, DVector};

use crate::error::{IsacError, Result};
use crate::radio::{Assignment, BeamformingSet, NUM_RSU};
use crate::scalar::{lit, norm2, real, to_f64, CVector, Real};

/// Beam columns of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamBlock<T: Real> {
    pub slot: u64,
    pub n_t: usize,
    pub num_vehicles: usize,
    pub columns: Vec<(usize, usize, CVector<T>)>,
}

impl<T: Real> BeamBlock<T> {
    /// Serving columns of a solved slot.
    pub fn from_solution(slot: u64, xi: &Assignment, beams: &BeamformingSet<T>) -> Self {
        let columns = (0..xi.num_vehicles())
            .filter_map(|k| xi.serving(k).map(|i| (i, k, beams.column(i, k).clone())))
            .collect();
        Self {
            slot,
            n_t: beams.n_t(),
            num_vehicles: xi.num_vehicles(),
            columns,
        }
    }

    pub fn to_beams(&self) -> BeamformingSet<T> {
        let mut set = BeamformingSet::zeros(self.n_t, self.num_vehicles);
        for (i, k, f) in &self.columns {
            set.set_column(*i, *k, f.clone());
        }
        set
    }

    /// Serving RSU per vehicle: the RSU whose column carries more power.
    pub fn assignment(&self) -> Assignment {
        let mut power = vec![[T::zero(); NUM_RSU]; self.num_vehicles];
        for (i, k, f) in &self.columns {
            power[*k][*i] = norm2(f);
        }
        let mut xi = Assignment::unassigned(self.num_vehicles);
        for (k, p) in power.iter().enumerate() {
            if p[0] > T::zero() || p[1] > T::zero() {
                xi.set(k, Some(usize::from(p[1] > p[0])));
            }
        }
        xi
    }
}

/// Serializes blocks in the exchange format.
pub fn format_beam_blocks<T: Real>(blocks: &[BeamBlock<T>]) -> String {
    let mut out = String::new();
    for b in blocks {
        let _ = writeln!(out, "{} {} {}", b.n_t, b.num_vehicles, b.slot);
        for (i, k, f) in &b.columns {
            let _ = write!(out, "{i} {k}");
            for z in f.iter() {
                let _ = write!(out, " {} {}", to_f64(z.re), to_f64(z.im));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_beam_blocks<T: Real>(path: &Path, blocks: &[BeamBlock<T>]) -> Result<()> {
    std::fs::write(path, format_beam_blocks(blocks))?;
    Ok(())
}

fn format_err(line: usize, field: &str, message: impl Into<String>) -> IsacError {
    IsacError::Format {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_field<V: std::str::FromStr>(tok: Option<&str>, line: usize, field: &str) -> Result<V> {
    let tok = tok.ok_or_else(|| format_err(line, field, "missing"))?;
    tok.parse()
        .map_err(|_| format_err(line, field, format!("cannot parse {tok:?}")))
}

/// Parses exchange text. Columns with norm above one (beyond `1e−6`) are
/// rescaled to unit norm.
pub fn parse_beam_blocks<T: Real>(text: &str) -> Result<Vec<BeamBlock<T>>> {
    let mut blocks: Vec<BeamBlock<T>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let mut toks = raw.split_whitespace();
        let count = raw.split_whitespace().count();
        if count == 3 {
            let n_t: usize = parse_field(toks.next(), line, "n_t")?;
            let num_vehicles: usize = parse_field(toks.next(), line, "K")?;
            let slot: u64 = parse_field(toks.next(), line, "slot")?;
            if n_t == 0 {
                return Err(format_err(line, "n_t", "must be positive"));
            }
            blocks.push(BeamBlock {
                slot,
                n_t,
                num_vehicles,
                columns: Vec::new(),
            });
            continue;
        }
        let block = blocks
            .last_mut()
            .ok_or_else(|| format_err(line, "header", "column line before any header"))?;
        let rsu: usize = parse_field(toks.next(), line, "rsu")?;
        let k: usize = parse_field(toks.next(), line, "k")?;
        if rsu >= NUM_RSU {
            return Err(format_err(line, "rsu", format!("{rsu} is not a valid RSU index")));
        }
        if k >= block.num_vehicles {
            return Err(format_err(
                line,
                "k",
                format!("vehicle {k} out of range for K = {}", block.num_vehicles),
            ));
        }
        if count != 2 + 2 * block.n_t {
            return Err(format_err(
                line,
                "values",
                format!("expected {} floats, found {}", 2 * block.n_t, count.saturating_sub(2)),
            ));
        }
        if block.columns.iter().any(|(i, kk, _)| *i == rsu && *kk == k) {
            return Err(format_err(line, "k", format!("duplicate column ({rsu}, {k})")));
        }
        let mut vals = Vec::with_capacity(block.n_t);
        for q in 0..block.n_t {
            let re: f64 = parse_field(toks.next(), line, &format!("re_{q}"))?;
            let im: f64 = parse_field(toks.next(), line, &format!("im_{q}"))?;
            if !(re.is_finite() && im.is_finite()) {
                return Err(format_err(line, &format!("re_{q}"), "non-finite value"));
            }
            vals.push(Complex::new(lit::<T>(re), lit::<T>(im)));
        }
        let mut f = DVector::from_vec(vals);
        let n = norm2(&f).sqrt();
        if n > T::one() + lit(1e-6) {
            log::warn!("line {line}: beam ({rsu}, {k}) has norm {}; rescaled to 1", to_f64(n));
            f /= real(n);
        }
        block.columns.push((rsu, k, f));
    }
    Ok(blocks)
}

/// Reads an exchange file.
pub fn load_external_beams<T: Real>(path: &Path) -> Result<Vec<BeamBlock<T>>> {
    parse_beam_blocks(&std::fs::read_to_string(path)?)
}
