//! Serialisation of results and atomic writes.

use std::io::Write;
use std::path::Path;

use fbec_core::experiments::{CurvePoint, SweepRecord};
use serde::Serialize;

use crate::config::{failed, CliError};

pub const CSV_HEADER: [&str; 11] = [
    "construction",
    "dx",
    "dy",
    "dz",
    "p_fail",
    "p_loss",
    "trials",
    "failures",
    "rate",
    "stderr",
    "seed",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

/// Fixed-schema rows, one per record.
pub fn records_csv(records: &[SweepRecord]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(failed)?;
    for r in records {
        w.write_record([
            r.construction.to_string(),
            r.dims.dx.to_string(),
            r.dims.dy.to_string(),
            r.dims.dz.to_string(),
            r.params.p_fail.to_string(),
            r.params.p_loss.to_string(),
            r.estimate.trials.to_string(),
            r.estimate.failures.to_string(),
            r.estimate.rate.to_string(),
            r.estimate.stderr.to_string(),
            r.seed.to_string(),
        ])
        .map_err(failed)?;
    }
    w.into_inner().map_err(failed)
}

/// `construction,p_fail,p_loss_th,uncertainty,seed`; empty threshold fields
/// when the failure rate alone is above threshold.
pub fn curve_csv(construction: &str, seed: u64, points: &[CurvePoint]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["construction", "p_fail", "p_loss_th", "uncertainty", "seed"])
        .map_err(failed)?;
    for p in points {
        let (th, u) = match &p.threshold {
            Some(t) => (t.p_loss.to_string(), t.uncertainty.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([construction.to_string(), p.p_fail.to_string(), th, u, seed.to_string()])
            .map_err(failed)?;
    }
    w.into_inner().map_err(failed)
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(failed)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path` through a sibling temporary file, or to stdout.
pub fn emit(path: Option<&str>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out.write_all(bytes).and_then(|_| out.flush()).map_err(failed);
    };
    let path = Path::new(path);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| failed(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(failed)?;
    tmp.persist(path)
        .map_err(|e| failed(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}
