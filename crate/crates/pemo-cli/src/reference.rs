//! Reference thresholds for dataset 1 (21 piano pairs). The bundled table is
//! transcribed from published figures where legible — values with
//! `anchor = none` are approximate; anchored rows restate exact printed
//! numbers. Correlations against it are diagnostic, not pass/fail material.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const BUILTIN_REFERENCE_CSV: &str = include_str!("../data/reference_thresholds_dataset1.csv");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub pair_id: String,
    pub experiment_db: f64,
    pub simulation_db: f64,
    pub anchor: String,
}

/// Which reference column simulated thresholds are correlated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RefColumn {
    Experiment,
    Simulation,
}

pub fn parse_reference(text: &str) -> Result<Vec<ReferenceRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<ReferenceRow> =
        rd.deserialize().collect::<std::result::Result<_, _>>().context("malformed reference table")?;
    if rows.is_empty() {
        bail!("reference table is empty");
    }
    Ok(rows)
}

/// Load a reference table, falling back to the bundled dataset-1 values.
pub fn load_reference(path: Option<&Path>) -> Result<Vec<ReferenceRow>> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read reference table {}", p.display()))?;
            parse_reference(&text)
        }
        None => parse_reference(BUILTIN_REFERENCE_CSV),
    }
}

pub fn reference_column(rows: &[ReferenceRow], column: RefColumn) -> BTreeMap<String, f64> {
    rows.iter()
        .map(|r| {
            let v = match column {
                RefColumn::Experiment => r.experiment_db,
                RefColumn::Simulation => r.simulation_db,
            };
            (r.pair_id.clone(), v)
        })
        .collect()
}
