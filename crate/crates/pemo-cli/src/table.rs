//! Threshold tables — the CSV/JSON interchange format of the simulation
//! commands. One row per (pair, observation period, noise version).

use anyhow::{bail, Context, Result};
use pemo::icra::IcraVersion;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub pair_id: String,
    pub median_snr_db: f64,
    pub iqr_low_db: f64,
    pub iqr_high_db: f64,
    pub n_runs: usize,
    pub t_obs_s: f64,
    pub icra_version: IcraVersion,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ThresholdTable {
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdTable {
    pub fn new(rows: Vec<ThresholdRow>) -> Result<Self> {
        let t = ThresholdTable { rows };
        t.validate()?;
        Ok(t)
    }

    /// Every pair id must appear at most once per (t_obs, version).
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.rows {
            if !seen.insert((r.pair_id.clone(), r.t_obs_s.to_bits(), r.icra_version)) {
                bail!(
                    "duplicate row for pair {} at t_obs {} s, ICRA {}",
                    r.pair_id,
                    r.t_obs_s,
                    r.icra_version
                );
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)
            .with_context(|| format!("cannot read threshold table {}", path.display()))?;
        let rows: Vec<ThresholdRow> = rd
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("malformed threshold table {}", path.display()))?;
        Self::new(rows)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.rows)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot create {}", path.display()))
    }

    /// Distinct (t_obs, version) combinations in row order.
    pub fn conditions(&self) -> Vec<(f64, IcraVersion)> {
        let mut out: Vec<(f64, IcraVersion)> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|&(t, v)| t == r.t_obs_s && v == r.icra_version) {
                out.push((r.t_obs_s, r.icra_version));
            }
        }
        out
    }

    /// pair id → median threshold for one condition.
    pub fn medians(&self, t_obs_s: f64, version: IcraVersion) -> BTreeMap<String, f64> {
        self.rows
            .iter()
            .filter(|r| r.t_obs_s == t_obs_s && r.icra_version == version)
            .map(|r| (r.pair_id.clone(), r.median_snr_db))
            .collect()
    }
}
