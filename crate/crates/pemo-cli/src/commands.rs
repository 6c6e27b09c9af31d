//! Threshold-simulation subcommands: `simulate`, `tobs-sweep`,
//! `compare-icra`.

use crate::config::{self, Experiment, PairSelection};
use crate::reference::{self, RefColumn};
use crate::table::{ThresholdRow, ThresholdTable};
use anyhow::{bail, Context, Result};
use clap::Args;
use pemo::afc::{self, ConditionResult, SoundPair};
use pemo::icra::IcraVersion;
use pemo::model::Model;
use pemo::par::{self, Execution};
use pemo::rng::SeedTree;
use pemo::stats;
use serde::Serialize;
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

pub const PERMUTATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExecMode {
    Parallel,
    Sequential,
}

impl From<ExecMode> for Execution {
    fn from(m: ExecMode) -> Execution {
        match m {
            ExecMode::Parallel => Execution::Parallel,
            ExecMode::Sequential => Execution::Sequential,
        }
    }
}

/// One simulated condition with its full run log.
#[derive(Debug, Serialize)]
pub struct ConditionDetail {
    pub pair_id: String,
    pub t_obs_s: f64,
    pub icra_version: IcraVersion,
    pub seed: u64,
    pub result: ConditionResult,
}

/// Run every pair × t_obs × version combination of the experiment.
///
/// Seeds fan out from the master seed through one `SeedTree` child per
/// condition, in enumeration order; a collision among them aborts the batch.
pub fn run_threshold_table(
    ex: &Experiment,
    exec: Execution,
) -> Result<(ThresholdTable, Vec<ConditionDetail>)> {
    let pairs = config::select_pairs(ex)?;
    let mut model_config = ex.model_config.clone();
    model_config.execution = exec;
    let model = Model::new(model_config, ex.fs_hz())?;

    struct Job {
        i: usize,
        j: usize,
        pair_id: String,
        t_obs_s: f64,
        version: IcraVersion,
        seed: u64,
    }
    let tree = SeedTree::new(ex.config.seed);
    let mut jobs = Vec::new();
    let mut seeds = HashSet::new();
    for (i, j, pair_id) in &pairs {
        for &t_obs_s in &ex.config.t_obs_s {
            for &version in &ex.config.icra_versions {
                let seed = tree.child("condition", jobs.len() as u64).seed();
                if !seeds.insert(seed) {
                    bail!("seed collision at condition {} (master seed {})", jobs.len(), ex.config.seed);
                }
                jobs.push(Job { i: *i, j: *j, pair_id: pair_id.clone(), t_obs_s, version, seed });
            }
        }
    }

    let details: Vec<ConditionDetail> = par::map_indexed(exec, jobs.len(), |k| {
        let job = &jobs[k];
        let cfg = ex.config.staircase.build(job.t_obs_s, job.version);
        let pair = SoundPair {
            id: job.pair_id.clone(),
            target: ex.stimuli[job.i].1.clone(),
            reference: ex.stimuli[job.j].1.clone(),
        };
        afc::run_condition(&model, &pair, &cfg, job.seed).map(|result| ConditionDetail {
            pair_id: job.pair_id.clone(),
            t_obs_s: job.t_obs_s,
            icra_version: job.version,
            seed: job.seed,
            result,
        })
    })
    .into_iter()
    .collect::<pemo::Result<_>>()?;

    let rows = details
        .iter()
        .map(|d| ThresholdRow {
            pair_id: d.pair_id.clone(),
            median_snr_db: d.result.median_snr_db,
            iqr_low_db: d.result.iqr_db.0,
            iqr_high_db: d.result.iqr_db.1,
            n_runs: d.result.thresholds_db.len(),
            t_obs_s: d.t_obs_s,
            icra_version: d.icra_version,
        })
        .collect();
    Ok((ThresholdTable::new(rows)?, details))
}

#[derive(Debug, Serialize)]
pub struct CorrelationSummary {
    pub t_obs_s: f64,
    pub icra_version: IcraVersion,
    pub n: usize,
    pub r_pearson: f64,
    pub p_pearson: f64,
    pub n_pearson: usize,
    pub r_spearman: f64,
    pub p_spearman: f64,
}

/// Correlate one condition's medians against a reference column.
///
/// Every simulated pair must exist in the reference. `pearson_exclude`
/// removes pairs from the Pearson statistic only.
pub fn correlate_against_reference(
    table: &ThresholdTable,
    t_obs_s: f64,
    version: IcraVersion,
    reference: &BTreeMap<String, f64>,
    pearson_exclude: &[String],
    seed: u64,
) -> Result<CorrelationSummary> {
    let medians = table.medians(t_obs_s, version);
    let missing: Vec<&String> =
        medians.keys().filter(|id| !reference.contains_key(*id)).collect();
    if !missing.is_empty() {
        bail!("reference table is missing pairs {missing:?}");
    }
    let (mut sim, mut rf) = (Vec::new(), Vec::new());
    let (mut sim_p, mut rf_p) = (Vec::new(), Vec::new());
    for (id, &m) in &medians {
        sim.push(m);
        rf.push(reference[id]);
        if !pearson_exclude.contains(id) {
            sim_p.push(m);
            rf_p.push(reference[id]);
        }
    }
    let tree = SeedTree::new(seed);
    let sp = stats::spearman_with_p(&rf, &sim, PERMUTATIONS, tree.child("spearman", 0).seed())?;
    let pe = stats::pearson_with_p(&rf_p, &sim_p, PERMUTATIONS, tree.child("pearson", 0).seed())?;
    Ok(CorrelationSummary {
        t_obs_s,
        icra_version: version,
        n: sim.len(),
        r_pearson: pe.r,
        p_pearson: pe.p,
        n_pearson: sim_p.len(),
        r_spearman: sp.r,
        p_spearman: sp.p,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot create {}", path.display()))
}

fn apply_common_overrides(
    ex: &mut Experiment,
    seed: Option<u64>,
    out_dir: &Option<PathBuf>,
    pairs: &Option<String>,
    exclude: &Option<String>,
    sigma: Option<f64>,
) {
    if let Some(s) = seed {
        ex.config.seed = s;
    }
    if let Some(d) = out_dir {
        ex.config.output_dir = d.clone();
    }
    if let Some(p) = pairs {
        ex.config.pairs = PairSelection::parse(p);
    }
    if let Some(e) = exclude {
        ex.config.exclude_pairs.extend(e.split(',').map(|s| s.trim().to_string()));
    }
    if let Some(s) = sigma {
        ex.config.staircase.sigma_mu = Some(s);
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Pair selection: "all", "subset9", or comma-separated ids.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Extra pair ids to exclude.
    #[arg(long)]
    pub exclude: Option<String>,
    /// Override the internal-noise sigma (MU).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = ExecMode::Parallel)]
    pub execution: ExecMode,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut ex = config::load_experiment(&args.config)?;
    apply_common_overrides(&mut ex, args.seed, &args.out_dir, &args.pairs, &args.exclude, args.sigma);
    let out_dir = ex.config.output_dir.clone();
    fs::create_dir_all(&out_dir)?;

    let (table, details) = run_threshold_table(&ex, args.execution.into())?;
    table.write_csv(&out_dir.join("thresholds.csv"))?;
    table.write_json(&out_dir.join("thresholds.json"))?;
    write_json(&out_dir.join("runs.json"), &details)?;
    for r in &table.rows {
        println!(
            "pair {} t_obs {:.3} s ICRA {}: median {:.2} dB (IQR {:.2}..{:.2}, {} runs)",
            r.pair_id, r.t_obs_s, r.icra_version, r.median_snr_db, r.iqr_low_db, r.iqr_high_db, r.n_runs
        );
    }

    if let Some(ref_path) = &ex.config.reference {
        let rows = reference::load_reference(Some(ref_path))?;
        let reference = reference::reference_column(&rows, RefColumn::Experiment);
        let seed = SeedTree::new(ex.config.seed).child("correlation", 0).seed();
        let mut summaries = Vec::new();
        for (t, v) in table.conditions() {
            let c = correlate_against_reference(
                &table,
                t,
                v,
                &reference,
                &ex.config.pearson_exclude,
                seed,
            )?;
            println!(
                "t_obs {:.3} s ICRA {} vs reference: r_p={:.3} (p={:.4}, n={}), r_s={:.3} (p={:.4}, n={})",
                t, v, c.r_pearson, c.p_pearson, c.n_pearson, c.r_spearman, c.p_spearman, c.n
            );
            summaries.push(c);
        }
        write_json(&out_dir.join("correlations.json"), &summaries)?;
    }
    Ok(())
}

/// max, min, and max − min of a threshold set.
pub fn dynamic_range(medians_db: &[f64]) -> Option<(f64, f64, f64)> {
    let max = medians_db.iter().cloned().reduce(f64::max)?;
    let min = medians_db.iter().cloned().reduce(f64::min)?;
    Some((max, min, max - min))
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub t_obs_s: f64,
    pub icra_version: IcraVersion,
    pub n_pairs: usize,
    pub thres_max_db: f64,
    pub thres_min_db: f64,
    pub dynamic_range_db: f64,
    pub r_pearson: f64,
    pub p_pearson: f64,
    pub n_pearson: usize,
    pub r_spearman: f64,
    pub p_spearman: f64,
}

/// Summarize one condition of a threshold table against a reference column.
pub fn sweep_summary(
    table: &ThresholdTable,
    t_obs_s: f64,
    version: IcraVersion,
    reference: &BTreeMap<String, f64>,
    pearson_exclude: &[String],
    seed: u64,
) -> Result<SweepRow> {
    let medians = table.medians(t_obs_s, version);
    let values: Vec<f64> = medians.values().cloned().collect();
    let (max, min, dr) =
        dynamic_range(&values).context("condition has no rows to summarize")?;
    let c = correlate_against_reference(table, t_obs_s, version, reference, pearson_exclude, seed)?;
    Ok(SweepRow {
        t_obs_s,
        icra_version: version,
        n_pairs: values.len(),
        thres_max_db: max,
        thres_min_db: min,
        dynamic_range_db: dr,
        r_pearson: c.r_pearson,
        p_pearson: c.p_pearson,
        n_pearson: c.n_pearson,
        r_spearman: c.r_spearman,
        p_spearman: c.p_spearman,
    })
}

#[derive(Args, Debug)]
pub struct TobsSweepArgs {
    /// Experiment configuration (TOML); its t_obs list defines the sweep.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Reference CSV (defaults to the bundled dataset-1 table).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Reference column to correlate against.
    #[arg(long, value_enum, default_value_t = RefColumn::Experiment)]
    pub reference_column: RefColumn,
    /// Pair ids excluded from the Pearson correlation only.
    #[arg(long)]
    pub pearson_exclude: Option<String>,
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub exclude: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = ExecMode::Parallel)]
    pub execution: ExecMode,
}

pub fn tobs_sweep(args: &TobsSweepArgs) -> Result<()> {
    let mut ex = config::load_experiment(&args.config)?;
    apply_common_overrides(&mut ex, args.seed, &args.out_dir, &args.pairs, &args.exclude, args.sigma);
    if let Some(p) = &args.pearson_exclude {
        ex.config.pearson_exclude.extend(p.split(',').map(|s| s.trim().to_string()));
    }
    let ref_path = args.reference.clone().or_else(|| ex.config.reference.clone());
    let reference_rows = reference::load_reference(ref_path.as_deref())?;
    let reference = reference::reference_column(&reference_rows, args.reference_column);

    let out_dir = ex.config.output_dir.clone();
    fs::create_dir_all(&out_dir)?;
    let (table, details) = run_threshold_table(&ex, args.execution.into())?;
    table.write_csv(&out_dir.join("thresholds.csv"))?;
    write_json(&out_dir.join("runs.json"), &details)?;

    let seed = SeedTree::new(ex.config.seed).child("correlation", 0).seed();
    let mut rows = Vec::new();
    for (t, v) in table.conditions() {
        let row = sweep_summary(&table, t, v, &reference, &ex.config.pearson_exclude, seed)?;
        println!(
            "t_obs {:.3} s ICRA {}: max {:.2} dB, min {:.2} dB, DR {:.2} dB, r_p={:.3} (p={:.4}, n={}), r_s={:.3} (p={:.4})",
            t,
            v,
            row.thres_max_db,
            row.thres_min_db,
            row.dynamic_range_db,
            row.r_pearson,
            row.p_pearson,
            row.n_pearson,
            row.r_spearman,
            row.p_spearman
        );
        rows.push(row);
    }
    let mut w = csv::Writer::from_path(out_dir.join("sweep.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_json(&out_dir.join("sweep.json"), &rows)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DeltaRow {
    pub pair_id: String,
    pub thres_a_db: f64,
    pub thres_b_db: f64,
    pub delta_snr_db: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub n: usize,
    pub median_db: f64,
    pub p25_db: f64,
    pub p75_db: f64,
    /// Pairs with ΔSNR ≥ percentile 75.
    pub group1: Vec<String>,
    /// Pairs strictly inside the IQR.
    pub group2: Vec<String>,
    /// Pairs with ΔSNR ≤ percentile 25.
    pub group3: Vec<String>,
}

/// ΔSNR per pair between two versions' tables at the same condition,
/// grouped by the 25th/75th percentiles.
pub fn compare_tables(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<(Vec<DeltaRow>, CompareSummary)> {
    let only_a: Vec<&String> = a.keys().filter(|k| !b.contains_key(*k)).collect();
    let only_b: Vec<&String> = b.keys().filter(|k| !a.contains_key(*k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        bail!("tables disagree on pairs (A-only {only_a:?}, B-only {only_b:?})");
    }
    let deltas: Vec<DeltaRow> = a
        .iter()
        .map(|(id, &ta)| DeltaRow {
            pair_id: id.clone(),
            thres_a_db: ta,
            thres_b_db: b[id],
            delta_snr_db: ta - b[id],
        })
        .collect();
    let values: Vec<f64> = deltas.iter().map(|d| d.delta_snr_db).collect();
    let median = stats::median(&values)?;
    let (p25, p75) = stats::iqr(&values)?;
    let mut summary = CompareSummary {
        n: deltas.len(),
        median_db: median,
        p25_db: p25,
        p75_db: p75,
        group1: Vec::new(),
        group2: Vec::new(),
        group3: Vec::new(),
    };
    for d in &deltas {
        if d.delta_snr_db >= p75 {
            summary.group1.push(d.pair_id.clone());
        }
        if d.delta_snr_db <= p25 {
            summary.group3.push(d.pair_id.clone());
        }
        if d.delta_snr_db > p25 && d.delta_snr_db < p75 {
            summary.group2.push(d.pair_id.clone());
        }
    }
    Ok((deltas, summary))
}

#[derive(Args, Debug)]
pub struct CompareIcraArgs {
    /// Threshold table simulated with ICRA version A.
    #[arg(long)]
    pub table_a: PathBuf,
    /// Threshold table simulated with ICRA version B.
    #[arg(long)]
    pub table_b: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Observation period to compare (needed when a table holds several).
    #[arg(long)]
    pub t_obs: Option<f64>,
}

fn single_condition_medians(
    table: &ThresholdTable,
    want_version: IcraVersion,
    t_obs: Option<f64>,
    label: &str,
) -> Result<BTreeMap<String, f64>> {
    let mut conds: Vec<(f64, IcraVersion)> = table
        .conditions()
        .into_iter()
        .filter(|&(t, v)| v == want_version && t_obs.is_none_or(|want| t == want))
        .collect();
    if conds.is_empty() {
        // fall back to whatever version the table holds at the requested t_obs
        conds = table
            .conditions()
            .into_iter()
            .filter(|&(t, _)| t_obs.is_none_or(|want| t == want))
            .collect();
    }
    match conds.len() {
        0 => bail!("table {label} holds no matching rows"),
        1 => Ok(table.medians(conds[0].0, conds[0].1)),
        _ => bail!("table {label} holds several observation periods; pass --t-obs"),
    }
}

pub fn compare_icra(args: &CompareIcraArgs) -> Result<()> {
    let ta = ThresholdTable::read_csv(&args.table_a)
        .with_context(|| format!("version A table missing ({})", args.table_a.display()))?;
    let tb = ThresholdTable::read_csv(&args.table_b)
        .with_context(|| format!("version B table missing ({})", args.table_b.display()))?;
    let a = single_condition_medians(&ta, IcraVersion::A, args.t_obs, "A")?;
    let b = single_condition_medians(&tb, IcraVersion::B, args.t_obs, "B")?;
    let (deltas, summary) = compare_tables(&a, &b)?;

    fs::create_dir_all(&args.out_dir)?;
    let mut w = csv::Writer::from_path(args.out_dir.join("delta.csv"))?;
    for d in &deltas {
        w.serialize(d)?;
    }
    w.flush()?;
    write_json(&args.out_dir.join("summary.json"), &summary)?;

    println!(
        "ΔSNR over {} pairs: median {:.2} dB, IQR {:.2}..{:.2} dB",
        summary.n, summary.median_db, summary.p25_db, summary.p75_db
    );
    println!("group 1 (ΔSNR ≥ p75): {}", summary.group1.join(", "));
    println!("group 2 (inside IQR): {}", summary.group2.join(", "));
    println!("group 3 (ΔSNR ≤ p25): {}", summary.group3.join(", "));
    Ok(())
}
