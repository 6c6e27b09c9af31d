//! Diagnostic subcommands: `tone-demo`, `analyze-info`, `represent`,
//! `calibrate-sigma`, `gen-noise`.

use crate::config::{self, model_preset};
use crate::table::ThresholdTable;
use anyhow::{bail, Context, Result};
use clap::Args;
use pemo::afc::{self, CalibrationConfig, SoundPair};
use pemo::central::{derive_templates, difference_representation, TemplateConfig};
use pemo::icra::{self, IcraVersion};
use pemo::manifest::{self, Manifest};
use pemo::model::Model;
use pemo::modulation::{info_by_audio_band, info_by_mod_band};
use pemo::periphery::adaptation_tone_response;
use pemo::rng::SeedTree;
use pemo::signal::{mix_at_snr, AudioSignal};
use pemo::stats;
use pemo::{repr_io, wav};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const CACHE_DIR_ENV: &str = "PEMO_CACHE_DIR";

/// "none" → unlimited, otherwise a numeric limiter factor.
fn parse_limiter(text: &str) -> Result<f64> {
    if text.eq_ignore_ascii_case("none") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = text.parse().with_context(|| format!("bad limiter factor {text:?}"))?;
    if v <= 0.0 {
        bail!("limiter factor must be positive, got {v}");
    }
    Ok(v)
}

fn limiter_label(lim: f64) -> String {
    if lim.is_infinite() {
        "none".into()
    } else {
        format!("{lim}")
    }
}

/// "10:100:10" (start:stop:step, inclusive) or a comma-separated list.
fn parse_levels(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            bail!("level range must be start:stop:step, got {text:?}");
        }
        let (start, stop, step): (f64, f64, f64) =
            (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
        if step <= 0.0 || stop < start {
            bail!("bad level range {text:?}");
        }
        let mut out = Vec::new();
        let mut v = start;
        while v <= stop + 1e-9 {
            out.push(v);
            v += step;
        }
        return Ok(out);
    }
    text.split(',').map(|s| Ok(s.trim().parse::<f64>()?)).collect()
}

#[derive(Args, Debug)]
pub struct ToneDemoArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Levels for the I/O characteristic, start:stop:step or comma list (dB SPL).
    #[arg(long, default_value = "10:100:10")]
    pub levels: String,
    /// Limiter factors to compare ("none" for unlimited).
    #[arg(long, default_value = "none,10,5")]
    pub lims: String,
    /// Levels whose full Ψ time series is written.
    #[arg(long, default_value = "70")]
    pub series_levels: String,
    #[arg(long, default_value_t = 44100.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 4000.0)]
    pub carrier: f64,
    /// Tone duration in seconds.
    #[arg(long, default_value_t = 0.3)]
    pub duration: f64,
    /// Raised-cosine ramp in seconds.
    #[arg(long, default_value_t = 0.0025)]
    pub ramp: f64,
}

#[derive(Debug, Serialize)]
struct IoRow {
    limiter: String,
    level_db: f64,
    onset_max_mu: f64,
    steady_avg_mu: f64,
    onset_steady_ratio: f64,
}

#[derive(Debug, Serialize)]
struct PsiRow {
    limiter: String,
    level_db: f64,
    t_s: f64,
    psi_mu: f64,
}

/// Adaptation response of a ramped on-frequency tone across levels and
/// limiter settings: the I/O characteristic plus selected Ψ time series.
pub fn tone_demo(args: &ToneDemoArgs) -> Result<()> {
    let levels = parse_levels(&args.levels)?;
    let series_levels = parse_levels(&args.series_levels)?;
    let lims: Vec<f64> =
        args.lims.split(',').map(|s| parse_limiter(s.trim())).collect::<Result<_>>()?;
    fs::create_dir_all(&args.out_dir)?;

    let mut io = csv::Writer::from_path(args.out_dir.join("io_characteristic.csv"))?;
    let mut psi = csv::Writer::from_path(args.out_dir.join("psi_series.csv"))?;
    for &lim in &lims {
        let label = limiter_label(lim);
        for &level in &levels {
            let r = adaptation_tone_response(args.fs, args.carrier, args.duration, args.ramp, level, lim)?;
            io.serialize(IoRow {
                limiter: label.clone(),
                level_db: level,
                onset_max_mu: r.onset_max,
                steady_avg_mu: r.steady_avg,
                onset_steady_ratio: r.overshoot_ratio(),
            })?;
            println!(
                "lim {label} {level:.0} dB: onset {:.1} MU, steady {:.1} MU, ratio {:.2}",
                r.onset_max,
                r.steady_avg,
                r.overshoot_ratio()
            );
            if series_levels.iter().any(|&s| (s - level).abs() < 1e-9) {
                for (n, &v) in r.psi.iter().enumerate() {
                    psi.serialize(PsiRow {
                        limiter: label.clone(),
                        level_db: level,
                        t_s: n as f64 / args.fs,
                        psi_mu: v,
                    })?;
                }
            }
        }
    }
    io.flush()?;
    psi.flush()?;
    Ok(())
}

/// Band energies as percent of the total, which must be positive.
pub fn percent_shares(values: &[f64], what: &str) -> Result<Vec<f64>> {
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        bail!("{what} carries no information (total {total}); percentages are undefined");
    }
    Ok(values.iter().map(|v| 100.0 * v / total).collect())
}

#[derive(Args, Debug)]
pub struct AnalyzeInfoArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Stimulus ids to analyze (default: all in the manifest).
    #[arg(long)]
    pub ids: Option<String>,
    /// Model presets to compare, comma-separated.
    #[arg(long, default_value = "osses2020")]
    pub presets: String,
    /// Truncate representations to this window (default: full duration).
    #[arg(long)]
    pub t_obs: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Threshold table; when given, also weight difference representations
    /// by the templates at each pair's threshold SNR.
    #[arg(long)]
    pub threshold_table: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct InfoAudioRow {
    stimulus: String,
    preset: String,
    band: usize,
    erb: f64,
    fc_hz: f64,
    percent: f64,
}

#[derive(Debug, Serialize)]
struct InfoModRow {
    stimulus: String,
    preset: String,
    band: usize,
    percent: f64,
}

#[derive(Debug, Serialize)]
struct WeightedDetailRow {
    pair_id: String,
    template: String,
    band: usize,
    percent: f64,
}

#[derive(Debug, Serialize)]
struct MedianRow {
    band: usize,
    median_percent: f64,
    n_values: usize,
}

fn median_rows(per_eval: &[Vec<f64>]) -> Result<Vec<MedianRow>> {
    let n_bands = per_eval.iter().map(|v| v.len()).max().unwrap_or(0);
    (0..n_bands)
        .map(|b| {
            let vals: Vec<f64> =
                per_eval.iter().filter_map(|v| v.get(b)).cloned().collect();
            Ok(MedianRow { band: b + 1, median_percent: stats::median(&vals)?, n_values: vals.len() })
        })
        .collect()
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Share of the representation's information per audio band and per
/// modulation band, for each stimulus × preset; optionally the same shares
/// for template-weighted difference representations at threshold.
pub fn analyze_info(args: &AnalyzeInfoArgs) -> Result<()> {
    let base = args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let man = Manifest::load(&args.manifest)?;
    let ids: Vec<String> = match &args.ids {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => man.stimuli.iter().map(|s| s.id.clone()).collect(),
    };
    let presets: Vec<&str> = args.presets.split(',').map(str::trim).collect();
    fs::create_dir_all(&args.out_dir)?;

    let mut audio_rows = Vec::new();
    let mut mod_rows = Vec::new();
    let mut models: BTreeMap<&str, Model> = BTreeMap::new();
    for id in &ids {
        let sig = manifest::load_stimulus(man.entry(id)?, &base)?;
        for preset in &presets {
            if !models.contains_key(preset) {
                models.insert(preset, Model::new(model_preset(preset)?, sig.fs_hz)?);
            }
            let model = &models[preset];
            if (model.fs_hz() - sig.fs_hz).abs() > 1e-9 {
                bail!("stimulus {id} sample rate {} differs from the batch {}", sig.fs_hz, model.fs_hz());
            }
            let rep = model.representation_windowed(&sig, args.t_obs)?;
            let audio = percent_shares(&info_by_audio_band(&rep), &format!("stimulus {id}"))?;
            for (m, &p) in audio.iter().enumerate() {
                audio_rows.push(InfoAudioRow {
                    stimulus: id.clone(),
                    preset: preset.to_string(),
                    band: m + 1,
                    erb: rep.audio_bands[m].erb_number,
                    fc_hz: rep.audio_bands[m].fc_hz,
                    percent: p,
                });
            }
            let modp = percent_shares(&info_by_mod_band(&rep), &format!("stimulus {id}"))?;
            for (k, &p) in modp.iter().enumerate() {
                mod_rows.push(InfoModRow {
                    stimulus: id.clone(),
                    preset: preset.to_string(),
                    band: k + 1,
                    percent: p,
                });
            }
        }
    }
    write_csv_rows(&args.out_dir.join("info_audio.csv"), &audio_rows)?;
    write_csv_rows(&args.out_dir.join("info_mod.csv"), &mod_rows)?;
    println!(
        "piano-alone shares for {} stimuli × {} presets written",
        ids.len(),
        presets.len()
    );

    if let Some(table_path) = &args.threshold_table {
        let table = ThresholdTable::read_csv(table_path)
            .with_context(|| "threshold table required for the weighted-difference mode")?;
        weighted_difference_info(args, &man, &base, &presets, &table)?;
    }
    Ok(())
}

/// §-style template weighting: for every threshold-table row, mix the target
/// with fresh paired noise at the row's median SNR, subtract the noise-alone
/// representation, multiply elementwise with each unit-energy template, and
/// report each product's information shares. Summary rows hold the median
/// share per band over all pairs × both templates.
fn weighted_difference_info(
    args: &AnalyzeInfoArgs,
    man: &Manifest,
    base: &Path,
    presets: &[&str],
    table: &ThresholdTable,
) -> Result<()> {
    let preset = presets[0];
    let mut stimuli: BTreeMap<String, AudioSignal> = BTreeMap::new();
    for s in &man.stimuli {
        stimuli.insert(s.id.clone(), manifest::load_stimulus(s, base)?);
    }
    let n = man.stimuli.len();
    let mut pair_index: BTreeMap<String, (String, String)> = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pair_index.insert(
                config::pair_id(i + 1, j + 1),
                (man.stimuli[i].id.clone(), man.stimuli[j].id.clone()),
            );
        }
    }
    let fs = stimuli.values().next().context("empty manifest")?.fs_hz;
    let model = Model::new(model_preset(preset)?, fs)?;
    let tree = SeedTree::new(args.seed);

    let mut audio_evals: Vec<Vec<f64>> = Vec::new();
    let mut mod_evals: Vec<Vec<f64>> = Vec::new();
    let mut audio_detail = Vec::new();
    let mut mod_detail = Vec::new();
    for (row_k, row) in table.rows.iter().enumerate() {
        let (id_t, id_r) = pair_index
            .get(&row.pair_id)
            .with_context(|| format!("threshold row {} names no manifest pair", row.pair_id))?;
        let pair = SoundPair {
            id: row.pair_id.clone(),
            target: stimuli[id_t].clone(),
            reference: stimuli[id_r].clone(),
        };
        let row_tree = tree.child("pair", row_k as u64);
        let bank = afc::paired_noise_bank(&pair, 8, row.icra_version, &row_tree)?;
        let templates = derive_templates(
            &model,
            &pair.target,
            &pair.reference,
            &bank,
            &TemplateConfig::with_t_obs(row.t_obs_s),
        )?;
        let fresh = afc::paired_noise_bank(&pair, 1, row.icra_version, &row_tree.child("fresh", 0))?;
        let (mixture, noise) = mix_at_snr(&pair.target, &fresh[0], row.median_snr_db)?;
        let r_mix = model.representation_windowed(&mixture, Some(row.t_obs_s))?;
        let r_noise = model.representation_windowed(&noise, Some(row.t_obs_s))?;
        let delta = difference_representation(&r_mix, &r_noise)?;
        for (name, template) in
            [("target", &templates.t_target), ("reference", &templates.t_reference)]
        {
            let mut product = delta.clone();
            product.mul(template)?;
            let label = format!("pair {} × {name} template", row.pair_id);
            let audio = percent_shares(&info_by_audio_band(&product), &label)?;
            let modp = percent_shares(&info_by_mod_band(&product), &label)?;
            for (m, &p) in audio.iter().enumerate() {
                audio_detail.push(WeightedDetailRow {
                    pair_id: row.pair_id.clone(),
                    template: name.into(),
                    band: m + 1,
                    percent: p,
                });
            }
            for (k, &p) in modp.iter().enumerate() {
                mod_detail.push(WeightedDetailRow {
                    pair_id: row.pair_id.clone(),
                    template: name.into(),
                    band: k + 1,
                    percent: p,
                });
            }
            audio_evals.push(audio);
            mod_evals.push(modp);
        }
    }
    write_csv_rows(&args.out_dir.join("weighted_audio_detail.csv"), &audio_detail)?;
    write_csv_rows(&args.out_dir.join("weighted_mod_detail.csv"), &mod_detail)?;
    write_csv_rows(&args.out_dir.join("weighted_audio_median.csv"), &median_rows(&audio_evals)?)?;
    write_csv_rows(&args.out_dir.join("weighted_mod_median.csv"), &median_rows(&mod_evals)?)?;
    println!(
        "weighted-difference shares for {} rows ({} evaluations) written",
        table.rows.len(),
        audio_evals.len()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct RepresentArgs {
    /// WAV file to represent (alternative to --manifest + --id).
    #[arg(long, conflicts_with_all = ["manifest", "id"])]
    pub wav: Option<PathBuf>,
    #[arg(long, requires = "id")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    /// Presentation level for --wav input (dB SPL).
    #[arg(long, default_value_t = 70.0)]
    pub level: f64,
    #[arg(long, default_value = "osses2020")]
    pub preset: String,
    #[arg(long)]
    pub t_obs: Option<f64>,
    /// Output dump path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Run one sound through the model and dump its internal representation.
pub fn represent(args: &RepresentArgs) -> Result<()> {
    let sig = match (&args.wav, &args.manifest, &args.id) {
        (Some(w), None, None) => {
            let mut s = wav::read_wav(w)?;
            s.set_level_db(args.level)?;
            s
        }
        (None, Some(m), Some(id)) => {
            let man = Manifest::load(m)?;
            manifest::load_stimulus(man.entry(id)?, m.parent().unwrap_or(Path::new(".")))?
        }
        _ => bail!("pass either --wav or --manifest with --id"),
    };
    let model = Model::new(model_preset(&args.preset)?, sig.fs_hz)?;
    let rep = model.representation_windowed(&sig, args.t_obs)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    repr_io::save(&args.out, &rep)?;
    println!(
        "{}: {} audio bands × ≤{} modulation bands × {} samples at {} Hz → {}",
        args.preset,
        rep.n_audio_bands(),
        rep.max_mod_bands(),
        rep.n_samples(),
        rep.fs_hz,
        args.out.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct CalibrateSigmaArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Stimulus ids to calibrate on (default: all).
    #[arg(long)]
    pub ids: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    pub t_obs: f64,
    /// Level increment of the discrimination task (dB).
    #[arg(long, default_value_t = 1.0)]
    pub delta_l: f64,
    #[arg(long, default_value_t = 0.707)]
    pub target_pc: f64,
    #[arg(long, default_value_t = 10000)]
    pub trials: usize,
    /// Sigma grid to search, comma-separated (MU).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value = "osses2020")]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the calibration curve as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Calibrate the internal-noise sigma on a level-increment task.
pub fn calibrate_sigma(args: &CalibrateSigmaArgs) -> Result<()> {
    let base = args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let man = Manifest::load(&args.manifest)?;
    let ids: Vec<String> = match &args.ids {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => man.stimuli.iter().map(|s| s.id.clone()).collect(),
    };
    let stimuli: Vec<AudioSignal> = ids
        .iter()
        .map(|id| manifest::load_stimulus(man.entry(id)?, &base).map_err(Into::into))
        .collect::<Result<_>>()?;
    let fs = stimuli.first().context("no stimuli selected")?.fs_hz;
    let model = Model::new(model_preset(&args.preset)?, fs)?;

    let mut cfg = CalibrationConfig::with_t_obs(args.t_obs);
    cfg.delta_l_db = args.delta_l;
    cfg.target_pc = args.target_pc;
    cfg.n_trials = args.trials;
    if let Some(grid) = &args.grid {
        cfg.sigma_grid_mu = grid.split(',').map(|s| Ok(s.trim().parse::<f64>()?)).collect::<Result<_>>()?;
    }
    let result = afc::calibrate_internal_noise(&model, &stimuli, &cfg, args.seed)?;
    for p in &result.curve {
        println!("sigma {:7.3} MU → pc {:.3}", p.sigma_mu, p.mean_pc);
    }
    println!("calibrated sigma: {} MU (target pc {})", result.sigma_mu, args.target_pc);
    if let Some(out) = &args.out {
        if let Some(dir) = out.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut text = serde_json::to_string_pretty(&result)?;
        text.push('\n');
        fs::write(out, text)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct GenNoiseArgs {
    /// Source WAV (alternative to --manifest + --id).
    #[arg(long, conflicts_with_all = ["manifest", "id"])]
    pub wav: Option<PathBuf>,
    #[arg(long, requires = "id")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    /// Presentation level for --wav input (dB SPL).
    #[arg(long, default_value_t = 70.0)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = VersionArg::B)]
    pub version: VersionArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output WAV; defaults to `<cache-dir>/<cache-key>.wav`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cache directory (default: $PEMO_CACHE_DIR, else ./icra-cache).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VersionArg {
    A,
    B,
}

impl From<VersionArg> for IcraVersion {
    fn from(v: VersionArg) -> IcraVersion {
        match v {
            VersionArg::A => IcraVersion::A,
            VersionArg::B => IcraVersion::B,
        }
    }
}

pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("icra-cache"))
}

/// Generate one ICRA noise realization for a source sound, reusing a cached
/// file when the (source, version, seed) key already exists.
pub fn gen_noise(args: &GenNoiseArgs) -> Result<()> {
    let (source, source_id) = match (&args.wav, &args.manifest, &args.id) {
        (Some(w), None, None) => {
            let mut s = wav::read_wav(w)?;
            s.set_level_db(args.level)?;
            let id = w.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "wav".into());
            (s, id)
        }
        (None, Some(m), Some(id)) => {
            let man = Manifest::load(m)?;
            let s = manifest::load_stimulus(man.entry(id)?, m.parent().unwrap_or(Path::new(".")))?;
            (s, id.clone())
        }
        _ => bail!("pass either --wav or --manifest with --id"),
    };
    let version: IcraVersion = args.version.into();
    let key = icra::cache_key(&source_id, version, args.seed);
    let out = match &args.out {
        Some(p) => p.clone(),
        None => {
            let dir = args.cache_dir.clone().unwrap_or_else(default_cache_dir);
            dir.join(format!("{key}.wav"))
        }
    };
    if out.exists() {
        println!("cached: {}", out.display());
        return Ok(());
    }
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let noise = icra::generate_icra_noise(&source, &source_id, version, args.seed)?;
    wav::write_wav(&out, &noise.signal)?;
    println!(
        "ICRA {version} noise for {source_id} (seed {}): {:.2} dB SPL, {:.3} s → {}",
        args.seed,
        noise.signal.level_db().unwrap_or(f64::NEG_INFINITY),
        noise.signal.duration_s(),
        out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_parsing_handles_ranges_and_lists() {
        assert_eq!(parse_levels("10:30:10").unwrap(), vec![10.0, 20.0, 30.0]);
        assert_eq!(parse_levels("70").unwrap(), vec![70.0]);
        assert_eq!(parse_levels("5, 7.5").unwrap(), vec![5.0, 7.5]);
        assert!(parse_levels("30:10:10").is_err());
        assert!(parse_levels("1:2").is_err());
    }

    #[test]
    fn limiter_parsing_accepts_none_and_numbers() {
        assert!(parse_limiter("none").unwrap().is_infinite());
        assert_eq!(parse_limiter("10").unwrap(), 10.0);
        assert!(parse_limiter("-1").is_err());
        assert_eq!(limiter_label(f64::INFINITY), "none");
        assert_eq!(limiter_label(5.0), "5");
    }

    #[test]
    fn percent_shares_sum_to_hundred_and_reject_zero() {
        let p = percent_shares(&[1.0, 3.0], "x").unwrap();
        assert!((p.iter().sum::<f64>() - 100.0).abs() < 1e-12);
        assert!((p[1] - 75.0).abs() < 1e-12);
        assert!(percent_shares(&[0.0, 0.0], "silence").is_err());
    }

    #[test]
    fn median_rows_handle_ragged_evaluations() {
        let evals = vec![vec![10.0, 90.0], vec![30.0, 70.0], vec![50.0]];
        let rows = median_rows(&evals).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].median_percent, 30.0);
        assert_eq!(rows[0].n_values, 3);
        assert_eq!(rows[1].median_percent, 80.0);
        assert_eq!(rows[1].n_values, 2);
    }
}
