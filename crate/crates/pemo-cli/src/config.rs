//! Experiment configuration: a TOML file naming the stimulus manifest and
//! the simulation parameters.
//!
//! ```toml
//! manifest = "stimuli.toml"
//! preset = "osses2020"
//! t_obs_s = [0.25]
//! icra_versions = ["B"]
//! output_dir = "out"
//! seed = 2024
//! pairs = "all"            # or "subset9", or ["12", "15"]
//!
//! [staircase]
//! sigma_mu = 10.1
//! n_runs = 6
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use anyhow::{bail, Context, Result};
use pemo::afc::StaircaseConfig;
use pemo::icra::IcraVersion;
use pemo::manifest::{load_stimulus, Manifest};
use pemo::model::ModelConfig;
use pemo::signal::AudioSignal;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Pair ids of the 9-pair exploratory subset.
pub const SUBSET9: [&str; 9] = ["12", "15", "16", "23", "26", "27", "37", "45", "47"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSelection {
    /// `"all"` or `"subset9"`.
    Preset(String),
    /// Explicit pair ids.
    Explicit(Vec<String>),
}

impl Default for PairSelection {
    fn default() -> Self {
        PairSelection::Preset("all".into())
    }
}

impl PairSelection {
    /// Parse a command-line override: a preset name or comma-separated ids.
    pub fn parse(text: &str) -> Self {
        match text {
            "all" | "subset9" => PairSelection::Preset(text.into()),
            _ => PairSelection::Explicit(text.split(',').map(|s| s.trim().to_string()).collect()),
        }
    }
}

/// Optional per-field overrides of [`StaircaseConfig`]. Unset fields keep
/// the procedure defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaircaseSettings {
    pub start_snr_db: Option<f64>,
    pub steps_db: Option<[f64; 3]>,
    pub step_switch_reversals: Option<[usize; 2]>,
    pub n_reversals: Option<usize>,
    pub threshold_tail: Option<usize>,
    pub n_runs: Option<usize>,
    pub rove_db: Option<f64>,
    pub internal_noise_on: Option<bool>,
    pub sigma_mu: Option<f64>,
    pub max_trials: Option<usize>,
    pub bank_size: Option<usize>,
    pub snr_supra_db: Option<f64>,
    pub template_realizations: Option<usize>,
}

impl StaircaseSettings {
    pub fn build(&self, t_obs_s: f64, version: IcraVersion) -> StaircaseConfig {
        let mut c = StaircaseConfig::with_t_obs(t_obs_s);
        c.icra_version = version;
        if let Some(v) = self.start_snr_db {
            c.start_snr_db = v;
        }
        if let Some(v) = self.steps_db {
            c.steps_db = v;
        }
        if let Some(v) = self.step_switch_reversals {
            c.step_switch_reversals = v;
        }
        if let Some(v) = self.n_reversals {
            c.n_reversals = v;
        }
        if let Some(v) = self.threshold_tail {
            c.threshold_tail = v;
        }
        if let Some(v) = self.n_runs {
            c.n_runs = v;
        }
        if let Some(v) = self.rove_db {
            c.rove.range_db = v;
        }
        if let Some(v) = self.internal_noise_on {
            c.internal_noise_on = v;
        }
        if let Some(v) = self.sigma_mu {
            c.sigma_mu = v;
        }
        if let Some(v) = self.max_trials {
            c.max_trials = v;
        }
        if let Some(v) = self.bank_size {
            c.bank_size = v;
        }
        if let Some(v) = self.snr_supra_db {
            c.snr_supra_db = v;
        }
        if let Some(v) = self.template_realizations {
            c.template_realizations = v;
        }
        c
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    #[serde(default = "defaults::preset")]
    pub preset: String,
    #[serde(default = "defaults::t_obs")]
    pub t_obs_s: Vec<f64>,
    #[serde(default = "defaults::versions")]
    pub icra_versions: Vec<IcraVersion>,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Reference thresholds CSV; enables the correlation report.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub pairs: PairSelection,
    #[serde(default)]
    pub exclude_pairs: Vec<String>,
    /// Pair ids left out of the Pearson correlation only (normality
    /// judgments are the user's, not the tool's).
    #[serde(default)]
    pub pearson_exclude: Vec<String>,
    #[serde(default)]
    pub staircase: StaircaseSettings,
}

mod defaults {
    use super::*;

    pub fn preset() -> String {
        "osses2020".into()
    }

    pub fn t_obs() -> Vec<f64> {
        vec![0.25]
    }

    pub fn versions() -> Vec<IcraVersion> {
        vec![IcraVersion::B]
    }

    pub fn output_dir() -> PathBuf {
        "out".into()
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.manifest = resolve(base, &cfg.manifest);
        cfg.output_dir = resolve(base, &cfg.output_dir);
        cfg.reference = cfg.reference.as_deref().map(|r| resolve(base, r));
        Ok(cfg)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Model-stage presets exposed on the command line.
pub fn model_preset(name: &str) -> Result<ModelConfig> {
    let base = ModelConfig::osses2020();
    Ok(match name {
        "osses2020" => base,
        "dau1997" => base.with_limiter(10.0),
        "no-limit" => base.with_limiter(f64::INFINITY),
        other => bail!("unknown model preset {other:?} (expected osses2020, dau1997, or no-limit)"),
    })
}

/// A validated config with its stimuli loaded and level-scaled.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model_config: ModelConfig,
    pub stimuli: Vec<(String, AudioSignal)>,
}

impl Experiment {
    pub fn fs_hz(&self) -> f64 {
        self.stimuli[0].1.fs_hz
    }
}

pub fn load_experiment(config_path: &Path) -> Result<Experiment> {
    let config = ExperimentConfig::load(config_path)?;
    load_experiment_from(config)
}

pub fn load_experiment_from(config: ExperimentConfig) -> Result<Experiment> {
    let model_config = model_preset(&config.preset)?;
    if config.t_obs_s.is_empty() {
        bail!("config lists no t_obs values");
    }
    if config.icra_versions.is_empty() {
        bail!("config lists no ICRA versions");
    }
    let manifest = Manifest::load(&config.manifest)
        .with_context(|| format!("cannot load manifest {}", config.manifest.display()))?;
    let mdir = config.manifest.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let stimuli: Vec<(String, AudioSignal)> = manifest
        .stimuli
        .iter()
        .map(|e| {
            load_stimulus(e, &mdir)
                .map(|s| (e.id.clone(), s))
                .with_context(|| format!("cannot load stimulus {:?}", e.id))
        })
        .collect::<Result<_>>()?;
    if stimuli.len() < 2 {
        bail!("need at least two stimuli to form a pair");
    }
    let fs = stimuli[0].1.fs_hz;
    let max_t = config.t_obs_s.iter().cloned().fold(0.0, f64::max);
    for (id, s) in &stimuli {
        if s.fs_hz != fs {
            bail!("stimulus {id:?} has fs {} Hz, others {} Hz", s.fs_hz, fs);
        }
        if s.duration_s() + 1e-9 < max_t {
            bail!(
                "stimulus {id:?} lasts {:.3} s but the config asks for t_obs = {max_t} s",
                s.duration_s()
            );
        }
    }
    Ok(Experiment { config, model_config, stimuli })
}

/// Id for the pair of the i-th and j-th manifest entries (1-based), written
/// as digit pairs like "12" while both fit a digit.
pub fn pair_id(i: usize, j: usize) -> String {
    if j <= 9 {
        format!("{i}{j}")
    } else {
        format!("{i}-{j}")
    }
}

/// Resolve the configured pair selection to stimulus index pairs.
pub fn select_pairs(ex: &Experiment) -> Result<Vec<(usize, usize, String)>> {
    let n = ex.stimuli.len();
    let all: Vec<(usize, usize, String)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, pair_id(i + 1, j + 1)))).collect();
    let mut chosen = match &ex.config.pairs {
        PairSelection::Preset(p) if p == "all" => all,
        PairSelection::Preset(p) if p == "subset9" => {
            let picked: Vec<_> =
                all.into_iter().filter(|(_, _, id)| SUBSET9.contains(&id.as_str())).collect();
            if picked.len() != SUBSET9.len() {
                bail!(
                    "subset9 needs stimuli for all of {:?}; only {} of its pairs exist",
                    SUBSET9,
                    picked.len()
                );
            }
            picked
        }
        PairSelection::Preset(other) => bail!("unknown pair preset {other:?}"),
        PairSelection::Explicit(ids) => {
            let mut picked = Vec::with_capacity(ids.len());
            for id in ids {
                match all.iter().find(|(_, _, pid)| pid == id) {
                    Some(p) => picked.push(p.clone()),
                    None => bail!("pair {id:?} does not name two manifest stimuli"),
                }
            }
            picked
        }
    };
    chosen.retain(|(_, _, id)| !ex.config.exclude_pairs.contains(id));
    if chosen.is_empty() {
        bail!("no pairs left after exclusions");
    }
    Ok(chosen)
}
