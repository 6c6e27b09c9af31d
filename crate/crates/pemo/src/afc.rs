//! Adaptive 3-AFC harness: a two-down one-up staircase on the noise level,
//! condition batching with role swaps, variability ablations, and the
//! internal-noise calibration procedure.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::central::{
    ccv, decide_3afc, derive_templates, difference_representation, normalize_unit_energy,
    InternalNoise, LagSearch, TemplateConfig, TemplatePair, DEFAULT_SIGMA_MU,
    DEFAULT_SNR_SUPRA_DB, DEFAULT_TEMPLATE_REALIZATIONS,
};
use crate::error::{Error, Result};
use crate::icra::{generate_icra_noise, paired_noise, IcraVersion};
use crate::model::Model;
use crate::modulation::InternalRepresentation;
use crate::rng::SeedTree;
use crate::signal::{self, AudioSignal, RoveSpec};
use crate::stats;

/// One target/reference sound pair under test.
#[derive(Debug, Clone)]
pub struct SoundPair {
    pub id: String,
    pub target: AudioSignal,
    pub reference: AudioSignal,
}

impl SoundPair {
    /// Same sounds with the target and reference roles exchanged.
    pub fn swapped(&self) -> SoundPair {
        SoundPair { id: self.id.clone(), target: self.reference.clone(), reference: self.target.clone() }
    }
}

/// Staircase rules plus everything a trial needs to know.
#[derive(Debug, Clone)]
pub struct StaircaseConfig {
    pub start_snr_db: f64,
    /// Step sizes for the three schedule stages.
    pub steps_db: [f64; 3],
    /// Reversal counts after which the schedule advances a stage.
    pub step_switch_reversals: [usize; 2],
    pub n_reversals: usize,
    /// Threshold = median of this many final reversals.
    pub threshold_tail: usize,
    pub n_runs: usize,
    pub rove: RoveSpec,
    pub internal_noise_on: bool,
    pub sigma_mu: f64,
    pub t_obs_s: f64,
    pub max_trials: usize,
    pub bank_size: usize,
    pub icra_version: IcraVersion,
    pub snr_supra_db: f64,
    pub template_realizations: usize,
    pub lags: LagSearch,
}

impl StaircaseConfig {
    pub fn with_t_obs(t_obs_s: f64) -> Self {
        StaircaseConfig {
            start_snr_db: 16.0,
            steps_db: [4.0, 2.0, 1.0],
            step_switch_reversals: [2, 4],
            n_reversals: 8,
            threshold_tail: 4,
            n_runs: 6,
            rove: RoveSpec { range_db: 4.0 },
            internal_noise_on: true,
            sigma_mu: DEFAULT_SIGMA_MU,
            t_obs_s,
            max_trials: 300,
            bank_size: 12,
            icra_version: IcraVersion::B,
            snr_supra_db: DEFAULT_SNR_SUPRA_DB,
            template_realizations: DEFAULT_TEMPLATE_REALIZATIONS,
            lags: LagSearch::default(),
        }
    }

    pub fn template_config(&self) -> TemplateConfig {
        TemplateConfig {
            snr_supra_db: self.snr_supra_db,
            n_realizations: self.template_realizations,
            t_obs_s: self.t_obs_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.steps_db.iter().all(|&s| s > 0.0) {
            return Err(Error::Config("staircase steps must be positive".into()));
        }
        if self.steps_db[0] < self.steps_db[1] || self.steps_db[1] < self.steps_db[2] {
            return Err(Error::Config("staircase steps must not increase across stages".into()));
        }
        if self.step_switch_reversals[0] > self.step_switch_reversals[1] {
            return Err(Error::Config("step switch points must be ordered".into()));
        }
        if self.threshold_tail == 0 || self.threshold_tail > self.n_reversals {
            return Err(Error::Config("threshold tail must fit inside the reversal count".into()));
        }
        if self.bank_size < 3 {
            return Err(Error::Config("noise bank must hold at least 3 realizations".into()));
        }
        if !(self.t_obs_s > 0.0) {
            return Err(Error::Config("observation window must be positive".into()));
        }
        Ok(())
    }

    fn effective_sigma_mu(&self) -> f64 {
        if self.internal_noise_on {
            self.sigma_mu
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Down,
    Up,
}

/// The two-down one-up rule as a plain state machine over (snr, correct).
#[derive(Debug, Clone)]
pub struct Staircase {
    snr_db: f64,
    streak: u32,
    last_dir: Option<Direction>,
    reversal_snrs_db: Vec<f64>,
    n_reversals: usize,
    steps_db: [f64; 3],
    step_switch_reversals: [usize; 2],
}

impl Staircase {
    pub fn new(cfg: &StaircaseConfig) -> Self {
        Staircase {
            snr_db: cfg.start_snr_db,
            streak: 0,
            last_dir: None,
            reversal_snrs_db: Vec::with_capacity(cfg.n_reversals),
            n_reversals: cfg.n_reversals,
            steps_db: cfg.steps_db,
            step_switch_reversals: cfg.step_switch_reversals,
        }
    }

    /// SNR at which the next trial is presented.
    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn done(&self) -> bool {
        self.reversal_snrs_db.len() >= self.n_reversals
    }

    pub fn reversal_snrs_db(&self) -> &[f64] {
        &self.reversal_snrs_db
    }

    fn step_db(&self) -> f64 {
        let n = self.reversal_snrs_db.len();
        if n < self.step_switch_reversals[0] {
            self.steps_db[0]
        } else if n < self.step_switch_reversals[1] {
            self.steps_db[1]
        } else {
            self.steps_db[2]
        }
    }

    /// Feed one trial outcome. Two consecutive correct answers lower the SNR,
    /// one wrong answer raises it; a direction change logs the current SNR as
    /// a reversal before the (possibly smaller) step is applied.
    pub fn record(&mut self, correct: bool) {
        if self.done() {
            return;
        }
        let dir = if correct {
            self.streak += 1;
            if self.streak < 2 {
                return;
            }
            Direction::Down
        } else {
            Direction::Up
        };
        self.streak = 0;
        if self.last_dir.is_some_and(|d| d != dir) {
            self.reversal_snrs_db.push(self.snr_db);
        }
        self.last_dir = Some(dir);
        if self.done() {
            return;
        }
        let step = self.step_db();
        self.snr_db += match dir {
            Direction::Down => -step,
            Direction::Up => step,
        };
    }

    /// Median of the last `tail` reversal SNRs, once the track has finished.
    pub fn threshold_db(&self, tail: usize) -> Option<f64> {
        if !self.done() {
            return None;
        }
        let n = self.reversal_snrs_db.len();
        let last = &self.reversal_snrs_db[n - tail.min(n)..];
        stats::median(last).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub target_pos: usize,
    pub chosen: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdEstimate {
    pub pair_id: String,
    pub threshold_snr_db: f64,
    pub reversal_snrs_db: Vec<f64>,
    pub trials: Vec<TrialRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub pair_id: String,
    pub median_snr_db: f64,
    /// 25th and 75th percentile of the run thresholds.
    pub iqr_db: (f64, f64),
    pub thresholds_db: Vec<f64>,
    pub runs: Vec<ThresholdEstimate>,
}

/// Build `n` paired-noise realizations for a sound pair.
pub fn paired_noise_bank(
    pair: &SoundPair,
    n: usize,
    version: IcraVersion,
    tree: &SeedTree,
) -> Result<Vec<AudioSignal>> {
    (0..n)
        .map(|i| {
            let a = generate_icra_noise(&pair.target, &pair.id, version, tree.child("icra-a", i as u64).seed())?;
            let b = generate_icra_noise(&pair.reference, &pair.id, version, tree.child("icra-b", i as u64).seed())?;
            paired_noise(&a, &b)
        })
        .collect()
}

/// Presents trials for one pair: interval assembly, roving, model evaluation,
/// and the template decision.
pub struct PairObserver<'a> {
    model: &'a Model,
    templates: &'a TemplatePair,
    pair: &'a SoundPair,
    bank: Vec<AudioSignal>,
    lags: LagSearch,
    rove: RoveSpec,
    t_obs_s: f64,
    internal: InternalNoise,
    rng: ChaCha8Rng,
}

impl<'a> PairObserver<'a> {
    pub fn new(
        model: &'a Model,
        templates: &'a TemplatePair,
        pair: &'a SoundPair,
        bank: Vec<AudioSignal>,
        cfg: &StaircaseConfig,
        tree: &SeedTree,
    ) -> Result<Self> {
        cfg.validate()?;
        if bank.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "noise bank holds {} realizations but a trial needs 3 distinct ones",
                bank.len()
            )));
        }
        Ok(PairObserver {
            model,
            templates,
            pair,
            bank,
            lags: cfg.lags,
            rove: cfg.rove,
            t_obs_s: cfg.t_obs_s,
            internal: InternalNoise::new(cfg.effective_sigma_mu(), tree.child("internal-noise", 0).rng()),
            rng: tree.child("trials", 0).rng(),
        })
    }

    fn observe_interval(
        &mut self,
        sound: &AudioSignal,
        noise: &AudioSignal,
        snr_db: f64,
    ) -> Result<(InternalRepresentation, InternalRepresentation)> {
        let (mut mixture, mut noise_alone) = signal::mix_at_snr(sound, noise, snr_db)?;
        // the rove gain moves the whole presentation, masker included
        let g = signal::rove_gain(self.rove, &mut self.rng);
        mixture.scale(g);
        noise_alone.scale(g);
        let r_x = self.model.representation_windowed(&mixture, Some(self.t_obs_s))?.truncate_to_tobs(self.t_obs_s)?;
        let r_nx =
            self.model.representation_windowed(&noise_alone, Some(self.t_obs_s))?.truncate_to_tobs(self.t_obs_s)?;
        Ok((r_x, r_nx))
    }

    /// One 3-interval trial at the given SNR: the target sound appears once
    /// at a random position, each interval gets its own noise token from the
    /// bank and its own rove gain.
    pub fn run_trial(&mut self, snr_db: f64) -> Result<TrialRecord> {
        let target_pos = self.rng.gen_range(0..3usize);
        let picks = rand::seq::index::sample(&mut self.rng, self.bank.len(), 3);
        let mut intervals = Vec::with_capacity(3);
        for x in 0..3 {
            let sound = if x == target_pos { &self.pair.target } else { &self.pair.reference };
            let noise = self.bank[picks.index(x)].clone();
            intervals.push(self.observe_interval(sound, &noise, snr_db)?);
        }
        let mut it = intervals.into_iter();
        let intervals = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        let decision = decide_3afc(&intervals, self.templates, &self.lags, &mut self.internal)?;
        Ok(TrialRecord { snr_db, target_pos, chosen: decision.chosen, correct: decision.chosen == target_pos })
    }
}

/// Drive a staircase with an arbitrary trial runner, stopping at the reversal
/// target or erroring out at the trial cap.
pub fn drive_staircase<F>(cfg: &StaircaseConfig, mut run_one: F) -> Result<(f64, Vec<f64>, Vec<TrialRecord>)>
where
    F: FnMut(f64) -> Result<TrialRecord>,
{
    cfg.validate()?;
    let mut sc = Staircase::new(cfg);
    let mut trials: Vec<TrialRecord> = Vec::new();
    while !sc.done() {
        if trials.len() >= cfg.max_trials {
            return Err(Error::StaircaseDiverged {
                max_trials: cfg.max_trials,
                reversals: sc.reversal_snrs_db().len(),
                partial_log: trials.iter().map(|t| (t.snr_db, t.correct)).collect(),
            });
        }
        let rec = run_one(sc.snr_db())?;
        sc.record(rec.correct);
        trials.push(rec);
    }
    let threshold = sc.threshold_db(cfg.threshold_tail).expect("finished staircase has a threshold");
    Ok((threshold, sc.reversal_snrs_db, trials))
}

/// One adaptive track for a pair, with a fresh noise bank and its own streams.
pub fn run_staircase(
    model: &Model,
    pair: &SoundPair,
    templates: &TemplatePair,
    cfg: &StaircaseConfig,
    seed: u64,
) -> Result<ThresholdEstimate> {
    let tree = SeedTree::new(seed);
    let bank = paired_noise_bank(pair, cfg.bank_size, cfg.icra_version, &tree.child("bank", 0))?;
    let mut obs = PairObserver::new(model, templates, pair, bank, cfg, &tree)?;
    let (threshold_snr_db, reversal_snrs_db, trials) = drive_staircase(cfg, |snr| obs.run_trial(snr))?;
    Ok(ThresholdEstimate { pair_id: pair.id.clone(), threshold_snr_db, reversal_snrs_db, trials, seed })
}

/// Median and interquartile range of a set of run thresholds.
pub fn summarize_thresholds(thresholds_db: &[f64]) -> Result<(f64, (f64, f64))> {
    Ok((stats::median(thresholds_db)?, stats::iqr(thresholds_db)?))
}

/// All runs for one condition: templates are derived once, the first half of
/// the runs presents the pair as-is and the second half swaps the roles.
pub fn run_condition(model: &Model, pair: &SoundPair, cfg: &StaircaseConfig, master_seed: u64) -> Result<ConditionResult> {
    cfg.validate()?;
    let tree = SeedTree::new(master_seed);
    let tpl_bank = paired_noise_bank(
        pair,
        2 * cfg.template_realizations,
        cfg.icra_version,
        &tree.child("template-noise", 0),
    )?;
    let forward = derive_templates(model, &pair.target, &pair.reference, &tpl_bank, &cfg.template_config())?;
    let swapped_pair = pair.swapped();
    let swapped = TemplatePair {
        t_target: forward.t_reference.clone(),
        t_reference: forward.t_target.clone(),
        ..forward.clone()
    };
    let mut runs = Vec::with_capacity(cfg.n_runs);
    for r in 0..cfg.n_runs {
        let swap = r >= cfg.n_runs / 2;
        let (p, t) = if swap { (&swapped_pair, &swapped) } else { (pair, &forward) };
        runs.push(run_staircase(model, p, t, cfg, tree.child("run", r as u64).seed())?);
    }
    let thresholds_db: Vec<f64> = runs.iter().map(|e| e.threshold_snr_db).collect();
    let (median_snr_db, iqr_db) = summarize_thresholds(&thresholds_db)?;
    Ok(ConditionResult { pair_id: pair.id.clone(), median_snr_db, iqr_db, thresholds_db, runs })
}

/// Which sources of response variability stay on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VariabilityMode {
    /// Level roving and internal noise, the reference condition.
    ExtInt,
    /// Internal noise only.
    NoRove,
    /// Level roving only.
    NoInt,
}

impl std::fmt::Display for VariabilityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VariabilityMode::ExtInt => "ext-int",
            VariabilityMode::NoRove => "no-rove",
            VariabilityMode::NoInt => "no-int",
        })
    }
}

/// Run a condition with one variability source switched off.
pub fn ablate_variability(
    model: &Model,
    pair: &SoundPair,
    mode: VariabilityMode,
    base: &StaircaseConfig,
    master_seed: u64,
) -> Result<ConditionResult> {
    let mut cfg = base.clone();
    match mode {
        VariabilityMode::ExtInt => {}
        VariabilityMode::NoRove => cfg.rove = RoveSpec { range_db: 0.0 },
        VariabilityMode::NoInt => cfg.internal_noise_on = false,
    }
    run_condition(model, pair, &cfg, master_seed)
}

/// Grid calibration of the internal-noise sigma.
#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub delta_l_db: f64,
    pub target_pc: f64,
    pub t_obs_s: f64,
    pub n_trials: usize,
    pub sigma_grid_mu: Vec<f64>,
    pub lags: LagSearch,
}

impl CalibrationConfig {
    pub fn with_t_obs(t_obs_s: f64) -> Self {
        CalibrationConfig {
            delta_l_db: 1.0,
            target_pc: 0.707,
            t_obs_s,
            n_trials: 10_000,
            sigma_grid_mu: vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 28.0, 40.0, 64.0],
            lags: LagSearch::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CalibrationPoint {
    pub sigma_mu: f64,
    pub mean_pc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationResult {
    pub sigma_mu: f64,
    pub curve: Vec<CalibrationPoint>,
}

/// Find the sigma whose level-increment discrimination performance is closest
/// to the target percent-correct, averaged over the stimuli.
///
/// Each stimulus defines a noiseless 3-AFC task (target = stimulus raised by
/// `delta_l_db`); its four template correlations are computed once and the
/// grid is then evaluated by redrawing only the internal noise.
pub fn calibrate_internal_noise(
    model: &Model,
    stimuli: &[AudioSignal],
    cfg: &CalibrationConfig,
    seed: u64,
) -> Result<CalibrationResult> {
    if stimuli.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one stimulus".into()));
    }
    struct RawCcvs {
        tt: f64,
        tr: f64,
        rt: f64,
        rr: f64,
    }
    let mut raws = Vec::with_capacity(stimuli.len());
    for s in stimuli {
        let louder = s.scaled(10f64.powf(cfg.delta_l_db / 20.0));
        let rep_t = model.representation_windowed(&louder, Some(cfg.t_obs_s))?.truncate_to_tobs(cfg.t_obs_s)?;
        let rep_r = model.representation_windowed(s, Some(cfg.t_obs_s))?.truncate_to_tobs(cfg.t_obs_s)?;
        let silence = AudioSignal::new(vec![0.0; s.len()], s.fs_hz);
        let rep_sil = model.representation_windowed(&silence, Some(cfg.t_obs_s))?.truncate_to_tobs(cfg.t_obs_s)?;
        let d_t = difference_representation(&rep_t, &rep_sil)?;
        let d_r = difference_representation(&rep_r, &rep_sil)?;
        let mut t_t = rep_t;
        normalize_unit_energy(&mut t_t)?;
        let mut t_r = rep_r;
        normalize_unit_energy(&mut t_r)?;
        raws.push(RawCcvs {
            tt: ccv(&d_t, &t_t, &cfg.lags).value_mu,
            tr: ccv(&d_t, &t_r, &cfg.lags).value_mu,
            rt: ccv(&d_r, &t_t, &cfg.lags).value_mu,
            rr: ccv(&d_r, &t_r, &cfg.lags).value_mu,
        });
    }

    let tree = SeedTree::new(seed);
    let mut curve = Vec::with_capacity(cfg.sigma_grid_mu.len());
    for (gi, &sigma) in cfg.sigma_grid_mu.iter().enumerate() {
        let mut mean_pc = 0.0;
        for (si, raw) in raws.iter().enumerate() {
            let mut noise =
                InternalNoise::new(sigma, tree.child("calibration", (gi * raws.len() + si) as u64).rng());
            let mut pos_rng = tree.child("positions", (gi * raws.len() + si) as u64).rng();
            let mut correct = 0usize;
            for _ in 0..cfg.n_trials {
                let target_pos = pos_rng.gen_range(0..3usize);
                let mut best = f64::NEG_INFINITY;
                let mut chosen = 0;
                for x in 0..3 {
                    let (ct, cr) = if x == target_pos { (raw.tt, raw.tr) } else { (raw.rt, raw.rr) };
                    let stat = (ct + noise.draw()) - (cr + noise.draw());
                    if stat > best {
                        best = stat;
                        chosen = x;
                    }
                }
                if chosen == target_pos {
                    correct += 1;
                }
            }
            mean_pc += correct as f64 / cfg.n_trials as f64;
        }
        mean_pc /= raws.len() as f64;
        curve.push(CalibrationPoint { sigma_mu: sigma, mean_pc });
    }

    let lo = curve.iter().map(|p| p.mean_pc).fold(f64::INFINITY, f64::min);
    let hi = curve.iter().map(|p| p.mean_pc).fold(f64::NEG_INFINITY, f64::max);
    if cfg.target_pc < lo || cfg.target_pc > hi {
        return Err(Error::CalibrationUnreachable { target: cfg.target_pc });
    }
    let best = curve
        .iter()
        .min_by(|a, b| {
            (a.mean_pc - cfg.target_pc).abs().total_cmp(&(b.mean_pc - cfg.target_pc).abs())
        })
        .expect("non-empty grid");
    Ok(CalibrationResult { sigma_mu: best.sigma_mu, curve })
}
