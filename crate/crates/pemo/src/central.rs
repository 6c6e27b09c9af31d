//! Template-matching back end: difference representations are cross-correlated
//! against a stored template pair, internal noise perturbs the six correlation
//! values, and the interval with the strongest target evidence wins.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dsp;
use crate::error::{Error, Result};
use crate::icra::IcraVersion;
use crate::model::Model;
use crate::modulation::InternalRepresentation;
use crate::rng::SeedTree;
use crate::signal::{self, AudioSignal};

/// Internal-noise standard deviation, in model units, that puts the detector
/// at 70.7% correct for a 1-dB level increment on the original stimulus set.
pub const DEFAULT_SIGMA_MU: f64 = 10.1;

/// Supra-threshold SNR at which templates are derived.
pub const DEFAULT_SNR_SUPRA_DB: f64 = 21.0;

/// Number of noise realizations averaged into each template.
pub const DEFAULT_TEMPLATE_REALIZATIONS: usize = 4;

/// Lag grid for the cross-correlation maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagSearch {
    pub lag_min_s: f64,
    pub lag_max_s: f64,
    pub step_s: f64,
}

impl Default for LagSearch {
    fn default() -> Self {
        LagSearch { lag_min_s: -0.050, lag_max_s: 0.050, step_s: 0.001 }
    }
}

impl LagSearch {
    pub fn new(lag_min_s: f64, lag_max_s: f64, step_s: f64) -> Self {
        assert!(lag_min_s <= 0.0 && 0.0 <= lag_max_s, "lag window must contain zero");
        assert!(step_s > 0.0, "lag step must be positive");
        LagSearch { lag_min_s, lag_max_s, step_s }
    }

    /// Grid of template shifts in whole samples, deduplicated after rounding.
    pub fn sample_shifts(&self, fs_hz: f64) -> Vec<i64> {
        let n_steps = ((self.lag_max_s - self.lag_min_s) / self.step_s).round() as i64;
        let mut shifts: Vec<i64> = (0..=n_steps)
            .map(|i| ((self.lag_min_s + i as f64 * self.step_s) * fs_hz).round() as i64)
            .collect();
        shifts.dedup();
        shifts
    }
}

/// One maximized cross-correlation: its value and the lag where it peaked.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CcvResult {
    pub value_mu: f64,
    pub lag_s: f64,
}

/// Additive Gaussian noise on each correlation value, with its own stream.
#[derive(Debug, Clone)]
pub struct InternalNoise {
    pub sigma_mu: f64,
    rng: ChaCha8Rng,
}

impl InternalNoise {
    pub fn new(sigma_mu: f64, rng: ChaCha8Rng) -> Self {
        assert!(sigma_mu >= 0.0, "internal-noise sigma must be non-negative");
        InternalNoise { sigma_mu, rng }
    }

    pub fn seeded(sigma_mu: f64, seed: u64) -> Self {
        Self::new(sigma_mu, SeedTree::new(seed).child("internal-noise", 0).rng())
    }

    /// Draw one perturbation. Always consumes the stream, so trial sequences
    /// stay aligned when sigma is set to zero for an ablation.
    pub fn draw(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sigma_mu * z
    }
}

/// How templates are derived from sound-plus-noise averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateConfig {
    pub snr_supra_db: f64,
    pub n_realizations: usize,
    pub t_obs_s: f64,
}

impl TemplateConfig {
    pub fn with_t_obs(t_obs_s: f64) -> Self {
        TemplateConfig {
            snr_supra_db: DEFAULT_SNR_SUPRA_DB,
            n_realizations: DEFAULT_TEMPLATE_REALIZATIONS,
            t_obs_s,
        }
    }
}

/// Unit-energy internal representations of the two sounds to be told apart.
#[derive(Debug, Clone)]
pub struct TemplatePair {
    pub t_target: InternalRepresentation,
    pub t_reference: InternalRepresentation,
    pub t_obs_s: f64,
    pub snr_supra_db: f64,
    pub n_realizations: usize,
}

/// Scale a representation so that `(1/fs)·ΣΣΣ v²` is exactly one.
pub fn normalize_unit_energy(r: &mut InternalRepresentation) -> Result<()> {
    let e = r.energy();
    if !(e > 0.0) {
        return Err(Error::InvalidArgument("cannot normalize a zero-energy representation".into()));
    }
    r.scale(1.0 / e.sqrt());
    Ok(())
}

/// Derive the template pair for one sound pair.
///
/// Each template is the average representation of its sound mixed with
/// `n_realizations` bank noises at the supra-threshold SNR, truncated to the
/// observation window and normalized to unit energy. The target template uses
/// the first bank entries and the reference template the following ones
/// (wrapping), so the two averages see different tokens whenever the bank is
/// large enough.
pub fn derive_templates(
    model: &Model,
    target: &AudioSignal,
    reference: &AudioSignal,
    noise_bank: &[AudioSignal],
    cfg: &TemplateConfig,
) -> Result<TemplatePair> {
    if noise_bank.len() < cfg.n_realizations {
        return Err(Error::InvalidArgument(format!(
            "noise bank holds {} realizations but templates need {}",
            noise_bank.len(),
            cfg.n_realizations
        )));
    }
    let t_target = mean_mixture_template(model, target, noise_bank, 0, cfg)?;
    let t_reference = mean_mixture_template(model, reference, noise_bank, cfg.n_realizations, cfg)?;
    Ok(TemplatePair {
        t_target,
        t_reference,
        t_obs_s: cfg.t_obs_s,
        snr_supra_db: cfg.snr_supra_db,
        n_realizations: cfg.n_realizations,
    })
}

fn mean_mixture_template(
    model: &Model,
    sound: &AudioSignal,
    bank: &[AudioSignal],
    offset: usize,
    cfg: &TemplateConfig,
) -> Result<InternalRepresentation> {
    let mut acc: Option<InternalRepresentation> = None;
    for i in 0..cfg.n_realizations {
        let noise = &bank[(offset + i) % bank.len()];
        let (mixture, _) = signal::mix_at_snr(sound, noise, cfg.snr_supra_db)?;
        let rep = model.representation_windowed(&mixture, Some(cfg.t_obs_s))?;
        match &mut acc {
            None => acc = Some(rep),
            Some(a) => a.add(&rep)?,
        }
    }
    let mut mean = acc.expect("n_realizations >= 1");
    mean.scale(1.0 / cfg.n_realizations as f64);
    let mut template = mean.truncate_to_tobs(cfg.t_obs_s)?;
    normalize_unit_energy(&mut template)?;
    Ok(template)
}

/// Elementwise difference between a sound-plus-noise representation and the
/// matching noise-alone representation.
pub fn difference_representation(
    r_x: &InternalRepresentation,
    r_nx: &InternalRepresentation,
) -> Result<InternalRepresentation> {
    let mut delta = r_x.clone();
    delta.sub(r_nx)?;
    Ok(delta)
}

/// `Σ_n x[n]·t[n+s]` with out-of-range template samples treated as zero.
fn shifted_dot(x: &[f64], t: &[f64], s: i64) -> f64 {
    let lo = 0i64.max(-s);
    let hi = (x.len() as i64).min(t.len() as i64 - s);
    if hi <= lo {
        return 0.0;
    }
    let (a, b) = (lo as usize, hi as usize);
    dsp::dot(&x[a..b], &t[(lo + s) as usize..(hi + s) as usize])
}

/// Cross-correlation value between a difference representation and a template,
/// maximized over the lag grid.
///
/// For each lag the products are summed over every channel and sample and
/// scaled by `1/fs`; the maximum over lags is taken only after the channel
/// sum, so a lag must help globally to win.
pub fn ccv(delta: &InternalRepresentation, template: &InternalRepresentation, lags: &LagSearch) -> CcvResult {
    assert!(delta.layout_matches(template), "ccv inputs must share band layout and length");
    let fs = template.fs_hz;
    let shifts = lags.sample_shifts(fs);
    let mut sums = vec![0.0; shifts.len()];
    for (mods_d, mods_t) in delta.channels.iter().zip(&template.channels) {
        for (d, t) in mods_d.iter().zip(mods_t) {
            for (sum, &s) in sums.iter_mut().zip(&shifts) {
                *sum += shifted_dot(d, t, s);
            }
        }
    }
    let mut best = 0;
    for j in 1..sums.len() {
        if sums[j] > sums[best] {
            best = j;
        }
    }
    CcvResult { value_mu: sums[best] / fs, lag_s: shifts[best] as f64 / fs }
}

/// Outcome of one 3-interval decision.
#[derive(Debug, Clone)]
pub struct Decision {
    /// Index of the interval picked as the target.
    pub chosen: usize,
    /// Noisy per-interval statistics `ĈCV_{x,target} − ĈCV_{x,reference}`.
    pub statistics: [f64; 3],
    /// Raw maximized correlations against the target template.
    pub ccv_target: [CcvResult; 3],
    /// Raw maximized correlations against the reference template.
    pub ccv_reference: [CcvResult; 3],
}

fn interval_statistic(noisy_target_ccv: f64, noisy_reference_ccv: f64) -> f64 {
    noisy_target_ccv - noisy_reference_ccv
}

fn argmax3(v: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Pick the interval that looks most like the target.
///
/// Each interval contributes two maximized correlations, one per template;
/// every one of the six values gets an independent Gaussian perturbation.
/// The chosen interval maximizes the difference statistic, which honours both
/// "largest target correlation" and "smallest reference correlation" whenever
/// the two agree.
pub fn decide_3afc(
    intervals: &[(InternalRepresentation, InternalRepresentation); 3],
    templates: &TemplatePair,
    lags: &LagSearch,
    noise: &mut InternalNoise,
) -> Result<Decision> {
    let mut statistics = [0.0; 3];
    let mut ccv_target = [CcvResult::default(); 3];
    let mut ccv_reference = [CcvResult::default(); 3];
    for (x, (r_x, r_nx)) in intervals.iter().enumerate() {
        let delta = difference_representation(r_x, r_nx)?;
        ccv_target[x] = ccv(&delta, &templates.t_target, lags);
        ccv_reference[x] = ccv(&delta, &templates.t_reference, lags);
        let noisy_t = ccv_target[x].value_mu + noise.draw();
        let noisy_r = ccv_reference[x].value_mu + noise.draw();
        statistics[x] = interval_statistic(noisy_t, noisy_r);
    }
    Ok(Decision { chosen: argmax3(&statistics), statistics, ccv_target, ccv_reference })
}

/// Cache key for a derived template pair.
pub fn template_cache_key(
    target_id: &str,
    reference_id: &str,
    version: IcraVersion,
    snr_supra_db: f64,
    t_obs_s: f64,
    noise_seeds: &[u64],
) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for s in noise_seeds {
        hash = (hash ^ s).wrapping_mul(0x1000_0000_01b3);
    }
    let t_obs_ms = (t_obs_s * 1000.0).round() as i64;
    format!("tpl_{target_id}_{reference_id}_{version}_snr{snr_supra_db}_tobs{t_obs_ms}ms_{hash:016x}")
}
