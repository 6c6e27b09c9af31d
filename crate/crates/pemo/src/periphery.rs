//! Peripheral stages: outer/middle-ear filtering, gammatone filterbank,
//! inner-hair-cell envelope extraction, and the five adaptation loops.

use crate::dsp::FirstOrderLp;
use crate::erb;
use crate::fir;
use crate::signal::AudioSignal;
use crate::spectrum;
use crate::synth;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_TAU_S: [f64; 5] = [0.005, 0.050, 0.129, 0.253, 0.500];

/// Gammatone order is fixed at 4; this constant maps an ERB to the
/// equivalent one-pole bandwidth for that order.
const A_GAMMA: f64 = 0.3125 * PI;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeripheralConfig {
    pub outer_middle_ear: bool,
    pub n_bands: usize,
    pub erb_lo: f64,
    pub erb_hi: f64,
    pub ihc_cutoff_hz: f64,
    pub ihc_cascade: usize,
    pub tau_s: [f64; 5],
    /// Overshoot limiter factor; `f64::INFINITY` disables limitation.
    pub limiter_factor: f64,
    pub lvl_min: f64,
}

impl Default for PeripheralConfig {
    fn default() -> Self {
        PeripheralConfig {
            outer_middle_ear: true,
            n_bands: 31,
            erb_lo: 3.0,
            erb_hi: 33.0,
            ihc_cutoff_hz: 2000.0,
            ihc_cascade: 5,
            tau_s: DEFAULT_TAU_S,
            limiter_factor: 5.0,
            lvl_min: 1e-5,
        }
    }
}

impl PeripheralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bands < 1 || self.erb_hi <= self.erb_lo {
            return Err(Error::Config("need at least one band and erb_hi > erb_lo".into()));
        }
        if !self.tau_s.windows(2).all(|w| w[0] > 0.0 && w[0] < w[1]) {
            return Err(Error::Config("time constants must be positive and strictly increasing".into()));
        }
        if !(self.limiter_factor > 1.0) {
            return Err(Error::Config("limiter factor must be > 1 or infinite".into()));
        }
        if !(self.lvl_min > 0.0) {
            return Err(Error::Config("lvl_min must be positive".into()));
        }
        Ok(())
    }

    /// Band centers as ERB numbers.
    pub fn erb_grid(&self) -> Vec<f64> {
        let step = if self.n_bands > 1 {
            (self.erb_hi - self.erb_lo) / (self.n_bands - 1) as f64
        } else {
            0.0
        };
        (0..self.n_bands).map(|i| self.erb_lo + i as f64 * step).collect()
    }
}

const OME_TAPS: usize = 512;

/// Headphone-to-eardrum response: flat at low frequencies, ear-canal
/// resonance near 2.75 kHz, notch at 4 kHz, secondary peak at 5 kHz.
const OUTER_EAR_ANCHORS: [(f64, f64); 11] = [
    (20.0, 0.0),
    (400.0, 0.0),
    (800.0, 0.0),
    (1600.0, 0.5),
    (2750.0, 7.7),
    (4000.0, -3.1),
    (5000.0, 2.9),
    (6300.0, -4.1),
    (8000.0, -8.1),
    (10000.0, -12.1),
    (16000.0, -16.0),
];

/// Band-pass with unit gain at 800 Hz and ±6 dB/octave skirts.
fn middle_ear_anchors() -> [(f64, f64); 3] {
    let skirt = |f: f64| -6.0 * (f / 800.0).log2().abs();
    [(20.0, skirt(20.0)), (800.0, 0.0), (16000.0, skirt(16000.0))]
}

pub struct OuterMiddleEar {
    kernel: Vec<f64>,
    fs_hz: f64,
}

impl OuterMiddleEar {
    pub fn new(fs_hz: f64) -> Result<Self> {
        if fs_hz < 16000.0 {
            return Err(Error::SampleRateTooLow {
                fs: fs_hz,
                reason: "outer/middle-ear filter needs content up to 8 kHz".into(),
            });
        }
        let outer = fir::design_from_anchors(&OUTER_EAR_ANCHORS, OME_TAPS, fs_hz);
        let middle = fir::design_from_anchors(&middle_ear_anchors(), OME_TAPS, fs_hz);
        let mut kernel = vec![0.0; outer.len() + middle.len() - 1];
        for (i, &a) in outer.iter().enumerate() {
            for (j, &b) in middle.iter().enumerate() {
                kernel[i + j] += a * b;
            }
        }
        Ok(OuterMiddleEar { kernel, fs_hz })
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn process(&self, signal: &AudioSignal) -> Result<AudioSignal> {
        if signal.fs_hz != self.fs_hz {
            return Err(Error::SampleRateMismatch(self.fs_hz, signal.fs_hz));
        }
        let samples = spectrum::convolve_causal(&signal.samples, &self.kernel);
        Ok(AudioSignal { samples, fs_hz: signal.fs_hz, onset_s: signal.onset_s })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GammatoneBand {
    pub fc_hz: f64,
    pub erb_number: f64,
    coef: Complex64,
    norm: f64,
}

impl GammatoneBand {
    pub fn new(erb_number: f64, fs_hz: f64) -> Self {
        let fc_hz = erb::erb_to_hz(erb_number);
        let lambda = (-2.0 * PI * erb::erb_bandwidth_hz(fc_hz) / (A_GAMMA * fs_hz)).exp();
        let beta = 2.0 * PI * fc_hz / fs_hz;
        GammatoneBand {
            fc_hz,
            erb_number,
            coef: Complex64::from_polar(lambda, beta),
            norm: 2.0 * (1.0 - lambda).powi(4),
        }
    }

    /// Real part of the 4th-order complex all-pole output, unit gain at fc.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut w = [Complex64::new(0.0, 0.0); 4];
        x.iter()
            .map(|&v| {
                w[0] = self.coef * w[0] + v;
                w[1] = self.coef * w[1] + w[0];
                w[2] = self.coef * w[2] + w[1];
                w[3] = self.coef * w[3] + w[2];
                self.norm * w[3].re
            })
            .collect()
    }
}

pub struct GammatoneFilterbank {
    pub bands: Vec<GammatoneBand>,
    pub fs_hz: f64,
}

impl GammatoneFilterbank {
    pub fn new(cfg: &PeripheralConfig, fs_hz: f64) -> Result<Self> {
        cfg.validate()?;
        let fc_hi = erb::erb_to_hz(cfg.erb_hi);
        let min_fs = 2.0 * (fc_hi + 2.0 * erb::erb_bandwidth_hz(fc_hi));
        if fs_hz <= min_fs {
            return Err(Error::SampleRateTooLow {
                fs: fs_hz,
                reason: format!("gammatone filterbank up to {fc_hi:.0} Hz needs fs > {min_fs:.0} Hz"),
            });
        }
        let bands = cfg.erb_grid().into_iter().map(|e| GammatoneBand::new(e, fs_hz)).collect();
        Ok(GammatoneFilterbank { bands, fs_hz })
    }

    pub fn analyze(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.bands.iter().map(|b| b.filter(x)).collect()
    }
}

/// Half-wave rectification followed by a cascade of first-order low-pass
/// filters (envelope extraction).
#[derive(Debug, Clone, Copy)]
pub struct IhcStage {
    pub cutoff_hz: f64,
    pub cascade: usize,
}

impl Default for IhcStage {
    fn default() -> Self {
        IhcStage { cutoff_hz: 2000.0, cascade: 5 }
    }
}

impl IhcStage {
    pub fn from_config(cfg: &PeripheralConfig) -> Self {
        IhcStage { cutoff_hz: cfg.ihc_cutoff_hz, cascade: cfg.ihc_cascade }
    }

    pub fn process(&self, x: &[f64], fs_hz: f64) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
        for _ in 0..self.cascade {
            let mut lp = FirstOrderLp::new(self.cutoff_hz, fs_hz);
            for v in y.iter_mut() {
                *v = lp.process(*v);
            }
        }
        y
    }
}

/// Five cascaded divide-by-state feedback loops with optional overshoot
/// limitation, producing model units (MU).
pub struct AdaptationLoops {
    a1: [f64; 5],
    b0: [f64; 5],
    s0: [f64; 5],
    c: [f64; 5],
    limiter_factor: f64,
    lvl_min: f64,
}

impl AdaptationLoops {
    pub fn new(tau_s: &[f64; 5], limiter_factor: f64, lvl_min: f64, fs_hz: f64) -> Result<Self> {
        if !tau_s.windows(2).all(|w| w[0] > 0.0 && w[0] < w[1]) {
            return Err(Error::Config("time constants must be positive and strictly increasing".into()));
        }
        if !(limiter_factor > 1.0) || !(lvl_min > 0.0) {
            return Err(Error::Config("limiter factor must be > 1 (or infinite), lvl_min > 0".into()));
        }
        let mut a1 = [0.0; 5];
        let mut b0 = [0.0; 5];
        let mut s0 = [0.0; 5];
        let mut c = [0.0; 5];
        for i in 0..5 {
            a1[i] = (-1.0 / (tau_s[i] * fs_hz)).exp();
            b0[i] = 1.0 - a1[i];
            s0[i] = lvl_min.powf(1.0 / 2f64.powi(i as i32 + 1));
            c[i] = (1.0 - s0[i] * s0[i]) * limiter_factor - 1.0;
        }
        Ok(AdaptationLoops { a1, b0, s0, c, limiter_factor, lvl_min })
    }

    pub fn from_config(cfg: &PeripheralConfig, fs_hz: f64) -> Result<Self> {
        Self::new(&cfg.tau_s, cfg.limiter_factor, cfg.lvl_min, fs_hz)
    }

    pub fn initial_states(&self) -> [f64; 5] {
        self.s0
    }

    /// Per-loop maximum output amplitude (1 - s0²)·lim.
    pub fn limiter_thresholds(&self) -> [f64; 5] {
        let mut t = [0.0; 5];
        for i in 0..5 {
            t[i] = self.c[i] + 1.0;
        }
        t
    }

    /// Logistic compressor applied to amplitudes above 1.
    fn limit(c: f64, v: f64) -> f64 {
        if v <= 1.0 {
            v
        } else {
            2.0 * c / (1.0 + ((2.0 / c) * (1.0 - v)).exp()) + (1.0 - c)
        }
    }

    /// Map a loop-5 output amplitude to model units.
    pub fn to_mu(&self, o: f64) -> f64 {
        100.0 * (o - self.s0[4]) / (1.0 - self.s0[4])
    }

    pub fn process(&self, x: &[f64]) -> Result<Vec<f64>> {
        let limited = self.limiter_factor.is_finite();
        let mut state = self.s0;
        let mut out = Vec::with_capacity(x.len());
        for (n, &xv) in x.iter().enumerate() {
            if xv < 0.0 {
                return Err(Error::NegativeAdaptationInput(n));
            }
            let mut v = xv.max(self.lvl_min);
            for i in 0..5 {
                v /= state[i];
                if limited {
                    v = Self::limit(self.c[i], v);
                }
                state[i] = (self.a1[i] * state[i] + self.b0[i] * v).max(self.s0[i]);
            }
            out.push(self.to_mu(v));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ToneResponse {
    pub psi: Vec<f64>,
    pub onset_max: f64,
    pub steady_avg: f64,
}

impl ToneResponse {
    pub fn overshoot_ratio(&self) -> f64 {
        self.onset_max / self.steady_avg
    }
}

/// Response to a ramped tone through the on-frequency auditory band
/// (gammatone centered at the carrier, then IHC and adaptation): maximum
/// onset amplitude and the average over the last 20 ms before the offset
/// ramp. No outer/middle-ear filter, so `level_db` is the level reaching
/// the band directly.
pub fn adaptation_tone_response(
    fs_hz: f64,
    carrier_hz: f64,
    dur_s: f64,
    ramp_s: f64,
    level_db: f64,
    limiter_factor: f64,
) -> Result<ToneResponse> {
    let tone = synth::ramped_tone(fs_hz, carrier_hz, dur_s, ramp_s, level_db);
    let band = GammatoneBand::new(erb::hz_to_erb(carrier_hz), fs_hz).filter(&tone.samples);
    let env = IhcStage::default().process(&band, fs_hz);
    let loops = AdaptationLoops::new(&DEFAULT_TAU_S, limiter_factor, 1e-5, fs_hz)?;
    let psi = loops.process(&env)?;
    let hi = ((dur_s - ramp_s) * fs_hz).round() as usize;
    let lo = ((dur_s - ramp_s - 0.020) * fs_hz).round() as usize;
    if lo >= hi || hi > psi.len() {
        return Err(Error::TooShort { need: hi, have: psi.len() });
    }
    let steady_avg = psi[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    let onset_max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ToneResponse { psi, onset_max, steady_avg })
}
