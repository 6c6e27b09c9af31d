//! Calibrated audio buffers and level arithmetic.
//!
//! Calibration convention: a full-scale amplitude of 1.0 corresponds to
//! 100 dB SPL, so `level = 20*log10(rms) + 100` and an RMS of 1e-5 sits at
//! 0 dB SPL.

use crate::dsp;
use crate::error::{Error, Result};
use rand::Rng;

/// dB SPL of a signal with RMS 1.0.
pub const FULL_SCALE_DB_SPL: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub fs_hz: f64,
    /// Physical onset time within the buffer, when known (from a manifest).
    pub onset_s: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum RampDirection {
    Up,
    Down,
}

/// Per-interval level rove specification, uniform in `[-range_db, +range_db]`.
#[derive(Debug, Clone, Copy)]
pub struct RoveSpec {
    pub range_db: f64,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, fs_hz: f64) -> Self {
        Self { samples, fs_hz, onset_s: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs_hz
    }

    pub fn rms(&self) -> f64 {
        dsp::rms(&self.samples)
    }

    /// Broadband level in dB SPL under the fixed calibration convention.
    pub fn level_db(&self) -> Result<f64> {
        let r = self.rms();
        if r <= 0.0 {
            return Err(Error::SilentSignal("measure level"));
        }
        Ok(20.0 * r.log10() + FULL_SCALE_DB_SPL)
    }

    /// Scale to the requested broadband level (dB SPL).
    pub fn set_level_db(&mut self, target_db: f64) -> Result<()> {
        let current = self.level_db()?;
        let gain = 10f64.powf((target_db - current) / 20.0);
        self.scale(gain);
        Ok(())
    }

    pub fn scale(&mut self, gain: f64) {
        for s in &mut self.samples {
            *s *= gain;
        }
    }

    pub fn scaled(&self, gain: f64) -> AudioSignal {
        let mut out = self.clone();
        out.scale(gain);
        out
    }

    /// Raised-cosine ramp over `dur_s` at the chosen end, in place.
    ///
    /// A down ramp leaves the first ramp sample untouched and takes the final
    /// sample exactly to zero; the midpoint factor is exactly 0.5.
    pub fn apply_ramp(&mut self, dur_s: f64, dir: RampDirection) -> Result<()> {
        if dur_s < 0.0 {
            return Err(Error::InvalidArgument("ramp duration must be >= 0".into()));
        }
        let n_ramp = (dur_s * self.fs_hz).round() as usize;
        if n_ramp > self.samples.len() {
            return Err(Error::TooShort { need: n_ramp, have: self.samples.len() });
        }
        if n_ramp < 2 {
            return Ok(()); // zero or single-sample ramp: nothing to shape
        }
        let denom = (n_ramp - 1) as f64;
        match dir {
            RampDirection::Up => {
                for i in 0..n_ramp {
                    let w = (std::f64::consts::FRAC_PI_2 * i as f64 / denom).sin();
                    self.samples[i] *= w * w;
                }
            }
            RampDirection::Down => {
                let start = self.samples.len() - n_ramp;
                for i in 0..n_ramp {
                    // sin of the remaining fraction hits exactly 0 at the end
                    let w = (std::f64::consts::FRAC_PI_2 * (denom - i as f64) / denom).sin();
                    self.samples[start + i] *= w * w;
                }
            }
        }
        Ok(())
    }

    /// First `n` samples as a new signal (whole signal if `n >= len`).
    pub fn head(&self, n: usize) -> AudioSignal {
        AudioSignal {
            samples: self.samples[..n.min(self.samples.len())].to_vec(),
            fs_hz: self.fs_hz,
            onset_s: self.onset_s,
        }
    }
}

/// Mix `noise` into `target` at the requested broadband SNR.
///
/// The noise gain is chosen so that `RMS(target)/RMS(scaled noise)` equals the
/// SNR over the full target duration; the result is trimmed to the target
/// length. Returns the mixture together with the scaled noise-alone signal.
pub fn mix_at_snr(target: &AudioSignal, noise: &AudioSignal, snr_db: f64) -> Result<(AudioSignal, AudioSignal)> {
    if target.fs_hz != noise.fs_hz {
        return Err(Error::SampleRateMismatch(target.fs_hz, noise.fs_hz));
    }
    if noise.len() < target.len() {
        return Err(Error::TooShort { need: target.len(), have: noise.len() });
    }
    let noise_seg = &noise.samples[..target.len()];
    let rms_n = dsp::rms(noise_seg);
    if rms_n <= 0.0 {
        return Err(Error::SilentSignal("mix at an SNR"));
    }
    let rms_t = target.rms();
    if rms_t <= 0.0 {
        return Err(Error::SilentSignal("mix at an SNR"));
    }
    let gain = rms_t / rms_n * 10f64.powf(-snr_db / 20.0);
    let scaled: Vec<f64> = noise_seg.iter().map(|v| v * gain).collect();
    let mixed: Vec<f64> = target.samples.iter().zip(&scaled).map(|(t, n)| t + n).collect();
    Ok((
        AudioSignal { samples: mixed, fs_hz: target.fs_hz, onset_s: target.onset_s },
        AudioSignal { samples: scaled, fs_hz: target.fs_hz, onset_s: target.onset_s },
    ))
}

/// Draw a rove gain in dB from `[-range, +range]` and return it as a linear factor.
pub fn rove_gain(rove: RoveSpec, rng: &mut impl Rng) -> f64 {
    if rove.range_db <= 0.0 {
        return 1.0;
    }
    let u: f64 = rng.gen_range(-rove.range_db..=rove.range_db);
    10f64.powf(u / 20.0)
}
