//! Spectro-temporally matched masking noise and its diagnostics.
//!
//! A masker is built by splitting the source into gammatone bands, flipping
//! the sign of each sample at random within each band, re-filtering by the
//! same band, and summing. That keeps the per-band temporal envelope but
//! whitens the fine structure. The raw scheme (version A) redistributes
//! band power in proportion to bandwidth, tilting the long-term spectrum
//! upward at high frequencies; version B equalizes that tilt away against
//! the source spectrum.

use crate::erb;
use crate::periphery::{GammatoneFilterbank, PeripheralConfig};
use crate::rng::SeedTree;
use crate::signal::AudioSignal;
use crate::spectrum;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IcraVersion {
    /// Band-randomized noise as produced by the analysis–synthesis chain.
    A,
    /// Version A followed by long-term spectral equalization to the source.
    B,
}

impl std::fmt::Display for IcraVersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IcraVersion::A => "A",
            IcraVersion::B => "B",
        })
    }
}

#[derive(Debug, Clone)]
pub struct NoiseRealization {
    pub signal: AudioSignal,
    pub source_id: String,
    pub version: IcraVersion,
    pub seed: u64,
}

/// Cache file stem for a realization, stable across runs.
pub fn cache_key(source_id: &str, version: IcraVersion, seed: u64) -> String {
    format!("icra_{source_id}_{version}_{seed:016x}")
}

/// Window over which long-term spectra are compared (seconds).
pub const SPECTRUM_WINDOW_S: f64 = 0.25;

pub fn generate_icra_noise(
    source: &AudioSignal,
    source_id: &str,
    version: IcraVersion,
    seed: u64,
) -> Result<NoiseRealization> {
    let source_level = source.level_db().map_err(|_| Error::SilentSignal("icra source"))?;
    let fs = source.fs_hz;
    let fb = GammatoneFilterbank::new(&PeripheralConfig::default(), fs)?;
    let tree = SeedTree::new(seed).child("icra", 0);
    let mut sum = vec![0.0_f64; source.len()];
    for (m, band) in fb.bands.iter().enumerate() {
        let mut rng = tree.child("band", m as u64).rng();
        let mut y = band.filter(&source.samples);
        for v in &mut y {
            if rng.gen::<bool>() {
                *v = -*v;
            }
        }
        for (acc, z) in sum.iter_mut().zip(band.filter(&y)) {
            *acc += z;
        }
    }
    let mut noise = AudioSignal::new(sum, fs);
    noise.onset_s = source.onset_s;
    if version == IcraVersion::B {
        equalize_to_source(&mut noise, source, &fb)?;
    }
    noise.set_level_db(source_level)?;
    Ok(NoiseRealization { signal: noise, source_id: source_id.to_string(), version, seed })
}

/// Flatten the A-version tilt: measure per-band levels of source and noise
/// over the first [`SPECTRUM_WINDOW_S`] and apply the dB difference as a
/// zero-phase equalizer anchored at the band centers.
fn equalize_to_source(
    noise: &mut AudioSignal,
    source: &AudioSignal,
    fb: &GammatoneFilterbank,
) -> Result<()> {
    let n_win = ((SPECTRUM_WINDOW_S * source.fs_hz) as usize).min(source.len());
    let src_bl = band_levels(&source.head(n_win), fb.bands.iter().map(|b| b.erb_number));
    let noise_bl = band_levels(&noise.head(n_win), fb.bands.iter().map(|b| b.erb_number));
    let anchors: Vec<(f64, f64)> = fb
        .bands
        .iter()
        .zip(src_bl.iter().zip(&noise_bl))
        .filter(|(_, (s, n))| s.is_finite() && n.is_finite())
        .map(|(b, (s, n))| (b.fc_hz, s - n))
        .collect();
    if anchors.is_empty() {
        return Err(Error::SilentSignal("icra equalizer"));
    }
    noise.samples = spectrum::apply_spectral_gain_db(&noise.samples, noise.fs_hz, &anchors);
    Ok(())
}

/// Sum of two realizations, each attenuated 3 dB, so the pair keeps the
/// level of a single masker.
pub fn paired_noise(n1: &NoiseRealization, n2: &NoiseRealization) -> Result<AudioSignal> {
    let (a, b) = (&n1.signal, &n2.signal);
    if a.fs_hz != b.fs_hz {
        return Err(Error::SampleRateMismatch(a.fs_hz, b.fs_hz));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired noises differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let g = 10f64.powf(-3.0 / 20.0);
    let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| g * (x + y)).collect();
    let mut out = AudioSignal::new(samples, a.fs_hz);
    out.onset_s = a.onset_s;
    Ok(out)
}

/// Level (dB SPL) inside 1-ERB-wide windows centered on the given ERB
/// numbers; −∞ for an empty band.
pub fn band_levels(signal: &AudioSignal, erb_centers: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let n = signal.len();
    let nfft = n.next_power_of_two();
    let mut buf: Vec<num_complex::Complex64> =
        signal.samples.iter().map(|&v| num_complex::Complex64::new(v, 0.0)).collect();
    buf.resize(nfft, num_complex::Complex64::new(0.0, 0.0));
    spectrum::fft_in_place(&mut buf, false);
    let df = signal.fs_hz / nfft as f64;
    erb_centers
        .into_iter()
        .map(|e| {
            let lo = erb::erb_to_hz(e - 0.5);
            let hi = erb::erb_to_hz(e + 0.5);
            let k0 = (lo / df).ceil().max(1.0) as usize;
            let k1 = ((hi / df).floor() as usize).min(nfft / 2);
            // one-sided power within the band, referred to the signal length
            let power: f64 =
                2.0 * buf[k0..=k1.max(k0)].iter().map(|c| c.norm_sqr()).sum::<f64>()
                    / (nfft as f64 * n as f64);
            if power > 0.0 {
                10.0 * power.log10() + crate::signal::FULL_SCALE_DB_SPL
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Floor for [`lp_envelope`] output (dB SPL).
pub const ENVELOPE_FLOOR_DB: f64 = -20.0;

/// Hilbert envelope, smoothed by a second-order lowpass at `cutoff_hz`,
/// expressed in dB SPL (a steady sine maps to its own level) and floored
/// at [`ENVELOPE_FLOOR_DB`].
pub fn lp_envelope(signal: &AudioSignal, cutoff_hz: f64) -> Vec<f64> {
    // zero-pad so the FFT Hilbert's circular wrap lands in the padding
    // instead of folding signal edges onto each other
    let pad = (0.5 * signal.fs_hz) as usize;
    let mut padded = signal.samples.clone();
    padded.resize(signal.len() + pad, 0.0);
    let mut env = spectrum::envelope(&padded);
    env.truncate(signal.len());
    let mut lp = crate::dsp::SecondOrderLp::new(cutoff_hz, signal.fs_hz);
    env.iter()
        .map(|&v| {
            let s = lp.process(v) / std::f64::consts::SQRT_2;
            if s > 0.0 {
                (20.0 * s.log10() + crate::signal::FULL_SCALE_DB_SPL).max(ENVELOPE_FLOOR_DB)
            } else {
                ENVELOPE_FLOOR_DB
            }
        })
        .collect()
}

/// Worst absolute difference (dB) between the 20-Hz envelopes of source and
/// noise over the note: from the source-envelope peak (attack complete)
/// until the envelope last holds `floor_db`. Before the peak the band
/// filters' group delay dominates any comparison, so that edge is excluded.
pub fn envelope_mismatch_db(
    source: &AudioSignal,
    noise: &AudioSignal,
    cutoff_hz: f64,
    floor_db: f64,
) -> Option<f64> {
    let es = lp_envelope(source, cutoff_hz);
    let en = lp_envelope(noise, cutoff_hz);
    let start = es
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)?;
    let last = es.iter().rposition(|&v| v >= floor_db)?;
    if start >= last {
        return None;
    }
    let mut worst = 0.0_f64;
    for i in start..=last {
        if es[i] >= floor_db {
            worst = worst.max((es[i] - en[i]).abs());
        }
    }
    Some(worst)
}
