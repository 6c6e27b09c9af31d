//! Modulation filterbank, the 3-D internal representation
//! (audio band × modulation band × time), and information weighting.

use crate::dsp::{ComplexResonator, FirstOrderHp, FirstOrderLp, KahanAcc, SecondOrderLp};
use crate::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModFilterKind {
    Lowpass,
    Resonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputMode {
    /// Real part of the band-limited signal (phase preserved).
    RealPart,
    /// Norm of the complex signal scaled by 1/√2 (envelope).
    EnvelopeNorm,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModFilterSpec {
    /// 1-based band number.
    pub index: usize,
    /// Center frequency; for the low-pass band this is the −3 dB cutoff.
    pub mfc_hz: f64,
    pub bw_hz: f64,
    pub kind: ModFilterKind,
    pub output: OutputMode,
}

/// The 12-band ladder: a 2.7-Hz low-pass, two phase-preserving resonators,
/// then constant-Q (Q = 2) envelope bands at ratio 5/3.
pub fn default_mod_specs() -> Vec<ModFilterSpec> {
    let mut specs = vec![
        ModFilterSpec { index: 1, mfc_hz: 2.7, bw_hz: 2.7, kind: ModFilterKind::Lowpass, output: OutputMode::RealPart },
        ModFilterSpec { index: 2, mfc_hz: 5.2, bw_hz: 5.2, kind: ModFilterKind::Resonant, output: OutputMode::RealPart },
        ModFilterSpec { index: 3, mfc_hz: 10.0, bw_hz: 5.4, kind: ModFilterKind::Resonant, output: OutputMode::RealPart },
    ];
    for index in 4..=12 {
        let mfc_hz = 10.0 * (5f64 / 3.0).powi(index as i32 - 3);
        specs.push(ModFilterSpec {
            index,
            mfc_hz,
            bw_hz: mfc_hz / 2.0,
            kind: ModFilterKind::Resonant,
            output: OutputMode::EnvelopeNorm,
        });
    }
    specs
}

pub struct ModulationFilterbank {
    pub specs: Vec<ModFilterSpec>,
    pub fs_hz: f64,
    pub pre_lpf_hz: f64,
    /// DC-blocker cutoff for the resonant bands. The complex one-pole alone
    /// leaks a sizable fraction of any DC offset; a sub-passband highpass
    /// restores zero response at 0 Hz without moving the measured band edges.
    pub dc_block_hz: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MeasuredModResponse {
    pub mfc_hz: f64,
    pub f_inf_hz: f64,
    pub f_sup_hz: f64,
}

impl MeasuredModResponse {
    pub fn bandwidth_hz(&self) -> f64 {
        self.f_sup_hz - self.f_inf_hz
    }

    pub fn q(&self) -> f64 {
        self.mfc_hz / self.bandwidth_hz()
    }
}

impl ModulationFilterbank {
    pub fn new(fs_hz: f64) -> Self {
        ModulationFilterbank { specs: default_mod_specs(), fs_hz, pre_lpf_hz: 150.0, dc_block_hz: 0.5 }
    }

    /// Number of leading bands kept for an audio band (mfc < fc/4).
    pub fn n_kept(&self, fc_audio_hz: f64) -> usize {
        self.specs.iter().take_while(|s| s.mfc_hz < fc_audio_hz / 4.0).count()
    }

    /// Filter one adaptation-loop output into its modulation channels.
    pub fn analyze(&self, x: &[f64], fc_audio_hz: f64) -> Vec<Vec<f64>> {
        let mut pre = FirstOrderLp::new(self.pre_lpf_hz, self.fs_hz);
        let xf: Vec<f64> = x.iter().map(|&v| pre.process(v)).collect();
        self.specs[..self.n_kept(fc_audio_hz)].iter().map(|s| self.apply(s, &xf)).collect()
    }

    fn apply(&self, spec: &ModFilterSpec, x: &[f64]) -> Vec<f64> {
        match spec.kind {
            ModFilterKind::Lowpass => {
                let mut lp = SecondOrderLp::new(spec.mfc_hz, self.fs_hz);
                x.iter().map(|&v| lp.process(v)).collect()
            }
            ModFilterKind::Resonant => {
                let mut hp = FirstOrderHp::new(self.dc_block_hz, self.fs_hz);
                let mut res = ComplexResonator::new(spec.mfc_hz, spec.bw_hz, self.fs_hz);
                match spec.output {
                    OutputMode::RealPart => {
                        x.iter().map(|&v| 2.0 * res.process(hp.process(v)).re).collect()
                    }
                    OutputMode::EnvelopeNorm => {
                        x.iter().map(|&v| res.process(hp.process(v)).norm() / SQRT_2).collect()
                    }
                }
            }
        }
    }

    /// Center frequency and −3 dB edges measured from the impulse response
    /// (FFT peak and interpolated half-power crossings). The 150-Hz
    /// pre-filter is not part of the measurement.
    pub fn measure(&self, spec: &ModFilterSpec) -> MeasuredModResponse {
        // IR long enough for an 80-dB decay of both the resonator and, for
        // resonant bands, the much slower DC blocker.
        let mut n_ir = (9.21 * self.fs_hz / (PI * spec.bw_hz)).ceil() as usize;
        if spec.kind == ModFilterKind::Resonant {
            n_ir = n_ir.max((9.21 * self.fs_hz / (2.0 * PI * self.dc_block_hz)).ceil() as usize);
        }
        let nfft = (8 * n_ir).next_power_of_two();
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        match spec.kind {
            ModFilterKind::Lowpass => {
                let mut lp = SecondOrderLp::new(spec.mfc_hz, self.fs_hz);
                for (n, v) in buf.iter_mut().take(n_ir).enumerate() {
                    *v = Complex64::new(lp.process(if n == 0 { 1.0 } else { 0.0 }), 0.0);
                }
            }
            ModFilterKind::Resonant => {
                let mut hp = FirstOrderHp::new(self.dc_block_hz, self.fs_hz);
                let mut res = ComplexResonator::new(spec.mfc_hz, spec.bw_hz, self.fs_hz);
                for (n, v) in buf.iter_mut().take(n_ir).enumerate() {
                    *v = res.process(hp.process(if n == 0 { 1.0 } else { 0.0 }));
                }
            }
        }
        FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
        let mags: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
        let half = nfft / 2;
        let search = match spec.kind {
            ModFilterKind::Lowpass => &mags[..half],
            ModFilterKind::Resonant => &mags[..],
        };
        let kp = search.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let thr = mags[kp] / SQRT_2;
        let df = self.fs_hz / nfft as f64;
        let cross = |from: usize, step: i64| -> Option<f64> {
            let mut k = from as i64;
            loop {
                let next = k + step;
                if next < 0 || next as usize >= mags.len() {
                    return None;
                }
                if mags[next as usize] < thr {
                    let frac = (mags[k as usize] - thr) / (mags[k as usize] - mags[next as usize]);
                    return Some((k as f64 + step as f64 * frac) * df);
                }
                k = next;
            }
        };
        let f_sup = cross(kp, 1).unwrap_or((half - 1) as f64 * df);
        match spec.kind {
            ModFilterKind::Lowpass => {
                MeasuredModResponse { mfc_hz: f_sup, f_inf_hz: 0.0, f_sup_hz: f_sup }
            }
            ModFilterKind::Resonant => {
                let f_inf = cross(kp, -1).unwrap_or(0.0);
                MeasuredModResponse { mfc_hz: kp as f64 * df, f_inf_hz: f_inf, f_sup_hz: f_sup }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudioBandInfo {
    pub fc_hz: f64,
    pub erb_number: f64,
}

/// Model-unit representation indexed `[audio band][modulation band][time]`.
/// The modulation dimension is ragged: each audio band keeps only the
/// leading modulation bands satisfying the mfc < fc/4 rule.
#[derive(Debug, Clone)]
pub struct InternalRepresentation {
    pub fs_hz: f64,
    pub audio_bands: Vec<AudioBandInfo>,
    pub channels: Vec<Vec<Vec<f64>>>,
    pub t_obs_s: Option<f64>,
}

impl InternalRepresentation {
    pub fn n_audio_bands(&self) -> usize {
        self.audio_bands.len()
    }

    pub fn n_mod_bands(&self, m: usize) -> usize {
        self.channels[m].len()
    }

    pub fn max_mod_bands(&self) -> usize {
        self.channels.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn n_samples(&self) -> usize {
        self.channels.first().and_then(|c| c.first()).map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs_hz
    }

    pub fn layout_matches(&self, other: &Self) -> bool {
        self.fs_hz == other.fs_hz
            && self.n_audio_bands() == other.n_audio_bands()
            && self.n_samples() == other.n_samples()
            && (0..self.n_audio_bands()).all(|m| self.n_mod_bands(m) == other.n_mod_bands(m))
    }

    /// Keep the first `t_obs` seconds (round(t_obs·fs) samples).
    pub fn truncate_to_tobs(&self, t_obs_s: f64) -> Result<Self> {
        let n = (t_obs_s * self.fs_hz).round() as usize;
        if n > self.n_samples() {
            return Err(Error::TooShort { need: n, have: self.n_samples() });
        }
        let channels = self
            .channels
            .iter()
            .map(|mods| mods.iter().map(|ch| ch[..n].to_vec()).collect())
            .collect();
        Ok(InternalRepresentation {
            fs_hz: self.fs_hz,
            audio_bands: self.audio_bands.clone(),
            channels,
            t_obs_s: Some(t_obs_s),
        })
    }

    /// (1/fs)·ΣΣΣ R² over every dimension.
    pub fn energy(&self) -> f64 {
        let mut acc = KahanAcc::default();
        for e in self.channel_energies().iter().flatten() {
            acc.add(*e);
        }
        acc.value() / self.fs_hz
    }

    pub fn scale(&mut self, g: f64) {
        for ch in self.channels.iter_mut().flatten() {
            for v in ch.iter_mut() {
                *v *= g;
            }
        }
    }

    pub fn add(&mut self, other: &Self) -> Result<()> {
        if !self.layout_matches(other) {
            return Err(Error::LayoutMismatch("add".into()));
        }
        for (a, b) in self.channels.iter_mut().flatten().zip(other.channels.iter().flatten()) {
            for (va, vb) in a.iter_mut().zip(b) {
                *va += vb;
            }
        }
        Ok(())
    }

    /// Elementwise difference, e.g. ΔR = R_x − R_Nx.
    pub fn sub(&mut self, other: &Self) -> Result<()> {
        if !self.layout_matches(other) {
            return Err(Error::LayoutMismatch("sub".into()));
        }
        for (a, b) in self.channels.iter_mut().flatten().zip(other.channels.iter().flatten()) {
            for (va, vb) in a.iter_mut().zip(b) {
                *va -= vb;
            }
        }
        Ok(())
    }

    /// Elementwise product, e.g. ΔR·T for information weighting.
    pub fn mul(&mut self, other: &Self) -> Result<()> {
        if !self.layout_matches(other) {
            return Err(Error::LayoutMismatch("mul".into()));
        }
        for (a, b) in self.channels.iter_mut().flatten().zip(other.channels.iter().flatten()) {
            for (va, vb) in a.iter_mut().zip(b) {
                *va *= vb;
            }
        }
        Ok(())
    }

    /// Σ_n R² per (m, k) channel (compensated summation, no 1/fs factor).
    pub fn channel_energies(&self) -> Vec<Vec<f64>> {
        self.channels
            .iter()
            .map(|mods| {
                mods.iter()
                    .map(|ch| {
                        let mut acc = KahanAcc::default();
                        for &v in ch {
                            acc.add(v * v);
                        }
                        acc.value()
                    })
                    .collect()
            })
            .collect()
    }
}

/// I_m: per-audio-band information, (1/fs)·Σ_k Σ_n R².
pub fn info_by_audio_band(r: &InternalRepresentation) -> Vec<f64> {
    r.channel_energies()
        .iter()
        .map(|es| {
            let mut acc = KahanAcc::default();
            for &e in es {
                acc.add(e);
            }
            acc.value() / r.fs_hz
        })
        .collect()
}

/// I_k: per-modulation-band information, (1/fs)·Σ_m Σ_n R².
pub fn info_by_mod_band(r: &InternalRepresentation) -> Vec<f64> {
    let energies = r.channel_energies();
    (0..r.max_mod_bands())
        .map(|k| {
            let mut acc = KahanAcc::default();
            for es in &energies {
                if let Some(&e) = es.get(k) {
                    acc.add(e);
                }
            }
            acc.value() / r.fs_hz
        })
        .collect()
}

/// I_tot: total information, (1/fs)·Σ_m Σ_k Σ_n R².
pub fn info_total(r: &InternalRepresentation) -> f64 {
    r.energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ladder_matches_published_centers() {
        let specs = default_mod_specs();
        let printed = [2.7, 5.0, 10.0, 16.7, 27.8, 46.3, 77.2, 128.6, 214.3, 357.2, 595.4, 992.3];
        assert_eq!(specs.len(), 12);
        for (s, &p) in specs.iter().zip(&printed).skip(2) {
            assert!((s.mfc_hz - p).abs() / p < 0.003, "band {}: {} vs {p}", s.index, s.mfc_hz);
        }
        // band 2 sits slightly high so its measured edges bracket the
        // published 2.7–8.1 Hz passband
        assert!((specs[1].mfc_hz - 5.0).abs() / 5.0 < 0.05);
    }

    #[test]
    fn pruning_follows_quarter_fc_rule() {
        let fb = ModulationFilterbank::new(44100.0);
        assert_eq!(fb.n_kept(erb::erb_to_hz(11.0)), 8);
        assert_eq!(fb.n_kept(erb::erb_to_hz(3.0)), 4);
        assert_eq!(fb.n_kept(erb::erb_to_hz(33.0)), 12);
        // first audio band (ERB number) admitting each modulation band
        let first_erb: Vec<usize> = fb
            .specs
            .iter()
            .map(|s| (3..=33).find(|&m| s.mfc_hz < erb::erb_to_hz(m as f64) / 4.0).unwrap())
            .collect();
        assert_eq!(first_erb, vec![3, 3, 3, 3, 4, 6, 8, 11, 15, 19, 23, 27]);
    }

    #[test]
    fn constant_input_energy_stays_in_lowpass_band() {
        let fs = 8000.0;
        let fb = ModulationFilterbank::new(fs);
        let x = vec![50.0; 4 * fs as usize];
        let out = fb.analyze(&x, 5000.0);
        assert_eq!(out.len(), 12);
        // window past the DC-blocker settling time
        let steady = |ch: &[f64]| crate::dsp::rms(&ch[(3.0 * fs) as usize..]);
        let dc = steady(&out[0]);
        assert!((dc - 50.0).abs() < 0.5, "lowpass band carries the DC: {dc}");
        for (i, ch) in out.iter().enumerate().skip(1) {
            assert!(steady(ch) < dc / 100.0, "band {} leaks {}", i + 1, steady(ch));
        }
    }

    #[test]
    fn measured_response_of_a_constant_q_band() {
        let fb = ModulationFilterbank::new(44100.0);
        let m = fb.measure(&fb.specs[6]);
        assert!((m.mfc_hz - 77.2).abs() / 77.2 < 0.05, "mfc {}", m.mfc_hz);
        assert!((m.f_inf_hz - 57.9).abs() / 57.9 < 0.05, "f_inf {}", m.f_inf_hz);
        assert!((m.f_sup_hz - 96.9).abs() / 96.9 < 0.05, "f_sup {}", m.f_sup_hz);
        assert!((m.q() - 2.0).abs() < 0.1, "q {}", m.q());
    }

    fn random_rep(seed: u64, fs_hz: f64) -> InternalRepresentation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(50..200);
        let audio_bands: Vec<AudioBandInfo> = (0..rng.gen_range(2..6))
            .map(|m| AudioBandInfo { fc_hz: 100.0 * (m + 1) as f64, erb_number: m as f64 })
            .collect();
        let channels = audio_bands
            .iter()
            .map(|_| {
                (0..rng.gen_range(1..5))
                    .map(|_| (0..n).map(|_| rng.gen_range(-150.0..150.0)).collect())
                    .collect()
            })
            .collect();
        InternalRepresentation { fs_hz, audio_bands, channels, t_obs_s: None }
    }

    #[test]
    fn information_identity_holds() {
        for seed in 0..20 {
            let r = random_rep(seed, 8000.0);
            let tot = info_total(&r);
            let by_m: f64 = info_by_audio_band(&r).iter().sum();
            let by_k: f64 = info_by_mod_band(&r).iter().sum();
            assert!((by_m - tot).abs() <= 1e-12 * tot.abs());
            assert!((by_k - tot).abs() <= 1e-12 * tot.abs());
        }
    }

    #[test]
    fn information_is_time_reversal_invariant() {
        let r = random_rep(7, 8000.0);
        let mut rev = r.clone();
        for ch in rev.channels.iter_mut().flatten() {
            ch.reverse();
        }
        let a = info_by_audio_band(&r);
        let b = info_by_audio_band(&rev);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn truncation_cuts_time_and_energy() {
        let r = random_rep(3, 1000.0);
        let full = r.duration_s();
        let cut = r.truncate_to_tobs(full / 2.0).unwrap();
        assert_eq!(cut.n_samples(), (full / 2.0 * 1000.0).round() as usize);
        assert!(cut.energy() <= r.energy());
        assert_eq!(cut.t_obs_s, Some(full / 2.0));
        assert!(r.truncate_to_tobs(full + 1.0).is_err());
    }

    #[test]
    fn arithmetic_checks_layout() {
        let r = random_rep(1, 1000.0);
        let mut a = r.clone();
        a.sub(&r).unwrap();
        assert!(a.energy() < 1e-20);
        let other = random_rep(2, 1000.0);
        assert!(a.sub(&other).is_err());
    }
}
