//! Deterministic test and demo stimuli.

use crate::signal::{AudioSignal, RampDirection};

/// Plain sine, amplitude `amp`, duration `dur_s`.
pub fn sine(fs_hz: f64, f_hz: f64, dur_s: f64, amp: f64) -> AudioSignal {
    let n = (dur_s * fs_hz).round() as usize;
    let w = 2.0 * std::f64::consts::PI * f_hz / fs_hz;
    AudioSignal::new((0..n).map(|i| amp * (w * i as f64).sin()).collect(), fs_hz)
}

/// Sine with raised-cosine on/off ramps, set to a calibrated level.
pub fn ramped_tone(fs_hz: f64, f_hz: f64, dur_s: f64, ramp_s: f64, level_db: f64) -> AudioSignal {
    let mut s = sine(fs_hz, f_hz, dur_s, 1.0);
    s.set_level_db(level_db).expect("non-silent tone");
    s.apply_ramp(ramp_s, RampDirection::Up).expect("ramp fits");
    s.apply_ramp(ramp_s, RampDirection::Down).expect("ramp fits");
    s
}

/// Spectral/temporal profile of a [`piano_like`] stimulus.
#[derive(Debug, Clone, Copy)]
pub struct PianoProfile {
    /// Spectral rolloff exponent: harmonic k has amplitude k^-slope.
    pub spectral_slope: f64,
    /// Decay time of the fundamental, seconds.
    pub tau_s: f64,
    /// Extra decay speed-up per harmonic number.
    pub tau_harmonic_factor: f64,
}

/// Built-in profiles covering bright/middle/dark spectral envelopes.
pub fn builtin_profiles() -> [PianoProfile; 3] {
    [
        PianoProfile { spectral_slope: 0.8, tau_s: 0.9, tau_harmonic_factor: 0.25 },
        PianoProfile { spectral_slope: 1.3, tau_s: 0.6, tau_harmonic_factor: 0.45 },
        PianoProfile { spectral_slope: 2.4, tau_s: 0.4, tau_harmonic_factor: 0.75 },
    ]
}

/// Damped harmonic complex on a 554-Hz fundamental; 1.3 s total with the note
/// starting at 0.1 s and a 150-ms raised-cosine tail.
///
/// Deterministic (no RNG); distinct profiles give audibly distinct spectral
/// envelopes and decay patterns, which is what the discrimination harness
/// needs from a stand-in stimulus set.
pub fn piano_like(fs_hz: f64, profile: PianoProfile, level_db: f64) -> AudioSignal {
    let f0 = 554.365; // C#5
    let total_s = 1.3;
    let onset_s = 0.1;
    let attack_s = 0.004;
    let n = (total_s * fs_hz).round() as usize;
    let n_onset = (onset_s * fs_hz).round() as usize;
    let mut samples = vec![0.0_f64; n];
    let max_harmonic = ((fs_hz / 2.0 - 200.0) / f0).floor() as usize;
    for k in 1..=max_harmonic.min(13) {
        let kf = k as f64;
        let amp = kf.powf(-profile.spectral_slope);
        let tau = profile.tau_s / (1.0 + profile.tau_harmonic_factor * (kf - 1.0));
        // slight stretch so partials drift like a stiff string
        let f = f0 * kf * (1.0 + 1.1e-4 * kf * kf);
        if f >= fs_hz / 2.0 {
            break;
        }
        let w = 2.0 * std::f64::consts::PI * f / fs_hz;
        let phase0 = 0.37 * kf; // fixed per-harmonic phase offset
        for i in n_onset..n {
            let t = (i - n_onset) as f64 / fs_hz;
            let attack = if t < attack_s { t / attack_s } else { 1.0 };
            samples[i] += amp * attack * (-t / tau).exp() * (w * i as f64 + phase0).sin();
        }
    }
    let mut sig = AudioSignal::new(samples, fs_hz);
    sig.onset_s = Some(onset_s);
    sig.apply_ramp(0.150, RampDirection::Down).expect("ramp fits");
    sig.set_level_db(level_db).expect("non-silent");
    sig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piano_like_is_deterministic_and_calibrated() {
        let fs = 20000.0;
        let p = builtin_profiles()[0];
        let a = piano_like(fs, p, 70.0);
        let b = piano_like(fs, p, 70.0);
        assert_eq!(a.samples, b.samples);
        assert!((a.level_db().unwrap() - 70.0).abs() < 1e-9);
        assert_eq!(a.len(), 26000);
        // silent before the note onset
        assert!(a.samples[..1999].iter().all(|&v| v == 0.0));
        assert!(a.samples[2100..2300].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn profiles_are_spectrally_distinct() {
        let fs = 20000.0;
        let [p0, _, p2] = builtin_profiles();
        let bright = piano_like(fs, p0, 70.0);
        let dark = piano_like(fs, p2, 70.0);
        // compare 5th-harmonic to fundamental ratio
        let hi = |s: &AudioSignal| {
            let seg = &s.samples[2205..12205];
            crate::dsp::probe_amplitude(seg, 554.365 * 5.0 * (1.0 + 1.1e-4 * 25.0), fs)
                / crate::dsp::probe_amplitude(seg, 554.365 * (1.0 + 1.1e-4), fs)
        };
        assert!(hi(&bright) > 4.0 * hi(&dark), "bright {} vs dark {}", hi(&bright), hi(&dark));
    }
}
