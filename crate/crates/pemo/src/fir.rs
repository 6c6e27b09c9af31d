//! Linear-phase FIR design from magnitude anchors (frequency sampling).

use crate::spectrum::interp_log_f;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Design an `n_taps`-tap linear-phase FIR whose magnitude response follows
/// the `(f_hz, gain_db)` anchors, interpolated linearly in dB over log
/// frequency. The response is clamped to the edge anchors outside their
/// range. A Hann window tapers the truncated impulse response.
pub fn design_from_anchors(anchors: &[(f64, f64)], n_taps: usize, fs_hz: f64) -> Vec<f64> {
    assert!(n_taps >= 2 && !anchors.is_empty());
    let m = (8 * n_taps).next_power_of_two();
    let delay = (n_taps - 1) as f64 / 2.0;
    let mut spec = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..=m / 2 {
        let f = k as f64 * fs_hz / m as f64;
        let mag = 10f64.powf(interp_log_f(anchors, f) / 20.0);
        let phase = -2.0 * PI * k as f64 * delay / m as f64;
        let v = Complex64::from_polar(mag, phase);
        spec[k] = v;
        if k != 0 && k != m / 2 {
            spec[m - k] = v.conj();
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut spec);
    let mut h: Vec<f64> = spec[..n_taps].iter().map(|c| c.re / m as f64).collect();
    for (n, v) in h.iter_mut().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * n as f64 / (n_taps - 1) as f64).cos();
        *v *= w;
    }
    h
}

/// Complex frequency response of an FIR at a single frequency.
pub fn response_at(taps: &[f64], f_hz: f64, fs_hz: f64) -> Complex64 {
    let w = 2.0 * PI * f_hz / fs_hz;
    taps.iter()
        .enumerate()
        .map(|(n, &h)| h * Complex64::from_polar(1.0, -w * n as f64))
        .sum()
}

/// Magnitude response in dB at a single frequency.
pub fn gain_db_at(taps: &[f64], f_hz: f64, fs_hz: f64) -> f64 {
    20.0 * response_at(taps, f_hz, fs_hz).norm().log10()
}
