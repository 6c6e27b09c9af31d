//! FFT-backed helpers: fast convolution, analytic signal, spectral shaping.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    fft.process(buf);
    if inverse {
        let scale = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Causal FIR filtering via FFT: returns the first `x.len()` samples of the
/// full convolution of `x` with `kernel`.
pub fn convolve_causal(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    if x.is_empty() || kernel.is_empty() {
        return vec![0.0; x.len()];
    }
    let full = x.len() + kernel.len() - 1;
    let m = full.next_power_of_two();
    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(m, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(m, Complex64::new(0.0, 0.0));
    fft_in_place(&mut a, false);
    fft_in_place(&mut b, false);
    for (va, vb) in a.iter_mut().zip(&b) {
        *va *= vb;
    }
    fft_in_place(&mut a, true);
    a[..x.len()].iter().map(|c| c.re).collect()
}

/// Analytic signal (positive-frequency spectrum doubled, negatives zeroed).
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            // DC and Nyquist stay as-is
        } else if k < half || (n % 2 == 1 && k == half) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_in_place(&mut buf, true);
    buf
}

/// Magnitude of the analytic signal.
pub fn envelope(x: &[f64]) -> Vec<f64> {
    analytic_signal(x).iter().map(|c| c.norm()).collect()
}

/// Apply a zero-phase spectral gain defined by `(f_hz, gain_db)` anchors,
/// interpolated linearly in dB over log-frequency and clamped outside the
/// anchor range.
pub fn apply_spectral_gain_db(x: &[f64], fs_hz: f64, anchors: &[(f64, f64)]) -> Vec<f64> {
    assert!(!anchors.is_empty(), "need at least one gain anchor");
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    for (k, v) in buf.iter_mut().enumerate() {
        // bins above n/2 mirror the negative frequencies
        let f = if 2 * k <= n { k as f64 } else { (n - k) as f64 } * fs_hz / n as f64;
        let g = 10f64.powf(interp_log_f(anchors, f) / 20.0);
        *v *= g;
    }
    fft_in_place(&mut buf, true);
    buf.iter().map(|c| c.re).collect()
}

/// Peak of the normalized cross-correlation |Σ x[n]·y[n+τ]| / √(Ex·Ey)
/// over all lags. 1.0 for identical signals, ~0 for unrelated ones.
pub fn xcorr_peak(x: &[f64], y: &[f64]) -> f64 {
    let ex: f64 = x.iter().map(|v| v * v).sum();
    let ey: f64 = y.iter().map(|v| v * v).sum();
    if ex == 0.0 || ey == 0.0 {
        return 0.0;
    }
    let m = (x.len() + y.len() - 1).next_power_of_two();
    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(m, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(m, Complex64::new(0.0, 0.0));
    fft_in_place(&mut a, false);
    fft_in_place(&mut b, false);
    for (va, vb) in a.iter_mut().zip(&b) {
        *va = va.conj() * vb;
    }
    fft_in_place(&mut a, true);
    a.iter().map(|c| c.re.abs()).fold(0.0, f64::max) / (ex * ey).sqrt()
}

/// Piecewise-linear interpolation of dB values over log2 frequency.
pub fn interp_log_f(anchors: &[(f64, f64)], f_hz: f64) -> f64 {
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if f_hz <= first.0 {
        return first.1;
    }
    if f_hz >= last.0 {
        return last.1;
    }
    let lf = f_hz.log2();
    for w in anchors.windows(2) {
        let (f0, g0) = w[0];
        let (f1, g1) = w[1];
        if f_hz <= f1 {
            let t = (lf - f0.log2()) / (f1.log2() - f0.log2());
            return g0 + t * (g1 - g0);
        }
    }
    last.1
}
