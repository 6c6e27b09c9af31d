//! Small DSP primitives shared across the model stages.

use num_complex::Complex64;

// ===== first-order lowpass (bilinear butterworth) =====

/// First-order Butterworth lowpass, -3 dB exactly at `fc` (bilinear design).
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderLp {
    b0: f64,
    a1: f64,
    z: f64,
}

impl FirstOrderLp {
    pub fn new(fc_hz: f64, fs_hz: f64) -> Self {
        let k = (std::f64::consts::PI * fc_hz / fs_hz).tan();
        Self { b0: k / (1.0 + k), a1: (k - 1.0) / (k + 1.0), z: 0.0 }
    }

    pub fn reset(&mut self) {
        self.z = 0.0;
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        // Direct form II transposed with b = [b0, b0], a = [1, a1].
        let y = self.b0 * x + self.z;
        self.z = self.b0 * x - self.a1 * y;
        y
    }
}

// ===== first-order highpass (dc blocker) =====

/// One-pole DC blocker: `y[n] = p*(y[n-1] + x[n] - x[n-1])`. Exact null at
/// 0 Hz, -3 dB near `fc`.
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderHp {
    p: f64,
    x1: f64,
    y1: f64,
}

impl FirstOrderHp {
    pub fn new(fc_hz: f64, fs_hz: f64) -> Self {
        Self { p: (-2.0 * std::f64::consts::PI * fc_hz / fs_hz).exp(), x1: 0.0, y1: 0.0 }
    }

    pub fn reset(&mut self) {
        self.x1 = 0.0;
        self.y1 = 0.0;
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.p * (self.y1 + x - self.x1);
        self.x1 = x;
        self.y1 = y;
        y
    }
}

// ===== second-order lowpass (bilinear butterworth) =====

/// Second-order Butterworth lowpass biquad, -3 dB at `fc`.
#[derive(Debug, Clone, Copy)]
pub struct SecondOrderLp {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl SecondOrderLp {
    pub fn new(fc_hz: f64, fs_hz: f64) -> Self {
        let k = (std::f64::consts::PI * fc_hz / fs_hz).tan();
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let norm = 1.0 / (1.0 + k / q + k * k);
        Self {
            b0: k * k * norm,
            b1: 2.0 * k * k * norm,
            b2: k * k * norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
            z1: 0.0,
            z2: 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }
}

// ===== complex one-pole resonator =====

/// One-pole complex resonator `w[n] = p*w[n-1] + (1-|p|)*x[n]` with
/// `p = r*exp(i*2*pi*fc/fs)`. Unity gain at the center frequency; half-power
/// bandwidth `bw` set via `r = exp(-pi*bw/fs)`.
#[derive(Debug, Clone, Copy)]
pub struct ComplexResonator {
    pub pole: Complex64,
    gain: f64,
    w: Complex64,
}

impl ComplexResonator {
    pub fn new(fc_hz: f64, bw_hz: f64, fs_hz: f64) -> Self {
        let r = (-std::f64::consts::PI * bw_hz / fs_hz).exp();
        let theta = 2.0 * std::f64::consts::PI * fc_hz / fs_hz;
        Self {
            pole: Complex64::from_polar(r, theta),
            gain: 1.0 - r,
            w: Complex64::new(0.0, 0.0),
        }
    }

    pub fn reset(&mut self) {
        self.w = Complex64::new(0.0, 0.0);
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> Complex64 {
        self.w = self.pole * self.w + Complex64::new(self.gain * x, 0.0);
        self.w
    }
}

// ===== compensated summation =====

/// Neumaier-compensated sum; order-insensitive to ~1 ulp per term.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Running compensated accumulator for streaming sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanAcc {
    sum: f64,
    c: f64,
}

impl KahanAcc {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

// ===== hot-loop helpers =====

/// Unrolled dot product; the trial correlation stage lives on this.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0_f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..n {
        s += a[j] * b[j];
    }
    s
}

/// RMS of a slice (0 for empty input).
pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Amplitude of the `f_hz` component of `x` (single-bin DFT probe).
pub fn probe_amplitude(x: &[f64], f_hz: f64, fs_hz: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f_hz / fs_hz;
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        acc += v * Complex64::from_polar(1.0, -w * n as f64);
    }
    2.0 * acc.norm() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(fs: f64, f: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin()).collect()
    }

    fn steady_gain(filter_out: &[f64], f: f64, fs: f64) -> f64 {
        let skip = filter_out.len() / 2;
        probe_amplitude(&filter_out[skip..], f, fs)
    }

    #[test]
    fn first_order_lp_is_3db_down_at_cutoff() {
        let fs = 44100.0;
        let mut lp = FirstOrderLp::new(2000.0, fs);
        let x = sine(fs, 2000.0, 44100);
        let y: Vec<f64> = x.iter().map(|&v| lp.process(v)).collect();
        let g = steady_gain(&y, 2000.0, fs);
        let db = 20.0 * g.log10();
        assert!((db + 3.01).abs() < 0.1, "gain at cutoff {db} dB");
    }

    #[test]
    fn dc_blocker_kills_dc_and_passes_the_band() {
        let fs = 1000.0;
        let mut hp = FirstOrderHp::new(0.5, fs);
        let mut last = 0.0;
        for _ in 0..8000 {
            last = hp.process(1.0);
        }
        assert!(last.abs() < 1e-6, "dc residue {last}");
        hp.reset();
        let x = sine(fs, 10.0, 8000);
        let y: Vec<f64> = x.iter().map(|&v| hp.process(v)).collect();
        let g = steady_gain(&y, 10.0, fs);
        assert!((g - 1.0).abs() < 0.01, "passband gain {g}");
    }

    #[test]
    fn second_order_lp_passes_dc_and_cuts_at_fc() {
        let fs = 1000.0;
        let mut lp = SecondOrderLp::new(20.0, fs);
        let dc: Vec<f64> = (0..4000).map(|_| lp.process(1.0)).collect();
        assert!((dc.last().unwrap() - 1.0).abs() < 1e-6);
        lp.reset();
        let x = sine(fs, 20.0, 8000);
        let y: Vec<f64> = x.iter().map(|&v| lp.process(v)).collect();
        let db = 20.0 * steady_gain(&y, 20.0, fs).log10();
        assert!((db + 3.01).abs() < 0.1, "gain at cutoff {db} dB");
    }

    #[test]
    fn resonator_has_unity_center_gain_and_expected_bandwidth() {
        let fs = 22050.0;
        let (fc, bw) = (100.0, 50.0);
        for (f, want_db, tol) in [(fc, 0.0, 0.05), (fc - bw / 2.0, -3.01, 0.25), (fc + bw / 2.0, -3.01, 0.25)] {
            let mut r = ComplexResonator::new(fc, bw, fs);
            let x = sine(fs, f, 6 * 22050);
            let y: Vec<Complex64> = x.iter().map(|&v| r.process(v)).collect();
            let tail = &y[y.len() / 2..];
            // complex envelope of a real sine has magnitude amplitude/2 at the pole
            let mean_mag = 2.0 * tail.iter().map(|c| c.norm()).sum::<f64>() / tail.len() as f64;
            let db = 20.0 * mean_mag.log10();
            assert!((db - want_db).abs() < tol, "f={f}: {db} dB vs {want_db}");
        }
    }

    #[test]
    fn kahan_sum_is_stable_against_ordering() {
        let mut v: Vec<f64> = (0..100_000).map(|i| ((i * 2654435761_usize) % 1000) as f64 * 1e-3 - 0.4995).collect();
        let s1 = kahan_sum(v.iter().copied());
        v.reverse();
        let s2 = kahan_sum(v.iter().copied());
        assert!((s1 - s2).abs() < 1e-12, "{s1} vs {s2}");
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..1003).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..1003).map(|i| (i as f64 * 0.7).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }
}
