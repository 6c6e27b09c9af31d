//! ERB-number scale (equivalent rectangular bandwidth, normal hearing).
//!
//! Uses the natural-log form of the Glasberg & Moore scale,
//! `erb(f) = SCALE * ln(1 + C * f)` with `SCALE = 1/(24.7 * C)`.

/// 0.00437 = 4.37/1000 from the ERB bandwidth formula.
const C: f64 = 0.00437;
/// 1 / (24.7 * 0.00437), i.e. the integral scale of 1/erb_bandwidth.
const SCALE: f64 = 9.2645;

/// ERB number for a frequency in Hz.
pub fn hz_to_erb(f_hz: f64) -> f64 {
    SCALE * (1.0 + C * f_hz).ln()
}

/// Center frequency in Hz for an ERB number.
pub fn erb_to_hz(erb: f64) -> f64 {
    ((erb / SCALE).exp() - 1.0) / C
}

/// ERB bandwidth in Hz at a given center frequency.
pub fn erb_bandwidth_hz(f_hz: f64) -> f64 {
    24.7 * (1.0 + C * f_hz)
}

/// Integer-step ERB grid `lo..=hi` (1-ERB spacing) as center frequencies.
pub fn erb_space(lo: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo).round() as usize) + 1;
    (0..n).map(|i| erb_to_hz(lo + i as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erb_grid_endpoints_match_published_centers() {
        // 31 bands between ~87 Hz (3 ERB) and ~7.8 kHz (33 ERB).
        let lo = erb_to_hz(3.0);
        let hi = erb_to_hz(33.0);
        assert!((lo - 87.0).abs() / 87.0 < 0.01, "lo = {lo}");
        assert!((hi - 7819.0).abs() / 7819.0 < 0.01, "hi = {hi}");
        let mid = erb_to_hz(11.0);
        assert!((mid - 520.0).abs() / 520.0 < 0.01, "mid = {mid}");
    }

    #[test]
    fn round_trip_is_identity() {
        for f in [50.0, 554.0, 1000.0, 7819.0] {
            let back = erb_to_hz(hz_to_erb(f));
            assert!((back - f).abs() < 1e-9 * f.max(1.0));
        }
    }

    #[test]
    fn erb_space_has_expected_len_and_order() {
        let g = erb_space(3.0, 33.0);
        assert_eq!(g.len(), 31);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
