//! Scratch probe: ICRA version-B equalization residual per band for
//! different fixtures and seeds.

use pemo::icra::{self, IcraVersion};
use pemo::rng::SeedTree;
use pemo::signal::AudioSignal;
use rand::Rng;

fn burst(fs: f64, head_s: f64, dur_s: f64, seed: u64) -> AudioSignal {
    let mut rng = SeedTree::new(seed).child("burst", 0).rng();
    let n = (dur_s * fs) as usize;
    let n0 = (head_s * fs) as usize;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            if i < n0 {
                0.0
            } else {
                let t = (i - n0) as f64 / fs;
                rng.gen_range(-1.0..1.0) * (-t / 0.15).exp()
            }
        })
        .collect();
    let mut s = AudioSignal::new(samples, fs);
    s.set_level_db(70.0).unwrap();
    s
}

fn main() {
    for (label, fs, head, dur) in [
        ("44k-nohead-0.5s", 44100.0, 0.0, 0.5),
        ("44k-head-1.2s", 44100.0, 0.05, 1.2),
        ("20k-head-1.2s", 20000.0, 0.05, 1.2),
    ] {
        for seed in [7u64, 8, 9] {
            let src = burst(fs, head, dur, seed);
            let b = icra::generate_icra_noise(&src, "burst", IcraVersion::B, seed).unwrap();
            let win = (icra::SPECTRUM_WINDOW_S * fs) as usize;
            let centers: Vec<f64> = (3..=33).map(|e| e as f64).collect();
            let bl_src = icra::band_levels(&src.head(win), centers.iter().cloned());
            let bl_b = icra::band_levels(&b.signal.head(win), centers.iter().cloned());
            let resid: Vec<f64> = bl_b
                .iter()
                .zip(&bl_src)
                .map(|(b, s)| if *s >= 30.0 { b - s } else { f64::NAN })
                .collect();
            let worst = resid
                .iter()
                .filter(|v| v.is_finite())
                .cloned()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let first: Vec<String> = resid[..6].iter().map(|v| format!("{v:+.2}")).collect();
            println!("{label} seed {seed}: worst {worst:.2} dB, low bands {first:?}");
        }
    }
}
