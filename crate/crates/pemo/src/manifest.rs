//! Stimulus manifest: a TOML file listing the sounds of an experiment.
//!
//! ```toml
//! [[stimuli]]
//! id = "P1"
//! path = "p1.wav"
//! onset_s = 0.1
//! level_db = 70.0
//! ```
//!
//! Paths are resolved relative to the manifest file. The onset time is trusted
//! as given and recorded on the loaded signal.

use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use crate::wav;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StimulusEntry {
    pub id: String,
    pub path: PathBuf,
    pub onset_s: f64,
    pub level_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub stimuli: Vec<StimulusEntry>,
}

impl Manifest {
    pub fn from_str(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        if m.stimuli.is_empty() {
            return Err(Error::Manifest("no stimuli listed".into()));
        }
        let mut ids: Vec<&str> = m.stimuli.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != m.stimuli.len() {
            return Err(Error::Manifest("duplicate stimulus ids".into()));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn entry(&self, id: &str) -> Result<&StimulusEntry> {
        self.stimuli
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Manifest(format!("unknown stimulus id {id:?}")))
    }
}

/// Load a stimulus WAV, scale it to the manifest level, and record its onset.
pub fn load_stimulus(entry: &StimulusEntry, base_dir: &Path) -> Result<AudioSignal> {
    let path = if entry.path.is_absolute() { entry.path.clone() } else { base_dir.join(&entry.path) };
    let mut sig = wav::read_wav(&path)?;
    sig.set_level_db(entry.level_db)?;
    sig.onset_s = Some(entry.onset_s);
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let text = r#"
            [[stimuli]]
            id = "P1"
            path = "a.wav"
            onset_s = 0.1
            level_db = 70.0

            [[stimuli]]
            id = "P2"
            path = "b.wav"
            onset_s = 0.1
            level_db = 70.0
        "#;
        let m = Manifest::from_str(text).unwrap();
        assert_eq!(m.stimuli.len(), 2);
        assert_eq!(m.entry("P2").unwrap().path, PathBuf::from("b.wav"));
        assert!(m.entry("P9").is_err());
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let dup = r#"
            [[stimuli]]
            id = "P1"
            path = "a.wav"
            onset_s = 0.0
            level_db = 60.0

            [[stimuli]]
            id = "P1"
            path = "b.wav"
            onset_s = 0.0
            level_db = 60.0
        "#;
        assert!(Manifest::from_str(dup).is_err());
        assert!(Manifest::from_str("stimuli = []").is_err());
    }

    #[test]
    fn loads_scaled_signal_with_onset() {
        let dir = tempfile::tempdir().unwrap();
        let sig = crate::synth::sine(22050.0, 440.0, 0.1, 0.5);
        wav::write_wav(dir.path().join("s.wav"), &sig).unwrap();
        let entry = StimulusEntry {
            id: "S".into(),
            path: "s.wav".into(),
            onset_s: 0.02,
            level_db: 65.0,
        };
        let loaded = load_stimulus(&entry, dir.path()).unwrap();
        assert!((loaded.level_db().unwrap() - 65.0).abs() < 1e-6);
        assert_eq!(loaded.onset_s, Some(0.02));
    }
}
