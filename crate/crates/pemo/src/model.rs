//! Full processing chain: ear filtering, gammatone bands, envelope
//! extraction, adaptation, modulation analysis → internal representation.

use crate::modulation::{InternalRepresentation, ModulationFilterbank};
use crate::par::{self, Execution};
use crate::periphery::{
    AdaptationLoops, GammatoneFilterbank, IhcStage, OuterMiddleEar, PeripheralConfig,
};
use crate::signal::AudioSignal;
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelConfig {
    pub peripheral: PeripheralConfig,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::osses2020()
    }
}

impl ModelConfig {
    /// 31 gammatone bands (ERB 3–33), ear filtering on, 770-Hz effective
    /// IHC cutoff, τ = 5…500 ms, overshoot limiter 5.
    pub fn osses2020() -> Self {
        ModelConfig { peripheral: PeripheralConfig::default(), execution: Execution::default() }
    }

    pub fn with_limiter(mut self, limiter_factor: f64) -> Self {
        self.peripheral.limiter_factor = limiter_factor;
        self
    }
}

pub struct Model {
    pub cfg: ModelConfig,
    fs_hz: f64,
    ome: Option<OuterMiddleEar>,
    gtf: GammatoneFilterbank,
    ihc: IhcStage,
    adapt: AdaptationLoops,
    mfb: ModulationFilterbank,
}

impl Model {
    pub fn new(cfg: ModelConfig, fs_hz: f64) -> Result<Self> {
        cfg.peripheral.validate()?;
        let ome = if cfg.peripheral.outer_middle_ear { Some(OuterMiddleEar::new(fs_hz)?) } else { None };
        Ok(Model {
            fs_hz,
            ome,
            gtf: GammatoneFilterbank::new(&cfg.peripheral, fs_hz)?,
            ihc: IhcStage::from_config(&cfg.peripheral),
            adapt: AdaptationLoops::from_config(&cfg.peripheral, fs_hz)?,
            mfb: ModulationFilterbank::new(fs_hz),
            cfg,
        })
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn n_audio_bands(&self) -> usize {
        self.gtf.bands.len()
    }

    /// Outer/middle-ear filtering (identity when disabled).
    pub fn ear_filter(&self, signal: &AudioSignal) -> Result<AudioSignal> {
        match &self.ome {
            Some(ome) => ome.process(signal),
            None => Ok(signal.clone()),
        }
    }

    /// One audio band of the ear-filtered signal through gammatone, IHC,
    /// adaptation, and modulation filtering.
    pub fn band_channels(&self, ear_filtered: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
        let band = &self.gtf.bands[m];
        let env = self.ihc.process(&band.filter(ear_filtered), self.fs_hz);
        let mu = self.adapt.process(&env)?;
        Ok(self.mfb.analyze(&mu, band.fc_hz))
    }

    pub fn representation(&self, signal: &AudioSignal) -> Result<InternalRepresentation> {
        self.representation_windowed(signal, None)
    }

    /// Representation of the first `max_dur_s` seconds. All stages are
    /// causal, so this equals the prefix of the full representation.
    pub fn representation_windowed(
        &self,
        signal: &AudioSignal,
        max_dur_s: Option<f64>,
    ) -> Result<InternalRepresentation> {
        let ear = self.ear_filter(signal)?;
        let samples = match max_dur_s {
            Some(d) => {
                let n = ((d * self.fs_hz).round() as usize).min(ear.samples.len());
                &ear.samples[..n]
            }
            None => &ear.samples[..],
        };
        let per_band = par::map_indexed(self.cfg.execution, self.n_audio_bands(), |m| {
            self.band_channels(samples, m)
        });
        let channels = per_band.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(InternalRepresentation {
            fs_hz: self.fs_hz,
            audio_bands: self
                .gtf
                .bands
                .iter()
                .map(|b| crate::modulation::AudioBandInfo { fc_hz: b.fc_hz, erb_number: b.erb_number })
                .collect(),
            channels,
            t_obs_s: max_dur_s,
        })
    }
}
