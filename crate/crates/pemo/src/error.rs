//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("wav parse error: {0}")]
    WavParse(String),

    #[error("unsupported wav encoding: {0}")]
    WavUnsupported(String),

    #[error("signal is silent (zero RMS), cannot {0}")]
    SilentSignal(&'static str),

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal too short: need {need} samples, have {have}")]
    TooShort { need: usize, have: usize },

    #[error("sample rate {fs} Hz too low: {reason}")]
    SampleRateTooLow { fs: f64, reason: String },

    #[error("negative sample fed to adaptation loops at index {0}")]
    NegativeAdaptationInput(usize),

    #[error("representation layouts differ: {0}")]
    LayoutMismatch(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("staircase did not converge within {max_trials} trials ({reversals} reversals seen)")]
    StaircaseDiverged {
        max_trials: usize,
        reversals: usize,
        /// `(snr_db, correct)` for every trial up to the cap.
        partial_log: Vec<(f64, bool)>,
    },

    #[error("calibration target {target} not bracketed by the sigma grid")]
    CalibrationUnreachable { target: f64 },

    #[error("{0}")]
    Config(String),
}
