use std::path::PathBuf;

use crate::markov::LinkState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("patch of {area_km2} km² holds fewer than one building at {beta_per_km2} buildings/km²")]
    PatchTooSmall { area_km2: f64, beta_per_km2: f64 },

    #[error("footprint side {side_m:.3} m does not fit the {pitch_m:.3} m layout pitch")]
    FootprintTooLarge { side_m: f64, pitch_m: f64 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("state trace needs at least 2 samples, got {0}")]
    TraceTooShort(usize),

    #[error("no transitions observed out of the {0:?} state")]
    UndefinedTransitionRow(LinkState),

    #[error("transition probability out of the {0:?} state is 1 at this step size; rate is unbounded")]
    SaturatedTransition(LinkState),

    #[error("need at least {needed} samples, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },

    #[error("integral did not converge: {0}")]
    Quadrature(String),

    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },

    #[error("config key `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed {what} file: {reason}")]
    Format { what: &'static str, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
