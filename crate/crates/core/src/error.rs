use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain where a relation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates an invariant. `path` names the field.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate phase positions: {0}")]
    DegeneratePhases(String),

    #[error("empty tag stream: {0}")]
    EmptyStream(String),

    #[error("window [{lo}, {hi}] ps outside histogram range [{min}, {max}] ps")]
    WindowOutOfRange { lo: f64, hi: f64, min: f64, max: f64 },

    #[error("histogram is already normalized")]
    AlreadyNormalized,

    #[error("cannot normalize: {0}")]
    ZeroNormalization(String),

    #[error("bad magic at byte offset {offset}")]
    BadMagic { offset: u64 },

    #[error("truncated record at byte offset {offset}: {message}")]
    Truncated { offset: u64, message: String },

    #[error("unsorted stream at byte offset {offset}: time {current} ps follows {previous} ps")]
    Unsorted { offset: u64, previous: u64, current: u64 },

    #[error("lock unstable at step {step}: |residual| exceeded pi for {window} consecutive steps (last {residual:.3} rad)")]
    Unstable { step: usize, window: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Error::Config { path: path.into(), message: message.to_string() }
    }

    pub fn domain(message: impl fmt::Display) -> Self {
        Error::Domain(message.to_string())
    }

    /// Prefixes the field path of a configuration error, leaving other
    /// variants untouched.
    pub fn within(self, parent: &str) -> Self {
        match self {
            Error::Config { path, message } => Error::Config { path: format!("{parent}.{path}"), message },
            other => other,
        }
    }

    /// Process exit code: 2 configuration, 3 fit non-convergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) => 3,
            Error::Io(_)
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::Unsorted { .. }
            | Error::Csv(_)
            | Error::Json(_) => 4,
            _ => 2,
        }
    }
}

/// Field check used by the `validate` methods throughout the crate.
pub(crate) fn ensure(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}
