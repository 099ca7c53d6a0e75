use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("syntax error on line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("detection error: {0}")]
    Detection(String),

    /// A density-matrix invariant was breached during integration.
    #[error("numerical instability at t = {t_us} us{}: {what}", delta_suffix(.delta_khz))]
    Numerical {
        t_us: f64,
        delta_khz: Option<f64>,
        what: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn delta_suffix(delta: &Option<f64>) -> String {
    match delta {
        Some(d) => format!(" (delta = {d} kHz)"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach the detuning of the failing group to a numerical error.
    pub fn with_delta(self, delta_khz: f64) -> Self {
        match self {
            Error::Numerical { t_us, what, .. } => Error::Numerical {
                t_us,
                delta_khz: Some(delta_khz),
                what,
            },
            other => other,
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }
}
