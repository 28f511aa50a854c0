use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model or solver parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed to reach its contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("polarization lost: squeezing frame undefined (|<J>| = {norm:.3e})")]
    FrameUndefined { norm: f64 },

    #[error("extend time window: {0} minimum lies on the grid boundary")]
    ExtendWindow(&'static str),

    #[error("memory guard: {what} needs {required} bytes, limit is {limit} bytes")]
    Memory {
        what: String,
        required: u64,
        limit: u64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Memory { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::Numerical(_)
            | Error::FrameUndefined { .. }
            | Error::ExtendWindow(_)
            | Error::InsufficientData(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
