use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Dataset(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] wmbench_core::Error),
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        use wmbench_core::Error as E;
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Dataset(_) => "dataset",
            HarnessError::Io { .. } => "io",
            HarnessError::Core(e) => match e {
                E::InvalidParameter(_) | E::Parse(_) => "parameter",
                E::Capacity { .. } => "capacity",
                E::DimensionMismatch { .. } => "shape",
                E::Decode { .. } => "decode",
                E::Io(_) => "io",
                E::InsufficientCorpus { .. } | E::SingularFilter { .. } | E::Stage { .. } => "compute",
            },
        }
    }

    /// Process exit code; each category has its own. 2 is left to
    /// command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 3,
            "dataset" => 4,
            "io" => 5,
            "parameter" => 6,
            "capacity" => 7,
            "shape" => 8,
            "decode" => 9,
            _ => 10,
        }
    }
}
