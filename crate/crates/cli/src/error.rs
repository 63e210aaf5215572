use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const CLEAN: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const UNRECOVERABLE: i32 = 3;
    /// Run completed, but at least one step was accepted at the sweep cap.
    pub const CAPPED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerics(#[from] resilient_sdc::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use resilient_sdc::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Numerics(E::InvalidArgument(_) | E::ShapeMismatch { .. }) => exit::CONFIG,
            CliError::Numerics(_) => exit::UNRECOVERABLE,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
