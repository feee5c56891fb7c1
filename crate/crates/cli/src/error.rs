use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Solver(#[from] rosenau::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 usage/config, 3 divergence, 4 non-convergence in strict mode,
    /// 1 for I/O failures.
    pub fn exit_code(&self) -> u8 {
        use rosenau::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Solver(e) => match e {
                E::NonConvergence { .. } => 4,
                E::Divergence { .. } | E::Numeric(_) | E::ImaginaryResidue { .. } => 3,
                E::Observer(_) => 1,
                _ => 2,
            },
        }
    }
}
