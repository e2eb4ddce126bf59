//! Config-driven front end for the waveguide toolkit.

pub mod config;
pub mod pipeline;

use thiserror::Error;

pub use config::WaveguideConfig;
pub use pipeline::{run, Command, Outcome, RunOptions};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const ASSUMPTIONS: i32 = 2;
    pub const SOLVER: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] waveguide_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use waveguide_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Core(e) => match e {
                E::Input(_) | E::Window(_) | E::Coverage(_) | E::DerivativeOrder { .. } => exit::CONFIG,
                E::Ellipticity { .. } | E::Singularity { .. } => exit::ASSUMPTIONS,
                E::Integration { .. }
                | E::Resolution(_)
                | E::Truncation(_)
                | E::Solver { .. }
                | E::Factorization(_)
                | E::Diagnostics(_) => exit::SOLVER,
            },
        }
    }
}
