//! Command-line front end: experiment configuration, orchestration, and
//! CSV/VTK/JSON artifact emission for the heart-torso simulator.
//!
//! The binary exposes four subcommands (`genmesh`, `simulate`, `compare`,
//! `sweep`); this library holds their implementations so integration tests
//! can drive them in-process. Exit codes: 0 success, 2 configuration or
//! input error, 3 solver failure. `CARDIO_THREADS` caps the number of sweep
//! variants running concurrently (default 1); everything else is
//! single-threaded by construction.

pub mod artifacts;
pub mod commands;
pub mod config;

use cardiowave_coupling::CouplingError;
use cardiowave_ep::EpError;
use cardiowave_fem::FemError;
use cardiowave_mesh::MeshError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 3 when a linear solve failed, 2 for everything
    /// else that is not a success.
    pub fn exit_code(&self) -> u8 {
        if self.is_solver_failure() {
            3
        } else {
            2
        }
    }

    fn is_solver_failure(&self) -> bool {
        fn fem(e: &FemError) -> bool {
            matches!(
                e,
                FemError::NoConvergence { .. } | FemError::NotPositiveDefinite { .. }
            )
        }
        match self {
            CliError::Coupling(CouplingError::Fem(e)) => fem(e),
            CliError::Coupling(CouplingError::Ep(EpError::Fem(e))) => fem(e),
            _ => false,
        }
    }
}
