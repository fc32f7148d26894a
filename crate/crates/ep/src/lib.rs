//! Cardiac tissue electrophysiology: ionic membrane kinetics under an IMEX
//! split, BDF2 reaction-diffusion integration, and drivers for the
//! monodomain, bidomain, and pseudo-bidomain tissue models with zero-mean
//! extracellular recovery.

pub mod driver;
pub mod membrane;
pub mod stepper;
pub mod stimulus;
pub mod velocity;

pub use driver::{
    assemble_ep_system, recover_extracellular, run_cardiac, run_cardiac_with_system,
    EpParameters, EpSystem, EpTimeline, ExtracellularRecovery, ModelKind,
};
pub use membrane::{IonicState, MembraneModel, MembraneModelSpec, TwoVariableModel};
pub use stepper::{extrapolate_vm, BidomainStepper, ReactionDiffusionStepper};
pub use stimulus::{Stimulus, StimulusProtocol};
pub use velocity::{conductivity_scale, measure_cv, scale_sigma, strip_cv};

#[derive(Debug, thiserror::Error)]
pub enum EpError {
    #[error(transparent)]
    Fem(#[from] cardiowave_fem::FemError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot extrapolate from an empty history")]
    EmptyHistory,
    #[error("conduction velocity fit failed: {0}")]
    VelocityFit(String),
}
