//! Heart-torso coupling and signal extraction.
//!
//! The torso is a passive volume conductor slaved to the heart: every m-th
//! EP step the extracellular potential is transferred to the torso cavity
//! boundary through the interpolation operator built in [`interface`] and a
//! Laplace problem is solved in [`torso`]. [`staggered`] orchestrates that
//! one-way pipeline; [`fcht`] is the monolithic reference that solves heart
//! and torso as one block system each EP step. [`outputs`] turns torso
//! potentials into 12-lead traces, body-surface maps, and the comparison
//! metrics used to score one run against another.

pub mod fcht;
pub mod interface;
pub mod outputs;
pub mod staggered;
pub mod torso;

pub use fcht::{run_fcht, FchtStepper};
pub use interface::{interpolate_interface, InterfaceMap, InterfaceNode};
pub use outputs::{
    bspm_l2, cc, compare_modes, limb_leads, precordial_leads, rmse, surface_lumped_weights,
    wilson_central_terminal, ElectrodeSet, ModeComparison, ResolvedElectrodes, TraceSet,
    ELECTRODE_NAMES, LEAD_NAMES,
};
pub use staggered::{
    run_coupled, run_staggered, CoupledConfig, CoupledRun, CouplingMode, PhaseTimings,
};
pub use torso::{solve_torso, TorsoSolver};

#[derive(Debug, thiserror::Error)]
pub enum CouplingError {
    #[error(transparent)]
    Mesh(#[from] cardiowave_mesh::MeshError),
    #[error(transparent)]
    Fem(#[from] cardiowave_fem::FemError),
    #[error(transparent)]
    Ep(#[from] cardiowave_ep::EpError),
    #[error("interface map: {0}")]
    Interface(String),
    #[error("invalid coupling configuration: {0}")]
    InvalidConfig(String),
    #[error("electrode setup: {0}")]
    Electrode(String),
    #[error("series are not comparable: {0}")]
    GridMismatch(String),
    #[error("metric undefined: {0}")]
    DegenerateMetric(String),
}
