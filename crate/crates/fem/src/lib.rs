//! P1 finite elements on simplicial meshes and the sparse solvers that go
//! with them: consistent mass, anisotropic stiffness from fiber frames, load
//! vectors, Dirichlet elimination, and Jacobi-preconditioned conjugate
//! gradients with optional constant-nullspace deflation.

pub mod assembly;
pub mod sparse;

pub use assembly::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, build_conduction_tensor,
    harmonic_tensor, lumped_mass, ConductivityField, ConstrainedSystem, FiberFrame, SourceField,
};
pub use sparse::{
    cg_solve, cg_solve_zero_mean, CgReport, CgWorkspace, CsrMatrix, Preconditioner, SolverConfig,
    TripletBuilder,
};

#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite (p'Ap <= 0 at iteration {at_iteration})")]
    NotPositiveDefinite { at_iteration: usize },
    #[error("invalid fiber frame: {0}")]
    InvalidFrame(String),
    #[error("tensor fields do not share an eigenbasis: {0}")]
    MismatchedFrames(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("node {node} constrained twice with different values")]
    ConflictingConstraint { node: usize },
}
