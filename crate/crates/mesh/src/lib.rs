//! Simplicial mesh handling for the heart-torso simulator.
//!
//! Meshes are plain indexed simplex soups (triangles in 2D, tetrahedra in 3D)
//! with labeled boundary facets. Two surface labels matter downstream:
//! `LABEL_GAMMA` marks the heart-torso interface and `LABEL_SIGMA_EXT` the
//! insulated exterior torso surface. Everything here is immutable after
//! construction and safe to share across threads.

pub mod factory;
pub mod io;
pub mod locate;
pub mod merge;
pub mod mesh;
mod shell3d;
pub mod vec3;

pub use factory::{IdealGeometrySpec, RigidTransform};
pub use locate::{FacetLocator, SurfaceLocation};
pub use merge::{merge_conforming, MergedMesh};
pub use mesh::{SimplicialMesh, SurfacePatch};

/// Surface label of the heart-torso interface Γ.
pub const LABEL_GAMMA: i32 = 1;
/// Surface label of the exterior torso surface Σ^ext.
pub const LABEL_SIGMA_EXT: i32 = 2;

/// Cells with measure below this are rejected at construction time.
pub const DEGENERATE_VOLUME: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("unknown surface label {0}")]
    UnknownLabel(i32),
    #[error("infeasible geometry spec: {0}")]
    InfeasibleSpec(String),
}
