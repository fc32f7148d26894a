//! Transfer of heart boundary values onto the torso cavity nodes.
//!
//! Each torso interface node is bound once to its closest heart boundary
//! facet (clamped projection, never extrapolated) and afterwards samples
//! heart fields through fixed convex barycentric weights. The projection
//! distance is recorded per node: zero up to rounding on conforming pairs,
//! and a direct measure of geometric mismatch otherwise.

use crate::CouplingError;
use cardiowave_mesh::mesh::{SimplicialMesh, SurfacePatch};
use cardiowave_mesh::{FacetLocator, LABEL_GAMMA};

/// One torso interface node bound to its host heart boundary facet.
#[derive(Debug, Clone)]
pub struct InterfaceNode {
    /// Torso mesh vertex id.
    pub torso_vertex: usize,
    /// Patch-local facet index on the heart boundary.
    pub facet: usize,
    /// Heart vertex ids of the host facet corners. In 2D the facet is a
    /// segment and entry 2 repeats entry 0 with weight 0.
    pub vertices: [u32; 3],
    /// Convex barycentric weights, summing to 1.
    pub weights: [f64; 3],
    /// Distance from the torso node to its projection, mm.
    pub distance: f64,
}

/// Total map from the torso's GAMMA-labeled nodes to the heart boundary.
#[derive(Debug, Clone)]
pub struct InterfaceMap {
    nodes: Vec<InterfaceNode>,
    max_distance: f64,
    mean_distance: f64,
}

impl InterfaceMap {
    /// Binds every GAMMA-labeled torso vertex to the heart boundary patch.
    /// Nodes are listed in ascending torso vertex order.
    pub fn build(
        heart_boundary: &SurfacePatch,
        torso: &SimplicialMesh,
    ) -> Result<Self, CouplingError> {
        if heart_boundary.n_facets() == 0 {
            return Err(CouplingError::Interface(
                "heart boundary patch is empty".into(),
            ));
        }
        let gamma = torso.surface_vertices(LABEL_GAMMA);
        if gamma.is_empty() {
            return Err(CouplingError::Interface(
                "torso mesh has no interface-labeled nodes".into(),
            ));
        }

        let locator = FacetLocator::new(heart_boundary);
        let mut nodes = Vec::with_capacity(gamma.len());
        let mut max_distance: f64 = 0.0;
        let mut sum = 0.0;
        for v in gamma {
            let loc = locator.locate(torso.vertex(v));
            let fv = heart_boundary.facet_vertices(loc.facet);
            let mut vertices = [fv[0]; 3];
            for (k, &id) in fv.iter().enumerate() {
                vertices[k] = id;
            }
            max_distance = max_distance.max(loc.distance);
            sum += loc.distance;
            nodes.push(InterfaceNode {
                torso_vertex: v,
                facet: loc.facet,
                vertices,
                weights: loc.weights,
                distance: loc.distance,
            });
        }
        let mean_distance = sum / nodes.len() as f64;
        Ok(Self { nodes, max_distance, mean_distance })
    }

    pub fn nodes(&self) -> &[InterfaceNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mapped torso vertex ids, in node order (ascending).
    pub fn torso_vertices(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.torso_vertex).collect()
    }

    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }

    pub fn mean_distance(&self) -> f64 {
        self.mean_distance
    }
}

/// Applies the transfer operator: one Dirichlet value per mapped torso node,
/// in map node order. Linear in `ue`, reproduces constants, and each value
/// stays inside the range of `ue` over the host facet (convex weights).
pub fn interpolate_interface(map: &InterfaceMap, ue: &[f64]) -> Vec<f64> {
    map.nodes
        .iter()
        .map(|n| {
            n.weights
                .iter()
                .zip(&n.vertices)
                .map(|(w, &v)| w * ue[v as usize])
                .sum()
        })
        .collect()
}
