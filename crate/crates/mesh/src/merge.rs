//! Merging a conforming heart/torso pair into one watertight mesh.
//!
//! Vertices are identified by exact coordinate bit patterns, which the
//! geometry factory guarantees for conforming pairs. The interface facets of
//! both meshes become interior faces and are dropped; the merged boundary is
//! whatever remains single-use (the exterior torso surface).

use crate::mesh::SimplicialMesh;
use crate::{MeshError, LABEL_GAMMA};
use std::collections::HashMap;

pub struct MergedMesh {
    pub mesh: SimplicialMesh,
    /// Heart vertex ids map to merged ids unchanged (0..heart.n_vertices()).
    pub n_heart_vertices: usize,
    /// Torso vertex id -> merged vertex id.
    pub torso_vertex: Vec<u32>,
}

pub fn merge_conforming(
    heart: &SimplicialMesh,
    torso: &SimplicialMesh,
) -> Result<MergedMesh, MeshError> {
    if heart.dim() != torso.dim() {
        return Err(MeshError::Invalid(format!(
            "dimension mismatch: heart is {}D, torso is {}D",
            heart.dim(),
            torso.dim()
        )));
    }
    let dim = heart.dim();
    let nv_h = heart.n_vertices();

    let key = |p: [f64; 3]| [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
    let mut by_coord: HashMap<[u64; 3], u32> = HashMap::with_capacity(nv_h);
    for v in 0..nv_h {
        by_coord.insert(key(heart.vertex(v)), v as u32);
    }

    let mut vertices: Vec<[f64; 3]> = heart.vertices().to_vec();
    let mut torso_vertex = Vec::with_capacity(torso.n_vertices());
    let mut shared = 0usize;
    for v in 0..torso.n_vertices() {
        let p = torso.vertex(v);
        match by_coord.get(&key(p)) {
            Some(&id) => {
                shared += 1;
                torso_vertex.push(id);
            }
            None => {
                torso_vertex.push(vertices.len() as u32);
                vertices.push(p);
            }
        }
    }

    let gamma_h = heart.surface_vertices(LABEL_GAMMA).len();
    let gamma_t = torso.surface_vertices(LABEL_GAMMA).len();
    if shared != gamma_h || shared != gamma_t {
        return Err(MeshError::Invalid(format!(
            "meshes are not conforming: {shared} coincident vertices, heart interface has \
             {gamma_h}, torso interface has {gamma_t}"
        )));
    }

    let mut cells: Vec<u32> = Vec::with_capacity(heart.n_cells() * (dim + 1) + torso.n_cells() * (dim + 1));
    let mut regions: Vec<i32> = Vec::with_capacity(heart.n_cells() + torso.n_cells());
    for c in 0..heart.n_cells() {
        cells.extend_from_slice(heart.cell(c));
        regions.push(heart.cell_region(c));
    }
    for c in 0..torso.n_cells() {
        for &v in torso.cell(c) {
            cells.push(torso_vertex[v as usize]);
        }
        regions.push(torso.cell_region(c));
    }

    // Face-use counts over the merged cell set decide which input facets
    // survive as boundary.
    let mut face_count: HashMap<Vec<u32>, usize> = HashMap::new();
    let k = dim + 1;
    for c in 0..regions.len() {
        let cell = &cells[c * k..(c + 1) * k];
        for skip in 0..k {
            let mut face: Vec<u32> = (0..k).filter(|&i| i != skip).map(|i| cell[i]).collect();
            face.sort_unstable();
            *face_count.entry(face).or_insert(0) += 1;
        }
    }

    let mut facets: Vec<u32> = Vec::new();
    let mut labels: Vec<i32> = Vec::new();
    let mut kept: HashMap<Vec<u32>, ()> = HashMap::new();
    let mut push_facet = |ids: Vec<u32>, label: i32| {
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if face_count.get(&sorted) == Some(&1) && kept.insert(sorted, ()).is_none() {
            facets.extend_from_slice(&ids);
            labels.push(label);
        }
    };
    for f in 0..heart.n_facets() {
        push_facet(heart.facet(f).to_vec(), heart.facet_label(f));
    }
    for f in 0..torso.n_facets() {
        let ids: Vec<u32> = torso.facet(f).iter().map(|&v| torso_vertex[v as usize]).collect();
        push_facet(ids, torso.facet_label(f));
    }

    let single_use = face_count.values().filter(|&&n| n == 1).count();
    if single_use != labels.len() {
        return Err(MeshError::Invalid(format!(
            "merged mesh is not watertight: {single_use} boundary faces but only {} labeled",
            labels.len()
        )));
    }

    let mesh = SimplicialMesh::new(dim, vertices, cells, regions, facets, labels)?;
    Ok(MergedMesh { mesh, n_heart_vertices: nv_h, torso_vertex })
}
