//! Core simplicial mesh type and boundary surface extraction.

use crate::vec3::{self, Vec3};
use crate::{MeshError, DEGENERATE_VOLUME};
use std::collections::HashMap;

/// An unstructured simplicial mesh: triangles in 2D, tetrahedra in 3D.
///
/// Vertex coordinates are millimetres. Cells are stored flat, `dim + 1`
/// indices per cell, and are canonically oriented so every signed measure is
/// strictly positive. Boundary facets (`dim` indices each) carry an integer
/// surface label; each facet must be a face of exactly one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec3>,
    cells: Vec<u32>,
    cell_region: Vec<i32>,
    facets: Vec<u32>,
    facet_label: Vec<i32>,
}

impl SimplicialMesh {
    /// Build a mesh from raw arrays, canonically orienting cells and checking
    /// every structural invariant. `cells` holds `dim + 1` indices per cell,
    /// `facets` holds `dim` indices per facet.
    pub fn new(
        dim: usize,
        vertices: Vec<Vec3>,
        mut cells: Vec<u32>,
        cell_region: Vec<i32>,
        facets: Vec<u32>,
        facet_label: Vec<i32>,
    ) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        let nv = vertices.len();
        let cell_len = dim + 1;
        if cells.len() % cell_len != 0 {
            return Err(MeshError::Invalid(format!(
                "cell array length {} is not a multiple of {cell_len}",
                cells.len()
            )));
        }
        if facets.len() % dim != 0 {
            return Err(MeshError::Invalid(format!(
                "facet array length {} is not a multiple of {dim}",
                facets.len()
            )));
        }
        let nc = cells.len() / cell_len;
        let nf = facets.len() / dim;
        if cell_region.len() != nc {
            return Err(MeshError::Invalid(format!(
                "have {nc} cells but {} region labels",
                cell_region.len()
            )));
        }
        if facet_label.len() != nf {
            return Err(MeshError::Invalid(format!(
                "have {nf} facets but {} surface labels",
                facet_label.len()
            )));
        }
        for (i, &v) in cells.iter().enumerate() {
            if v as usize >= nv {
                return Err(MeshError::Invalid(format!(
                    "cell {} references vertex {v} but the mesh has {nv} vertices",
                    i / cell_len
                )));
            }
        }
        for (i, &v) in facets.iter().enumerate() {
            if v as usize >= nv {
                return Err(MeshError::Invalid(format!(
                    "facet {} references vertex {v} but the mesh has {nv} vertices",
                    i / dim
                )));
            }
        }

        // Canonical orientation: swap two vertices whenever the signed
        // measure comes out negative, then reject degenerate cells.
        for c in 0..nc {
            let s = signed_measure(dim, &vertices, &cells[c * cell_len..(c + 1) * cell_len]);
            if s < 0.0 {
                cells.swap(c * cell_len, c * cell_len + 1);
            }
            let s = signed_measure(dim, &vertices, &cells[c * cell_len..(c + 1) * cell_len]);
            if s < DEGENERATE_VOLUME {
                return Err(MeshError::Invalid(format!(
                    "cell {c} is degenerate (measure {s:.3e})"
                )));
            }
        }

        let mesh = Self { dim, vertices, cells, cell_region, facets, facet_label };

        // Every boundary facet must be a face of exactly one cell.
        let face_counts = mesh.face_use_counts();
        for f in 0..nf {
            let key = sorted_key(mesh.facet(f));
            match face_counts.get(&key) {
                Some(&(count, _)) if count == 1 => {}
                Some(&(count, _)) => {
                    return Err(MeshError::Invalid(format!(
                        "boundary facet {f} is shared by {count} cells"
                    )))
                }
                None => {
                    return Err(MeshError::Invalid(format!(
                        "boundary facet {f} is not a face of any cell"
                    )))
                }
            }
        }

        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cell(&self, c: usize) -> &[u32] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cell_region(&self, c: usize) -> i32 {
        self.cell_region[c]
    }

    pub fn facet(&self, f: usize) -> &[u32] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn facet_label(&self, f: usize) -> i32 {
        self.facet_label[f]
    }

    /// Measure of cell `c`: area in 2D, volume in 3D (always positive).
    pub fn cell_measure(&self, c: usize) -> f64 {
        signed_measure(self.dim, &self.vertices, self.cell(c))
    }

    /// Measure of boundary facet `f`: length in 2D, area in 3D.
    pub fn facet_measure(&self, f: usize) -> f64 {
        let fv = self.facet(f);
        match self.dim {
            2 => vec3::dist(self.vertices[fv[0] as usize], self.vertices[fv[1] as usize]),
            _ => {
                let a = self.vertices[fv[0] as usize];
                let b = self.vertices[fv[1] as usize];
                let c = self.vertices[fv[2] as usize];
                0.5 * vec3::norm(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)))
            }
        }
    }

    pub fn cell_centroid(&self, c: usize) -> Vec3 {
        let k = self.dim + 1;
        let mut acc = [0.0; 3];
        for &v in self.cell(c) {
            acc = vec3::add(acc, self.vertices[v as usize]);
        }
        vec3::scale(acc, 1.0 / k as f64)
    }

    pub fn facet_centroid(&self, f: usize) -> Vec3 {
        let mut acc = [0.0; 3];
        for &v in self.facet(f) {
            acc = vec3::add(acc, self.vertices[v as usize]);
        }
        vec3::scale(acc, 1.0 / self.dim as f64)
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_measure(c)).sum()
    }

    /// All vertex indices appearing in facets carrying `label`, sorted.
    pub fn surface_vertices(&self, label: i32) -> Vec<usize> {
        let mut seen = vec![false; self.n_vertices()];
        for f in 0..self.n_facets() {
            if self.facet_label[f] == label {
                for &v in self.facet(f) {
                    seen[v as usize] = true;
                }
            }
        }
        (0..self.n_vertices()).filter(|&v| seen[v]).collect()
    }

    /// Extract the boundary surface carrying `label` with outward unit
    /// normals (pointing away from the owning cell of each facet).
    pub fn extract_boundary(&self, label: i32) -> Result<SurfacePatch<'_>, MeshError> {
        let face_counts = self.face_use_counts();
        let mut facet_ids = Vec::new();
        let mut normals = Vec::new();
        let mut area = 0.0;
        for f in 0..self.n_facets() {
            if self.facet_label[f] != label {
                continue;
            }
            let key = sorted_key(self.facet(f));
            let &(_, owner) = face_counts.get(&key).expect("validated at construction");
            let n = self.outward_normal(f, owner);
            facet_ids.push(f as u32);
            normals.push(n);
            area += self.facet_measure(f);
        }
        if facet_ids.is_empty() {
            return Err(MeshError::UnknownLabel(label));
        }
        Ok(SurfacePatch { mesh: self, facets: facet_ids, normals, area })
    }

    /// Unit normal of facet `f` oriented away from cell `owner`.
    fn outward_normal(&self, f: usize, owner: usize) -> Vec3 {
        let fv = self.facet(f);
        let raw = match self.dim {
            2 => {
                let a = self.vertices[fv[0] as usize];
                let b = self.vertices[fv[1] as usize];
                let t = vec3::sub(b, a);
                [t[1], -t[0], 0.0]
            }
            _ => {
                let a = self.vertices[fv[0] as usize];
                let b = self.vertices[fv[1] as usize];
                let c = self.vertices[fv[2] as usize];
                vec3::cross(vec3::sub(b, a), vec3::sub(c, a))
            }
        };
        let n = vec3::normalize(raw);
        let toward = vec3::sub(self.facet_centroid(f), self.cell_centroid(owner));
        if vec3::dot(n, toward) >= 0.0 {
            n
        } else {
            vec3::scale(n, -1.0)
        }
    }

    /// Map sorted face key -> (number of cells using it, one owning cell).
    fn face_use_counts(&self) -> HashMap<Vec<u32>, (usize, usize)> {
        let k = self.dim + 1;
        let mut map: HashMap<Vec<u32>, (usize, usize)> = HashMap::new();
        for c in 0..self.n_cells() {
            let cell = self.cell(c);
            for skip in 0..k {
                let face: Vec<u32> = (0..k).filter(|&i| i != skip).map(|i| cell[i]).collect();
                let key = sorted_key(&face);
                let e = map.entry(key).or_insert((0, c));
                e.0 += 1;
            }
        }
        map
    }

    /// Replace vertex coordinates, revalidating orientation. Connectivity is
    /// untouched. Used by rigid transforms.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self, MeshError> {
        assert_eq!(vertices.len(), self.n_vertices());
        Self::new(
            self.dim,
            vertices,
            self.cells.clone(),
            self.cell_region.clone(),
            self.facets.clone(),
            self.facet_label.clone(),
        )
    }
}

/// A labeled boundary surface of a mesh: facet subset, per-facet outward unit
/// normals, and the total surface measure.
#[derive(Debug, Clone)]
pub struct SurfacePatch<'m> {
    mesh: &'m SimplicialMesh,
    facets: Vec<u32>,
    normals: Vec<Vec3>,
    area: f64,
}

impl<'m> SurfacePatch<'m> {
    pub fn mesh(&self) -> &'m SimplicialMesh {
        self.mesh
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    /// Vertex indices (into the parent mesh) of patch facet `i`.
    pub fn facet_vertices(&self, i: usize) -> &[u32] {
        self.mesh.facet(self.facets[i] as usize)
    }

    pub fn facet_id(&self, i: usize) -> usize {
        self.facets[i] as usize
    }

    pub fn normal(&self, i: usize) -> Vec3 {
        self.normals[i]
    }

    pub fn facet_measure(&self, i: usize) -> f64 {
        self.mesh.facet_measure(self.facets[i] as usize)
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Corner coordinates of patch facet `i` (2 points in 2D, 3 in 3D).
    pub fn facet_points(&self, i: usize) -> Vec<Vec3> {
        self.facet_vertices(i)
            .iter()
            .map(|&v| self.mesh.vertex(v as usize))
            .collect()
    }
}

fn sorted_key(face: &[u32]) -> Vec<u32> {
    let mut key = face.to_vec();
    key.sort_unstable();
    key
}

/// Signed measure of the simplex given by `cell` indices: twice-area/2 in 2D,
/// det/6 in 3D.
pub fn signed_measure(dim: usize, vertices: &[Vec3], cell: &[u32]) -> f64 {
    let p: Vec<Vec3> = cell.iter().map(|&v| vertices[v as usize]).collect();
    match dim {
        2 => {
            let u = vec3::sub(p[1], p[0]);
            let v = vec3::sub(p[2], p[0]);
            0.5 * (u[0] * v[1] - u[1] * v[0])
        }
        _ => {
            let u = vec3::sub(p[1], p[0]);
            let v = vec3::sub(p[2], p[0]);
            let w = vec3::sub(p[3], p[0]);
            vec3::dot(u, vec3::cross(v, w)) / 6.0
        }
    }
}
