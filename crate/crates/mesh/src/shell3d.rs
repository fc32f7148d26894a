//! 3D ball-in-box generation: cube-sphere shells split into tetrahedra.
//!
//! A cube-surface grid (6 faces, `n` divisions per edge, shared edges and
//! corners) is triangulated once; projecting it radially gives concentric
//! spherical shells for the heart ball, and blending it between the sphere
//! and the exact box surface gives the torso shells. Consecutive shells are
//! joined by prisms, each split into three tetrahedra with face diagonals
//! chosen through the lowest global vertex index, which keeps neighboring
//! prisms (and the two meshes of a conforming pair) face-compatible.

use crate::factory::{graded_breaks, IdealGeometrySpec, REGION_HEART, REGION_TORSO};
use crate::mesh::SimplicialMesh;
use crate::vec3::{self, Vec3};
use crate::{MeshError, LABEL_GAMMA, LABEL_SIGMA_EXT};
use std::collections::HashMap;

/// Grid over the surface of the cube [-1, 1]^3 with `n` divisions per edge.
/// `dirs` are cube-surface coordinates (max-norm 1), `tris` a triangulation
/// whose quad diagonals pass through the lowest local vertex id.
pub(crate) struct CubeSurfaceGrid {
    pub dirs: Vec<Vec3>,
    pub tris: Vec<[u32; 3]>,
}

impl CubeSurfaceGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut id_of: HashMap<(usize, usize, usize), u32> = HashMap::new();
        let mut dirs: Vec<Vec3> = Vec::new();
        let coord = |i: usize| 2.0 * i as f64 / n as f64 - 1.0;
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    if i == 0 || i == n || j == 0 || j == n || k == 0 || k == n {
                        id_of.insert((i, j, k), dirs.len() as u32);
                        dirs.push([coord(i), coord(j), coord(k)]);
                    }
                }
            }
        }

        // One quad sheet per cube face; shared edge nodes dedupe through the
        // id map, so no quad is emitted twice.
        type FaceFn = fn(usize, usize, usize) -> (usize, usize, usize);
        let faces: [FaceFn; 6] = [
            |a, b, _n| (0, a, b),
            |a, b, n| (n, a, b),
            |a, b, _n| (a, 0, b),
            |a, b, n| (a, n, b),
            |a, b, _n| (a, b, 0),
            |a, b, n| (a, b, n),
        ];
        let mut tris = Vec::with_capacity(12 * n * n);
        for face in faces {
            for b in 0..n {
                for a in 0..n {
                    let q = [
                        id_of[&face(a, b, n)],
                        id_of[&face(a + 1, b, n)],
                        id_of[&face(a + 1, b + 1, n)],
                        id_of[&face(a, b + 1, n)],
                    ];
                    let m = (0..4).min_by_key(|&i| q[i]).unwrap();
                    tris.push([q[m], q[(m + 1) % 4], q[(m + 2) % 4]]);
                    tris.push([q[m], q[(m + 2) % 4], q[(m + 3) % 4]]);
                }
            }
        }
        Self { dirs, tris }
    }

    pub fn n_nodes(&self) -> usize {
        self.dirs.len()
    }
}

/// Split the prism between matching bottom/top triangles into three
/// tetrahedra. `cols[i] = [bottom, top]` global vertex ids of column `i`.
/// Every quad diagonal passes through the quad's lowest global id, so
/// adjacent prisms sharing a quad agree on its split.
fn split_prism(cols: [[u32; 2]; 3], out: &mut Vec<u32>) {
    let mc = (0..3).min_by_key(|&i| cols[i][0].min(cols[i][1])).unwrap();
    let [b0, t0] = cols[mc];
    let [b1, t1] = cols[(mc + 1) % 3];
    let [b2, t2] = cols[(mc + 2) % 3];
    let diag_b1_t2 = b1.min(t2) < b2.min(t1);
    if b0 < t0 {
        if diag_b1_t2 {
            out.extend([b0, b1, b2, t2, b0, b1, t2, t1, b0, t1, t2, t0]);
        } else {
            out.extend([b0, b1, b2, t1, b0, b2, t2, t1, b0, t1, t2, t0]);
        }
    } else if diag_b1_t2 {
        out.extend([t0, t2, t1, b1, t0, t2, b1, b2, t0, b1, b2, b0]);
    } else {
        out.extend([t0, t2, t1, b2, t0, t1, b2, b1, t0, b2, b1, b0]);
    }
}

fn shell_point(center: Vec3, r: f64, u: Vec3) -> Vec3 {
    [center[0] + r * u[0], center[1] + r * u[1], center[2] + r * u[2]]
}

pub(crate) fn generate_pair_3d(
    spec: &IdealGeometrySpec,
) -> Result<(SimplicialMesh, SimplicialMesh), MeshError> {
    let r_heart = spec.heart_radius;
    let c = spec.heart_center;
    let quarter_arc = std::f64::consts::FRAC_PI_2 * r_heart;

    // Heart ball: center vertex, cone layer, then radial prism layers.
    let n_s = ((quarter_arc / spec.h_heart).round() as usize).max(2);
    let grid = CubeSurfaceGrid::new(n_s);
    let units: Vec<Vec3> = grid.dirs.iter().map(|&d| vec3::normalize(d)).collect();
    let nn = grid.n_nodes();
    let n_r = ((r_heart / spec.h_heart).round() as usize).max(1);

    let mut vertices: Vec<Vec3> = Vec::with_capacity(1 + n_r * nn);
    vertices.push(c);
    for k in 1..=n_r {
        let r = r_heart * (k as f64 / n_r as f64);
        for u in &units {
            vertices.push(shell_point(c, r, *u));
        }
    }
    let id = |k: usize, j: u32| (1 + (k - 1) * nn) as u32 + j;

    let mut cells: Vec<u32> = Vec::new();
    for t in &grid.tris {
        cells.extend([0, id(1, t[0]), id(1, t[1]), id(1, t[2])]);
    }
    for k in 1..n_r {
        for t in &grid.tris {
            split_prism(
                [
                    [id(k, t[0]), id(k + 1, t[0])],
                    [id(k, t[1]), id(k + 1, t[1])],
                    [id(k, t[2]), id(k + 1, t[2])],
                ],
                &mut cells,
            );
        }
    }
    let mut facets: Vec<u32> = Vec::with_capacity(3 * grid.tris.len());
    for t in &grid.tris {
        facets.extend([id(n_r, t[0]), id(n_r, t[1]), id(n_r, t[2])]);
    }
    let n_cells = cells.len() / 4;
    let heart = SimplicialMesh::new(
        3,
        vertices,
        cells,
        vec![REGION_HEART; n_cells],
        facets,
        vec![LABEL_GAMMA; grid.tris.len()],
    )?;

    // Torso: graded shells blending the hole sphere into the exact box.
    let (tgrid, tunits) = if spec.conforming {
        (grid, units)
    } else {
        let n_s_t = ((quarter_arc / spec.h_torso_interface).round() as usize).max(2);
        let g = CubeSurfaceGrid::new(n_s_t);
        let u: Vec<Vec3> = g.dirs.iter().map(|&d| vec3::normalize(d)).collect();
        (g, u)
    };
    let tn = tgrid.n_nodes();
    let sphere_pts: Vec<Vec3> = tunits.iter().map(|&u| shell_point(c, r_heart, u)).collect();
    let w = spec.torso_half_widths;
    let box_pts: Vec<Vec3> = tgrid
        .dirs
        .iter()
        .map(|d| [w[0] * d[0], w[1] * d[1], w[2] * d[2]])
        .collect();
    let mean_gap = (0..tn)
        .map(|j| vec3::dist(box_pts[j], sphere_pts[j]))
        .sum::<f64>()
        / tn as f64;
    let breaks = graded_breaks(mean_gap, spec.h_torso_interface, spec.h_torso_exterior);
    let n_t = breaks.len() - 1;

    // Shell 0 and shell n_t copy the sphere and box points verbatim so the
    // interface is bit-exact and the outer boundary is the exact box.
    let mut tvertices: Vec<Vec3> = Vec::with_capacity((n_t + 1) * tn);
    tvertices.extend_from_slice(&sphere_pts);
    for &s in &breaks[1..n_t] {
        for j in 0..tn {
            tvertices.push([
                (1.0 - s) * sphere_pts[j][0] + s * box_pts[j][0],
                (1.0 - s) * sphere_pts[j][1] + s * box_pts[j][1],
                (1.0 - s) * sphere_pts[j][2] + s * box_pts[j][2],
            ]);
        }
    }
    tvertices.extend_from_slice(&box_pts);

    let tid = |k: usize, j: u32| (k * tn) as u32 + j;
    let mut tcells: Vec<u32> = Vec::new();
    for k in 0..n_t {
        for t in &tgrid.tris {
            split_prism(
                [
                    [tid(k, t[0]), tid(k + 1, t[0])],
                    [tid(k, t[1]), tid(k + 1, t[1])],
                    [tid(k, t[2]), tid(k + 1, t[2])],
                ],
                &mut tcells,
            );
        }
    }
    let mut tfacets: Vec<u32> = Vec::with_capacity(6 * tgrid.tris.len());
    let mut tlabels: Vec<i32> = Vec::with_capacity(2 * tgrid.tris.len());
    for t in &tgrid.tris {
        tfacets.extend([tid(0, t[0]), tid(0, t[1]), tid(0, t[2])]);
        tlabels.push(LABEL_GAMMA);
    }
    for t in &tgrid.tris {
        tfacets.extend([tid(n_t, t[0]), tid(n_t, t[1]), tid(n_t, t[2])]);
        tlabels.push(LABEL_SIGMA_EXT);
    }
    let n_tcells = tcells.len() / 4;
    let torso = SimplicialMesh::new(
        3,
        tvertices,
        tcells,
        vec![REGION_TORSO; n_tcells],
        tfacets,
        tlabels,
    )?;

    Ok((heart, torso))
}
