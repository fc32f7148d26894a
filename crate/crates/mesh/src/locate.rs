//! Closest-point queries against a boundary surface.
//!
//! `locate_on_surface` is the specification: scan every facet, clamp-project
//! the query point onto it, keep the smallest distance, break ties toward the
//! lowest facet index. `FacetLocator` accelerates the same query with a
//! uniform grid over facet bounding boxes and is required to return exactly
//! the result of the brute-force scan, bit for bit.

use crate::mesh::SurfacePatch;
use crate::vec3::{self, Vec3};

/// Result of projecting a point onto a surface patch: the winning facet
/// (patch-local index), barycentric weights of the closest point on it, the
/// closest point itself, and the distance. In 2D the facet is a segment and
/// `weights[2]` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceLocation {
    pub facet: usize,
    pub weights: [f64; 3],
    pub point: Vec3,
    pub distance: f64,
}

/// Closest point on segment `ab` to `p`, as barycentric weights `(1-t, t)`.
pub fn closest_point_segment(p: Vec3, a: Vec3, b: Vec3) -> (Vec3, [f64; 2]) {
    let ab = vec3::sub(b, a);
    let denom = vec3::dot(ab, ab);
    let t = if denom > 0.0 {
        (vec3::dot(vec3::sub(p, a), ab) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (vec3::add(a, vec3::scale(ab, t)), [1.0 - t, t])
}

/// Closest point on triangle `abc` to `p`, as barycentric weights. Voronoi
/// region classification, so vertex and edge cases produce exact weights
/// (e.g. a query at `a` returns (1, 0, 0)).
pub fn closest_point_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> (Vec3, [f64; 3]) {
    let ab = vec3::sub(b, a);
    let ac = vec3::sub(c, a);
    let ap = vec3::sub(p, a);
    let d1 = vec3::dot(ab, ap);
    let d2 = vec3::dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }
    let bp = vec3::sub(p, b);
    let d3 = vec3::dot(ab, bp);
    let d4 = vec3::dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (vec3::add(a, vec3::scale(ab, v)), [1.0 - v, v, 0.0]);
    }
    let cp = vec3::sub(p, c);
    let d5 = vec3::dot(ab, cp);
    let d6 = vec3::dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (vec3::add(a, vec3::scale(ac, w)), [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let point = vec3::add(b, vec3::scale(vec3::sub(c, b), w));
        return (point, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let point = vec3::add(a, vec3::add(vec3::scale(ab, v), vec3::scale(ac, w)));
    (point, [1.0 - v - w, v, w])
}

fn project_onto(dim: usize, corners: &[Vec3; 3], p: Vec3) -> (Vec3, [f64; 3]) {
    if dim == 2 {
        let (q, w) = closest_point_segment(p, corners[0], corners[1]);
        (q, [w[0], w[1], 0.0])
    } else {
        closest_point_triangle(p, corners[0], corners[1], corners[2])
    }
}

/// Brute-force closest facet of `patch` to `point`. Ascending scan with a
/// strict `<` keeps the lowest facet index among exact ties.
pub fn locate_on_surface(patch: &SurfacePatch, point: Vec3) -> SurfaceLocation {
    assert!(patch.n_facets() > 0, "empty surface patch");
    let dim = patch.mesh().dim();
    let mut best: Option<SurfaceLocation> = None;
    for i in 0..patch.n_facets() {
        let corners = facet_corners(patch, i);
        let (q, w) = project_onto(dim, &corners, point);
        let d2 = dist2(point, q);
        if best.as_ref().map_or(true, |b| d2 < b.distance) {
            best = Some(SurfaceLocation { facet: i, weights: w, point: q, distance: d2 });
        }
    }
    let mut loc = best.unwrap();
    loc.distance = loc.distance.sqrt();
    loc
}

fn facet_corners(patch: &SurfacePatch, i: usize) -> [Vec3; 3] {
    let pts = patch.facet_points(i);
    let mut corners = [[0.0; 3]; 3];
    for (k, p) in pts.iter().enumerate() {
        corners[k] = *p;
    }
    corners
}

fn dist2(a: Vec3, b: Vec3) -> f64 {
    let d = vec3::sub(a, b);
    vec3::dot(d, d)
}

/// Grid-accelerated closest-facet search over one surface patch. Facet
/// geometry is copied at construction, so the locator owns its data.
#[derive(Debug, Clone)]
pub struct FacetLocator {
    dim: usize,
    corners: Vec<[Vec3; 3]>,
    origin: Vec3,
    h: [f64; 3],
    n: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl FacetLocator {
    pub fn new(patch: &SurfacePatch) -> Self {
        let dim = patch.mesh().dim();
        let nf = patch.n_facets();
        assert!(nf > 0, "empty surface patch");
        let corners: Vec<[Vec3; 3]> = (0..nf).map(|i| facet_corners(patch, i)).collect();

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for c in &corners {
            for p in &c[..dim] {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }

        // About nf^(1/dim) cells per active axis; flat axes get one cell.
        let per_axis = ((nf as f64).powf(1.0 / dim as f64).ceil() as usize).clamp(1, 256);
        let mut n = [1usize; 3];
        let mut h = [1.0f64; 3];
        for a in 0..3 {
            let extent = hi[a] - lo[a];
            if a < dim && extent > 1e-9 {
                n[a] = per_axis;
                h[a] = extent / per_axis as f64;
            } else {
                n[a] = 1;
                h[a] = extent.max(1e-9);
            }
        }

        let mut cells = vec![Vec::new(); n[0] * n[1] * n[2]];
        for (id, c) in corners.iter().enumerate() {
            let mut flo = [f64::INFINITY; 3];
            let mut fhi = [f64::NEG_INFINITY; 3];
            for p in &c[..dim] {
                for a in 0..3 {
                    flo[a] = flo[a].min(p[a]);
                    fhi[a] = fhi[a].max(p[a]);
                }
            }
            let ilo = cell_index_clamped(flo, lo, h, n);
            let ihi = cell_index_clamped(fhi, lo, h, n);
            for iz in ilo[2]..=ihi[2] {
                for iy in ilo[1]..=ihi[1] {
                    for ix in ilo[0]..=ihi[0] {
                        cells[(iz * n[1] + iy) * n[0] + ix].push(id as u32);
                    }
                }
            }
        }

        Self { dim, corners, origin: lo, h, n, cells }
    }

    pub fn n_facets(&self) -> usize {
        self.corners.len()
    }

    /// Exact equivalent of `locate_on_surface`: expands grid rings around the
    /// query cell and keeps the lexicographically smallest (distance², facet)
    /// pair, stopping only once no unscanned cell can hold a closer facet or
    /// an equally close one with a lower index.
    pub fn locate(&self, point: Vec3) -> SurfaceLocation {
        let center = cell_index_clamped(point, self.origin, self.h, self.n);
        let mut visited = vec![false; self.corners.len()];
        let mut best: Option<(f64, usize, [f64; 3], Vec3)> = None;

        let mut r = 0usize;
        loop {
            let mut exhausted = true;
            self.for_ring(center, r, |cell_id| {
                for &fid in &self.cells[cell_id] {
                    let fid = fid as usize;
                    if visited[fid] {
                        continue;
                    }
                    visited[fid] = true;
                    let (q, w) = project_onto(self.dim, &self.corners[fid], point);
                    let d2 = dist2(point, q);
                    let better = match best {
                        None => true,
                        Some((bd2, bidx, _, _)) => d2 < bd2 || (d2 == bd2 && fid < bidx),
                    };
                    if better {
                        best = Some((d2, fid, w, q));
                    }
                }
            });

            // Distance from the query to the nearest unscanned grid cell.
            // Only faces of the scanned box that still have grid cells beyond
            // them bound the unscanned region.
            let mut margin2 = f64::INFINITY;
            for a in 0..3 {
                let c = center[a] as isize;
                let r = r as isize;
                if c - r > 0 {
                    exhausted = false;
                    let face = self.origin[a] + (c - r) as f64 * self.h[a];
                    margin2 = margin2.min((point[a] - face).max(0.0).powi(2));
                }
                if c + r < self.n[a] as isize - 1 {
                    exhausted = false;
                    let face = self.origin[a] + (c + r + 1) as f64 * self.h[a];
                    margin2 = margin2.min((face - point[a]).max(0.0).powi(2));
                }
            }
            if exhausted {
                break;
            }
            if let Some(&(bd2, _, _, _)) = best.as_ref() {
                if margin2 > bd2 {
                    break;
                }
            }
            r += 1;
        }

        let (d2, facet, weights, q) = best.expect("patch is non-empty");
        SurfaceLocation { facet, weights, point: q, distance: d2.sqrt() }
    }

    /// Visit every in-grid cell at Chebyshev index distance exactly `r` from
    /// `center`.
    fn for_ring(&self, center: [usize; 3], r: usize, mut visit: impl FnMut(usize)) {
        let n = self.n;
        let c = [center[0] as isize, center[1] as isize, center[2] as isize];
        let r = r as isize;
        for dz in -r..=r {
            let iz = c[2] + dz;
            if iz < 0 || iz >= n[2] as isize {
                continue;
            }
            for dy in -r..=r {
                let iy = c[1] + dy;
                if iy < 0 || iy >= n[1] as isize {
                    continue;
                }
                // On the shell only when some component hits |r|; if z and y
                // are interior (possible only for r >= 1), x must be ±r.
                if dz.abs() == r || dy.abs() == r {
                    for dx in -r..=r {
                        let ix = c[0] + dx;
                        if ix >= 0 && ix < n[0] as isize {
                            visit(((iz as usize) * n[1] + iy as usize) * n[0] + ix as usize);
                        }
                    }
                } else {
                    for dx in [-r, r] {
                        let ix = c[0] + dx;
                        if ix >= 0 && ix < n[0] as isize {
                            visit(((iz as usize) * n[1] + iy as usize) * n[0] + ix as usize);
                        }
                    }
                }
            }
        }
    }
}

fn cell_index_clamped(p: Vec3, origin: Vec3, h: [f64; 3], n: [usize; 3]) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for a in 0..3 {
        let f = ((p[a] - origin[a]) / h[a]).floor();
        idx[a] = (f.max(0.0) as usize).min(n[a] - 1);
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SimplicialMesh;

    fn square_boundary() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![0, 1, 2, 0, 2, 3],
            vec![0, 0],
            vec![0, 1, 1, 2, 2, 3, 3, 0],
            vec![1, 1, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn vertex_query_gives_unit_weight() {
        let mesh = square_boundary();
        let patch = mesh.extract_boundary(1).unwrap();
        let loc = locate_on_surface(&patch, [0.0, 0.0, 0.0]);
        assert_eq!(loc.facet, 0); // lowest-index facet containing the corner
        assert_eq!(loc.weights[0], 1.0);
        assert_eq!(loc.weights[1], 0.0);
        assert_eq!(loc.distance, 0.0);
    }

    #[test]
    fn midpoint_query_gives_half_weights() {
        let mesh = square_boundary();
        let patch = mesh.extract_boundary(1).unwrap();
        let loc = locate_on_surface(&patch, [0.5, 0.0, 0.0]);
        assert_eq!(loc.facet, 0);
        assert_eq!(loc.weights[0], 0.5);
        assert_eq!(loc.weights[1], 0.5);
        assert!(loc.distance.abs() < 1e-15);
    }

    #[test]
    fn offset_along_normal_reports_distance() {
        let mesh = square_boundary();
        let patch = mesh.extract_boundary(1).unwrap();
        let loc = locate_on_surface(&patch, [0.5, -0.3, 0.0]);
        assert_eq!(loc.facet, 0);
        assert!((loc.weights[0] - 0.5).abs() < 1e-15);
        assert!((loc.distance - 0.3).abs() < 1e-15);
    }

    #[test]
    fn grid_matches_brute_force_on_square() {
        let mesh = square_boundary();
        let patch = mesh.extract_boundary(1).unwrap();
        let locator = FacetLocator::new(&patch);
        let mut k = 0u32;
        for i in 0..23 {
            for j in 0..23 {
                let p = [-0.4 + 0.08 * i as f64, -0.4 + 0.08 * j as f64, 0.0];
                let a = locate_on_surface(&patch, p);
                let b = locator.locate(p);
                assert_eq!(a.facet, b.facet, "at {p:?}");
                assert_eq!(a.distance.to_bits(), b.distance.to_bits(), "at {p:?}");
                k += 1;
            }
        }
        assert_eq!(k, 23 * 23);
    }

    #[test]
    fn triangle_closest_point_regions() {
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0];
        let c = [0.0, 1.0, 0.0];
        // Interior point projects to itself.
        let (q, w) = closest_point_triangle([0.2, 0.2, 0.5], a, b, c);
        assert!((q[0] - 0.2).abs() < 1e-15 && (q[1] - 0.2).abs() < 1e-15);
        assert!((w[0] + w[1] + w[2] - 1.0).abs() < 1e-15);
        // Beyond vertex b.
        let (q, w) = closest_point_triangle([2.0, -1.0, 0.0], a, b, c);
        assert_eq!(q, b);
        assert_eq!(w, [0.0, 1.0, 0.0]);
        // Off the hypotenuse.
        let (_, w) = closest_point_triangle([1.0, 1.0, 0.0], a, b, c);
        assert!(w[0].abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
    }
}
