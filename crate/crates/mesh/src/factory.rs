//! Procedural generation of idealized heart-in-torso geometry pairs.
//!
//! The heart is a disc (2D) or ball (3D) triangulated in concentric rings or
//! shells; the torso is a box with a matching hole, meshed by blending
//! star-shaped rings from the hole boundary out to the exact box boundary
//! with linearly graded element size. Conforming pairs share the hole
//! boundary discretization bit for bit; non-conforming pairs discretize the
//! same curve independently at the torso's own interface resolution.

use crate::mesh::SimplicialMesh;
use crate::shell3d;
use crate::vec3::{self, Vec3};
use crate::{MeshError, LABEL_GAMMA, LABEL_SIGMA_EXT};

pub const REGION_HEART: i32 = 1;
pub const REGION_TORSO: i32 = 2;

/// Parameters for one heart-in-torso geometry pair. Lengths in mm. The torso
/// box is centered at the origin with the given half-widths; the heart disc
/// or ball sits at `heart_center`. `h_heart` is the heart edge-length target,
/// `h_torso_interface` and `h_torso_exterior` the torso targets at the hole
/// boundary and the outer boundary; element size grades linearly in between.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealGeometrySpec {
    pub dim: usize,
    pub torso_half_widths: [f64; 3],
    pub heart_center: Vec3,
    pub heart_radius: f64,
    pub h_heart: f64,
    pub h_torso_interface: f64,
    pub h_torso_exterior: f64,
    pub conforming: bool,
}

impl IdealGeometrySpec {
    /// Desk-scale 2D default: 400 x 600 mm torso, radius-60 heart.
    pub fn desk_default() -> Self {
        Self {
            dim: 2,
            torso_half_widths: [200.0, 300.0, 0.0],
            heart_center: [0.0, 50.0, 0.0],
            heart_radius: 60.0,
            h_heart: 2.0,
            h_torso_interface: 3.0,
            h_torso_exterior: 15.0,
            conforming: true,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(MeshError::InfeasibleSpec(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        for h in [self.h_heart, self.h_torso_interface, self.h_torso_exterior] {
            if !(h > 0.0) {
                return Err(MeshError::InfeasibleSpec(format!("edge-length target {h} must be > 0")));
            }
        }
        if !(self.heart_radius > 0.0) {
            return Err(MeshError::InfeasibleSpec(format!(
                "heart radius {} must be > 0",
                self.heart_radius
            )));
        }
        let h_max = self.h_heart.max(self.h_torso_interface).max(self.h_torso_exterior);
        for a in 0..self.dim {
            if !(self.torso_half_widths[a] > 0.0) {
                return Err(MeshError::InfeasibleSpec(format!(
                    "torso half-width along axis {a} must be > 0"
                )));
            }
            let margin = self.torso_half_widths[a] - self.heart_center[a].abs() - self.heart_radius;
            if margin < 2.0 * h_max {
                return Err(MeshError::InfeasibleSpec(format!(
                    "heart too close to torso wall along axis {a}: margin {margin:.3} mm < {:.3} mm",
                    2.0 * h_max
                )));
            }
        }
        Ok(())
    }
}

/// Generate a (heart, torso) mesh pair from `spec`.
pub fn generate_pair(spec: &IdealGeometrySpec) -> Result<(SimplicialMesh, SimplicialMesh), MeshError> {
    spec.validate()?;
    if spec.dim == 2 {
        let (heart, boundary_ring) = heart_disc(spec)?;
        let boundary_points: Vec<Vec3> =
            boundary_ring.ids.iter().map(|&v| heart.vertex(v as usize)).collect();
        let torso = torso_annulus(spec, &boundary_ring.angles, &boundary_points)?;
        Ok((heart, torso))
    } else {
        shell3d::generate_pair_3d(spec)
    }
}

/// A rigid motion: rotate by `angle_deg` about `axis` through `pivot`, then
/// translate. In 2D the axis is implicitly z.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub translation: Vec3,
    pub axis: Vec3,
    pub angle_deg: f64,
    pub pivot: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { translation: [0.0; 3], axis: [0.0, 0.0, 1.0], angle_deg: 0.0, pivot: [0.0; 3] }
    }

    pub fn translation(t: Vec3) -> Self {
        Self { translation: t, ..Self::identity() }
    }

    pub fn rotation_deg(axis: Vec3, angle_deg: f64, pivot: Vec3) -> Self {
        Self { translation: [0.0; 3], axis: vec3::normalize(axis), angle_deg, pivot }
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        let rotated = vec3::rotate_about_axis(
            vec3::sub(p, self.pivot),
            self.axis,
            self.angle_deg.to_radians(),
        );
        vec3::add(vec3::add(self.pivot, rotated), self.translation)
    }

    /// Transform undoing this one (same pivot, negated angle).
    pub fn inverse(&self) -> Self {
        let t_back = vec3::rotate_about_axis(
            vec3::scale(self.translation, -1.0),
            self.axis,
            (-self.angle_deg).to_radians(),
        );
        Self { translation: t_back, axis: self.axis, angle_deg: -self.angle_deg, pivot: self.pivot }
    }
}

/// Apply a rigid transform to every vertex; connectivity is untouched.
pub fn apply_rigid(mesh: &SimplicialMesh, t: &RigidTransform) -> Result<SimplicialMesh, MeshError> {
    let moved: Vec<Vec3> = mesh.vertices().iter().map(|&p| t.apply_point(p)).collect();
    mesh.with_vertices(moved)
}

/// Structured triangulation of an axis-aligned rectangle, `nx` by `ny`
/// quads each split into two triangles. The whole boundary carries GAMMA.
/// Used for tissue-strip studies and grid-convergence tests.
pub fn structured_rectangle(
    origin: [f64; 2],
    size: [f64; 2],
    nx: usize,
    ny: usize,
    region: i32,
) -> SimplicialMesh {
    assert!(nx >= 1 && ny >= 1);
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                origin[0] + size[0] * i as f64 / nx as f64,
                origin[1] + size[1] * j as f64 / ny as f64,
                0.0,
            ]);
        }
    }
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
        }
    }
    let mut facets = Vec::new();
    for i in 0..nx {
        facets.extend_from_slice(&[id(i, 0), id(i + 1, 0)]);
        facets.extend_from_slice(&[id(i, ny), id(i + 1, ny)]);
    }
    for j in 0..ny {
        facets.extend_from_slice(&[id(0, j), id(0, j + 1)]);
        facets.extend_from_slice(&[id(nx, j), id(nx, j + 1)]);
    }
    let n_cells = cells.len() / 3;
    let n_facets = facets.len() / 2;
    SimplicialMesh::new(2, vertices, cells, vec![region; n_cells], facets, vec![LABEL_GAMMA; n_facets])
        .expect("structured rectangle is always valid")
}

/// Interval breakpoints over `[0, 1]` whose gaps grade linearly from `h0` to
/// `h1` against a physical length of `total`.
pub(crate) fn graded_breaks(total: f64, h0: f64, h1: f64) -> Vec<f64> {
    assert!(total > 0.0 && h0 > 0.0 && h1 > 0.0);
    let n = ((total / (0.5 * (h0 + h1))).round() as usize).max(1);
    let mut breaks = Vec::with_capacity(n + 1);
    let sum = n as f64 * 0.5 * (h0 + h1);
    let mut acc = 0.0;
    breaks.push(0.0);
    for k in 0..n {
        acc += h0 + (h1 - h0) * (k as f64 + 0.5) / n as f64;
        breaks.push(acc / sum);
    }
    breaks[n] = 1.0;
    breaks
}

/// One polygonal ring of vertex ids, sorted by ascending polar angle around a
/// common center.
#[derive(Debug, Clone)]
pub(crate) struct Ring {
    pub ids: Vec<u32>,
    pub angles: Vec<f64>,
}

/// Stitch two star-shaped rings around a common center into a band of
/// triangles by merging on angle. Emits `inner.len() + outer.len()`
/// triangles.
pub(crate) fn zipper(inner: &Ring, outer: &Ring, cells: &mut Vec<u32>) {
    let p = inner.ids.len();
    let q = outer.ids.len();
    assert!(p >= 3 && q >= 3);
    const TAU: f64 = 2.0 * std::f64::consts::PI;

    // Align the outer start with the inner start angle.
    let a0 = inner.angles[0];
    let j0 = (0..q)
        .min_by(|&a, &b| {
            let da = angular_gap(outer.angles[a], a0);
            let db = angular_gap(outer.angles[b], a0);
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();

    // Unwrapped angle lookahead; index k visits ring slot (start + k) mod len.
    let inner_angle = |k: usize| inner.angles[k % p] + TAU * (k / p) as f64;
    let outer_angle = |k: usize| {
        let slot = (j0 + k) % q;
        let base = outer.angles[slot] + TAU * ((j0 + k) / q) as f64;
        base - outer.angles[j0] + nearest_rep(outer.angles[j0], a0)
    };

    let mut i = 0usize;
    let mut j = 0usize;
    while i < p || j < q {
        let vi = inner.ids[i % p];
        let vo = outer.ids[(j0 + j) % q];
        let advance_inner = if j >= q {
            true
        } else if i >= p {
            false
        } else {
            inner_angle(i + 1) <= outer_angle(j + 1)
        };
        if advance_inner {
            cells.extend_from_slice(&[vi, vo, inner.ids[(i + 1) % p]]);
            i += 1;
        } else {
            cells.extend_from_slice(&[vi, vo, outer.ids[(j0 + j + 1) % q]]);
            j += 1;
        }
    }
}

/// Representative of `angle` within half a turn of `near`.
fn nearest_rep(angle: f64, near: f64) -> f64 {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    let mut a = angle;
    while a - near > std::f64::consts::PI {
        a -= TAU;
    }
    while near - a > std::f64::consts::PI {
        a += TAU;
    }
    a
}

fn angular_gap(a: f64, b: f64) -> f64 {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub(crate) fn polar_angle(p: Vec3, center: Vec3) -> f64 {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    let a = (p[1] - center[1]).atan2(p[0] - center[0]);
    a.rem_euclid(TAU)
}

/// Disc mesh of concentric vertex rings joined by angle-zippered bands.
/// Returns the mesh and its boundary ring (ids ordered by angle).
fn heart_disc(spec: &IdealGeometrySpec) -> Result<(SimplicialMesh, Ring), MeshError> {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    let r_outer = spec.heart_radius;
    let h = spec.h_heart;
    let c = spec.heart_center;

    let n_rings = ((r_outer / h).round() as usize).max(1);
    let mut vertices: Vec<Vec3> = vec![c];
    let mut rings: Vec<Ring> = Vec::with_capacity(n_rings);
    for k in 1..=n_rings {
        let r = r_outer * k as f64 / n_rings as f64;
        let m = ((TAU * r / h).round() as usize).max(6);
        let mut ids = Vec::with_capacity(m);
        let mut angles = Vec::with_capacity(m);
        for j in 0..m {
            let theta = TAU * j as f64 / m as f64;
            ids.push(vertices.len() as u32);
            angles.push(theta);
            vertices.push([c[0] + r * theta.cos(), c[1] + r * theta.sin(), 0.0]);
        }
        rings.push(Ring { ids, angles });
    }

    let mut cells = Vec::new();
    let first = &rings[0];
    for j in 0..first.ids.len() {
        cells.extend_from_slice(&[0, first.ids[j], first.ids[(j + 1) % first.ids.len()]]);
    }
    for w in rings.windows(2) {
        zipper(&w[0], &w[1], &mut cells);
    }

    let boundary = rings.last().unwrap().clone();
    let m = boundary.ids.len();
    let mut facets = Vec::with_capacity(2 * m);
    for j in 0..m {
        facets.extend_from_slice(&[boundary.ids[j], boundary.ids[(j + 1) % m]]);
    }

    let n_cells = cells.len() / 3;
    let mesh = SimplicialMesh::new(
        2,
        vertices,
        cells,
        vec![REGION_HEART; n_cells],
        facets,
        vec![LABEL_GAMMA; m],
    )?;
    Ok((mesh, boundary))
}

/// Distance from the heart center to the torso box wall along direction
/// `theta`. The box is centered at the origin.
fn box_exit(spec: &IdealGeometrySpec, theta: f64) -> f64 {
    let (dx, dy) = (theta.cos(), theta.sin());
    let (cx, cy) = (spec.heart_center[0], spec.heart_center[1]);
    let (w, h) = (spec.torso_half_widths[0], spec.torso_half_widths[1]);
    let mut t = f64::INFINITY;
    if dx.abs() > 1e-15 {
        let wall = if dx > 0.0 { w } else { -w };
        t = t.min((wall - cx) / dx);
    }
    if dy.abs() > 1e-15 {
        let wall = if dy > 0.0 { h } else { -h };
        t = t.min((wall - cy) / dy);
    }
    t
}

/// Box-minus-disc torso mesh: star-shaped rings blended from the hole circle
/// to the exact box boundary, zippered ring to ring, with linear size
/// grading. When the spec is conforming, the hole ring copies the heart
/// boundary coordinates bit for bit.
fn torso_annulus(
    spec: &IdealGeometrySpec,
    heart_angles: &[f64],
    heart_points: &[Vec3],
) -> Result<SimplicialMesh, MeshError> {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    let c = spec.heart_center;
    let r0 = spec.heart_radius;
    let (h0, h1) = (spec.h_torso_interface, spec.h_torso_exterior);

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut rings: Vec<Ring> = Vec::new();

    // Hole ring.
    if spec.conforming {
        let ids = (0..heart_points.len() as u32).collect();
        vertices.extend_from_slice(heart_points);
        rings.push(Ring { ids, angles: heart_angles.to_vec() });
    } else {
        let m = ((TAU * r0 / h0).round() as usize).max(8);
        let mut ids = Vec::with_capacity(m);
        let mut angles = Vec::with_capacity(m);
        for j in 0..m {
            let theta = TAU * j as f64 / m as f64;
            ids.push(vertices.len() as u32);
            angles.push(theta);
            vertices.push([c[0] + r0 * theta.cos(), c[1] + r0 * theta.sin(), 0.0]);
        }
        rings.push(Ring { ids, angles });
    }

    // Radial breakpoints: grade against the mean gap between hole and box.
    let n_probe = 256;
    let mean_gap = (0..n_probe)
        .map(|k| box_exit(spec, TAU * k as f64 / n_probe as f64) - r0)
        .sum::<f64>()
        / n_probe as f64;
    let breaks = graded_breaks(mean_gap, h0, h1);
    let n_bands = breaks.len() - 1;

    // Intermediate blended rings.
    for &s in &breaks[1..n_bands] {
        let h_here = h0 + (h1 - h0) * s;
        let perimeter: f64 = {
            let probe = 720;
            let at = |k: usize| -> Vec3 {
                let theta = TAU * (k % probe) as f64 / probe as f64;
                let rho = (1.0 - s) * r0 + s * box_exit(spec, theta);
                [c[0] + rho * theta.cos(), c[1] + rho * theta.sin(), 0.0]
            };
            (0..probe).map(|k| vec3::dist(at(k), at(k + 1))).sum()
        };
        let m = ((perimeter / h_here).round() as usize).max(8);
        let mut ids = Vec::with_capacity(m);
        let mut angles = Vec::with_capacity(m);
        for j in 0..m {
            let theta = TAU * j as f64 / m as f64;
            let rho = (1.0 - s) * r0 + s * box_exit(spec, theta);
            ids.push(vertices.len() as u32);
            angles.push(theta);
            vertices.push([c[0] + rho * theta.cos(), c[1] + rho * theta.sin(), 0.0]);
        }
        rings.push(Ring { ids, angles });
    }

    // Exact box ring: walk the perimeter corner to corner.
    {
        let (w, hh) = (spec.torso_half_widths[0], spec.torso_half_widths[1]);
        let corners = [[w, -hh], [w, hh], [-w, hh], [-w, -hh]];
        let mut pts: Vec<Vec3> = Vec::new();
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let nseg = ((len / h1).round() as usize).max(1);
            for k in 0..nseg {
                let t = k as f64 / nseg as f64;
                pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0]);
            }
        }
        // Sort by polar angle around the heart center; the box is star-shaped
        // with respect to any interior point.
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| {
            polar_angle(pts[a], c).partial_cmp(&polar_angle(pts[b], c)).unwrap()
        });
        let mut ids = Vec::with_capacity(pts.len());
        let mut angles = Vec::with_capacity(pts.len());
        for &k in &order {
            ids.push(vertices.len() as u32);
            angles.push(polar_angle(pts[k], c));
            vertices.push(pts[k]);
        }
        rings.push(Ring { ids, angles });
    }

    let mut cells = Vec::new();
    for w in rings.windows(2) {
        zipper(&w[0], &w[1], &mut cells);
    }

    let mut facets = Vec::new();
    let mut labels = Vec::new();
    let hole = &rings[0];
    for j in 0..hole.ids.len() {
        facets.extend_from_slice(&[hole.ids[j], hole.ids[(j + 1) % hole.ids.len()]]);
        labels.push(LABEL_GAMMA);
    }
    let outer = rings.last().unwrap();
    for j in 0..outer.ids.len() {
        facets.extend_from_slice(&[outer.ids[j], outer.ids[(j + 1) % outer.ids.len()]]);
        labels.push(LABEL_SIGMA_EXT);
    }

    let n_cells = cells.len() / 3;
    SimplicialMesh::new(2, vertices, cells, vec![REGION_TORSO; n_cells], facets, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_breaks_cover_unit_interval() {
        let b = graded_breaks(100.0, 2.0, 10.0);
        assert_eq!(b[0], 0.0);
        assert_eq!(*b.last().unwrap(), 1.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        // Gaps grow monotonically for h1 > h0.
        let gaps: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.windows(2).all(|g| g[1] > g[0]));
    }

    #[test]
    fn disc_area_converges() {
        let mut spec = IdealGeometrySpec::desk_default();
        spec.heart_radius = 30.0;
        spec.h_heart = 2.0;
        let (heart, _) = generate_pair(&spec).unwrap();
        let area = heart.total_measure();
        let exact = std::f64::consts::PI * 30.0 * 30.0;
        // Inscribed polygon area deficit is O(h^2).
        assert!((area - exact).abs() / exact < 5e-3, "area {area} vs {exact}");
    }

    #[test]
    fn desk_default_pair_is_valid_and_conforming() {
        let spec = IdealGeometrySpec::desk_default();
        let (heart, torso) = generate_pair(&spec).unwrap();
        let hb = heart.surface_vertices(LABEL_GAMMA);
        let tb = torso.surface_vertices(LABEL_GAMMA);
        assert_eq!(hb.len(), tb.len());
        // Either side's interface vertex set matches exactly.
        let mut hset: Vec<[u64; 2]> = hb
            .iter()
            .map(|&v| {
                let p = heart.vertex(v);
                [p[0].to_bits(), p[1].to_bits()]
            })
            .collect();
        let mut tset: Vec<[u64; 2]> = tb
            .iter()
            .map(|&v| {
                let p = torso.vertex(v);
                [p[0].to_bits(), p[1].to_bits()]
            })
            .collect();
        hset.sort_unstable();
        tset.sort_unstable();
        assert_eq!(hset, tset);
    }

    #[test]
    fn torso_area_is_box_minus_disc() {
        let spec = IdealGeometrySpec::desk_default();
        let (_, torso) = generate_pair(&spec).unwrap();
        let exact = 400.0 * 600.0 - std::f64::consts::PI * 60.0 * 60.0;
        let area = torso.total_measure();
        assert!(
            (area - exact).abs() / exact < 5e-3,
            "torso area {area} vs box-minus-disc {exact}"
        );
    }

    #[test]
    fn nonconforming_hole_is_coarser() {
        let mut spec = IdealGeometrySpec::desk_default();
        spec.conforming = false;
        spec.h_torso_interface = 2.0 * spec.h_heart;
        let (heart, torso) = generate_pair(&spec).unwrap();
        let nh = heart.surface_vertices(LABEL_GAMMA).len();
        let nt = torso.surface_vertices(LABEL_GAMMA).len();
        let expected = (nh as f64 / 2.0).round() as i64;
        assert!(
            (nt as i64 - expected).abs() <= 2,
            "hole ring has {nt} vertices, expected about {expected}"
        );
    }

    #[test]
    fn grading_puts_mean_edge_between_targets() {
        let spec = IdealGeometrySpec::desk_default();
        let (_, torso) = generate_pair(&spec).unwrap();
        // Mean cell edge length across the torso.
        let mut total = 0.0;
        let mut count = 0usize;
        for c in 0..torso.n_cells() {
            let cell = torso.cell(c);
            for e in 0..3 {
                total += vec3::dist(
                    torso.vertex(cell[e] as usize),
                    torso.vertex(cell[(e + 1) % 3] as usize),
                );
                count += 1;
            }
        }
        let mean = total / count as f64;
        assert!(
            mean > spec.h_torso_interface && mean < spec.h_torso_exterior,
            "mean torso edge {mean} not between {} and {}",
            spec.h_torso_interface,
            spec.h_torso_exterior
        );
    }

    #[test]
    fn infeasible_spec_is_rejected() {
        let mut spec = IdealGeometrySpec::desk_default();
        spec.heart_radius = 195.0;
        assert!(matches!(generate_pair(&spec), Err(MeshError::InfeasibleSpec(_))));
    }

    #[test]
    fn identity_transform_is_exact() {
        let spec = IdealGeometrySpec::desk_default();
        let (heart, _) = generate_pair(&spec).unwrap();
        let moved = apply_rigid(&heart, &RigidTransform::identity()).unwrap();
        assert_eq!(heart.vertices(), moved.vertices());
    }

    #[test]
    fn translation_shifts_x_exactly() {
        let spec = IdealGeometrySpec::desk_default();
        let (heart, _) = generate_pair(&spec).unwrap();
        let t = RigidTransform::translation([10.0, 0.0, 0.0]);
        let moved = apply_rigid(&heart, &t).unwrap();
        for v in 0..heart.n_vertices() {
            assert_eq!(moved.vertex(v)[0], heart.vertex(v)[0] + 10.0);
            assert_eq!(moved.vertex(v)[1], heart.vertex(v)[1]);
        }
    }

    #[test]
    fn rotation_preserves_distance_to_pivot() {
        let spec = IdealGeometrySpec::desk_default();
        let (heart, _) = generate_pair(&spec).unwrap();
        let pivot = spec.heart_center;
        let t = RigidTransform::rotation_deg([0.0, 0.0, 1.0], 3.0, pivot);
        let moved = apply_rigid(&heart, &t).unwrap();
        for v in 0..heart.n_vertices() {
            let before = vec3::dist(heart.vertex(v), pivot);
            let after = vec3::dist(moved.vertex(v), pivot);
            assert!((before - after).abs() < 1e-10);
        }
    }

    #[test]
    fn rigid_roundtrip_is_identity() {
        let spec = IdealGeometrySpec::desk_default();
        let (heart, _) = generate_pair(&spec).unwrap();
        let t = RigidTransform {
            translation: [7.0, -3.0, 0.0],
            axis: [0.0, 0.0, 1.0],
            angle_deg: 13.0,
            pivot: spec.heart_center,
        };
        let there = apply_rigid(&heart, &t).unwrap();
        let back = apply_rigid(&there, &t.inverse()).unwrap();
        for v in 0..heart.n_vertices() {
            assert!(vec3::dist(back.vertex(v), heart.vertex(v)) < 1e-9);
        }
    }

    #[test]
    fn volumes_preserved_under_rigid_motion() {
        let spec = IdealGeometrySpec::desk_default();
        let (heart, _) = generate_pair(&spec).unwrap();
        let t = RigidTransform {
            translation: [5.0, 8.0, 0.0],
            axis: [0.0, 0.0, 1.0],
            angle_deg: 9.0,
            pivot: [0.0, 0.0, 0.0],
        };
        let moved = apply_rigid(&heart, &t).unwrap();
        for c in 0..heart.n_cells() {
            let a = heart.cell_measure(c);
            let b = moved.cell_measure(c);
            assert!((a - b).abs() / a < 1e-10);
        }
    }

    #[test]
    fn rectangle_mesh_is_exact() {
        let mesh = structured_rectangle([0.0, 0.0], [2.0, 1.0], 4, 2, 0);
        assert_eq!(mesh.n_vertices(), 15);
        assert_eq!(mesh.n_cells(), 16);
        assert!((mesh.total_measure() - 2.0).abs() < 1e-14);
        let patch = mesh.extract_boundary(LABEL_GAMMA).unwrap();
        assert!((patch.area() - 6.0).abs() < 1e-14);
    }
}
