//! P1 assembly of mass, stiffness, and load operators, conduction tensors
//! from fiber frames, and Dirichlet elimination.
//!
//! Units follow the rest of the project: lengths in mm, conductivities in
//! mS/mm. A conduction tensor is D = σ_ℓ ffᵀ + σ_t ssᵀ (+ σ_n nnᵀ in 3D)
//! for an orthonormal frame (f, s, n), so its eigenvalues are exactly the σ.

use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::FemError;
use cardiowave_mesh::vec3::{self, Vec3};
use cardiowave_mesh::SimplicialMesh;

const FRAME_TOL: f64 = 1e-10;

/// Per-cell orthonormal material frame: fiber direction `f`, sheet `s`, and
/// in 3D the sheet-normal `n`. In 2D all vectors lie in the plane.
#[derive(Debug, Clone)]
pub struct FiberFrame {
    dim: usize,
    f: Vec<Vec3>,
    s: Vec<Vec3>,
    n: Vec<Vec3>,
}

impl FiberFrame {
    pub fn new(dim: usize, f: Vec<Vec3>, s: Vec<Vec3>, n: Vec<Vec3>) -> Result<Self, FemError> {
        if f.len() != s.len() || (dim == 3 && n.len() != f.len()) || (dim == 2 && !n.is_empty()) {
            return Err(FemError::InvalidFrame(format!(
                "component counts disagree: f {}, s {}, n {} in {dim}D",
                f.len(),
                s.len(),
                n.len()
            )));
        }
        for c in 0..f.len() {
            let vs: &[Vec3] = if dim == 2 { &[f[c], s[c]] } else { &[f[c], s[c], n[c]] };
            for (k, v) in vs.iter().enumerate() {
                if (vec3::norm(*v) - 1.0).abs() > FRAME_TOL {
                    return Err(FemError::InvalidFrame(format!(
                        "cell {c}: vector {k} has norm {}",
                        vec3::norm(*v)
                    )));
                }
                if dim == 2 && v[2].abs() > FRAME_TOL {
                    return Err(FemError::InvalidFrame(format!(
                        "cell {c}: 2D frame vector has out-of-plane component {}",
                        v[2]
                    )));
                }
            }
            for a in 0..vs.len() {
                for b in a + 1..vs.len() {
                    let d = vec3::dot(vs[a], vs[b]);
                    if d.abs() > FRAME_TOL {
                        return Err(FemError::InvalidFrame(format!(
                            "cell {c}: vectors {a} and {b} have dot product {d}"
                        )));
                    }
                }
            }
        }
        Ok(Self { dim, f, s, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.f.len()
    }

    /// The same (f, s[, n]) triple for every cell.
    pub fn uniform(mesh: &SimplicialMesh, f: Vec3, s: Vec3, n: Option<Vec3>) -> Result<Self, FemError> {
        let nc = mesh.n_cells();
        let nv = match (mesh.dim(), n) {
            (3, Some(nvec)) => vec![nvec; nc],
            (2, None) => Vec::new(),
            _ => {
                return Err(FemError::InvalidFrame(
                    "the n vector is required exactly when the mesh is 3D".into(),
                ))
            }
        };
        Self::new(mesh.dim(), vec![f; nc], vec![s; nc], nv)
    }

    /// Analytic desk-geometry frame: `f` circumferential around `center`
    /// (about the z-axis in 3D), `s` radial in-plane, `n` = z. Cells whose
    /// centroid lies on the axis fall back to the coordinate frame.
    pub fn circumferential(mesh: &SimplicialMesh, center: Vec3) -> Self {
        let nc = mesh.n_cells();
        let mut f = Vec::with_capacity(nc);
        let mut s = Vec::with_capacity(nc);
        let mut n = Vec::with_capacity(if mesh.dim() == 3 { nc } else { 0 });
        for c in 0..nc {
            let g = mesh.cell_centroid(c);
            let rx = g[0] - center[0];
            let ry = g[1] - center[1];
            let len = (rx * rx + ry * ry).sqrt();
            let (fc, sc) = if len > 1e-9 {
                ([-ry / len, rx / len, 0.0], [rx / len, ry / len, 0.0])
            } else {
                ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
            };
            f.push(fc);
            s.push(sc);
            if mesh.dim() == 3 {
                n.push([0.0, 0.0, 1.0]);
            }
        }
        Self::new(mesh.dim(), f, s, n).expect("constructed frame is orthonormal")
    }
}

/// Per-cell symmetric conduction tensors; in 2D only the upper 2x2 block is
/// populated.
#[derive(Debug, Clone)]
pub struct ConductivityField {
    pub dim: usize,
    pub tensors: Vec<[[f64; 3]; 3]>,
}

impl ConductivityField {
    pub fn isotropic(mesh: &SimplicialMesh, sigma: f64) -> Self {
        assert!(sigma > 0.0);
        let mut t = [[0.0; 3]; 3];
        for a in 0..mesh.dim() {
            t[a][a] = sigma;
        }
        Self { dim: mesh.dim(), tensors: vec![t; mesh.n_cells()] }
    }

    pub fn n_cells(&self) -> usize {
        self.tensors.len()
    }
}

/// D = σ_ℓ ffᵀ + σ_t ssᵀ (+ σ_n nnᵀ in 3D). `sigma` is (σ_ℓ, σ_t, σ_n);
/// σ_n is ignored in 2D.
pub fn build_conduction_tensor(frame: &FiberFrame, sigma: (f64, f64, f64)) -> ConductivityField {
    let (sl, st, sn) = sigma;
    assert!(sl > 0.0 && st > 0.0 && (frame.dim == 2 || sn > 0.0));
    let mut tensors = Vec::with_capacity(frame.n_cells());
    for c in 0..frame.n_cells() {
        let mut t = [[0.0; 3]; 3];
        let mut add = |w: f64, v: Vec3| {
            for a in 0..3 {
                for b in 0..3 {
                    t[a][b] += w * v[a] * v[b];
                }
            }
        };
        add(sl, frame.f[c]);
        add(st, frame.s[c]);
        if frame.dim == 3 {
            add(sn, frame.n[c]);
        }
        tensors.push(t);
    }
    ConductivityField { dim: frame.dim, tensors }
}

/// Per-direction harmonic combination D_m = D_e (D_e + D_i)⁻¹ D_i, defined
/// when both fields share an eigenbasis (they commute). Eigenvalues become
/// σ_e σ_i / (σ_e + σ_i) direction by direction.
pub fn harmonic_tensor(
    di: &ConductivityField,
    de: &ConductivityField,
) -> Result<ConductivityField, FemError> {
    if di.dim != de.dim || di.n_cells() != de.n_cells() {
        return Err(FemError::MismatchedFrames(format!(
            "field shapes differ: {}D/{} cells vs {}D/{} cells",
            di.dim,
            di.n_cells(),
            de.dim,
            de.n_cells()
        )));
    }
    let d = di.dim;
    let mut tensors = Vec::with_capacity(di.n_cells());
    for c in 0..di.n_cells() {
        let a = di.tensors[c];
        let b = de.tensors[c];
        let scale = frob(&a, d) * frob(&b, d);
        let comm = comm_norm(&a, &b, d);
        if comm > 1e-10 * scale.max(1e-300) {
            return Err(FemError::MismatchedFrames(format!(
                "cell {c}: tensors do not commute (‖[Di,De]‖ = {comm:.3e})"
            )));
        }
        let sum = add_t(&a, &b, d);
        let inv = invert(&sum, d).ok_or_else(|| {
            FemError::MismatchedFrames(format!("cell {c}: D_i + D_e is singular"))
        })?;
        tensors.push(mul_t(&mul_t(&b, &inv, d), &a, d));
    }
    Ok(ConductivityField { dim: d, tensors })
}

fn frob(t: &[[f64; 3]; 3], d: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            s += t[a][b] * t[a][b];
        }
    }
    s.sqrt()
}

fn comm_norm(x: &[[f64; 3]; 3], y: &[[f64; 3]; 3], d: usize) -> f64 {
    let xy = mul_t(x, y, d);
    let yx = mul_t(y, x, d);
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            worst = worst.max((xy[a][b] - yx[a][b]).abs());
        }
    }
    worst
}

fn add_t(x: &[[f64; 3]; 3], y: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for a in 0..d {
        for b in 0..d {
            r[a][b] = x[a][b] + y[a][b];
        }
    }
    r
}

fn mul_t(x: &[[f64; 3]; 3], y: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for a in 0..d {
        for b in 0..d {
            for k in 0..d {
                r[a][b] += x[a][k] * y[k][b];
            }
        }
    }
    r
}

fn invert(t: &[[f64; 3]; 3], d: usize) -> Option<[[f64; 3]; 3]> {
    let mut r = [[0.0; 3]; 3];
    if d == 2 {
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        r[0][0] = t[1][1] / det;
        r[1][1] = t[0][0] / det;
        r[0][1] = -t[0][1] / det;
        r[1][0] = -t[1][0] / det;
    } else {
        let c00 = t[1][1] * t[2][2] - t[1][2] * t[2][1];
        let c01 = t[1][2] * t[2][0] - t[1][0] * t[2][2];
        let c02 = t[1][0] * t[2][1] - t[1][1] * t[2][0];
        let det = t[0][0] * c00 + t[0][1] * c01 + t[0][2] * c02;
        if det.abs() < 1e-300 {
            return None;
        }
        let c = [
            [c00, t[0][2] * t[2][1] - t[0][1] * t[2][2], t[0][1] * t[1][2] - t[0][2] * t[1][1]],
            [c01, t[0][0] * t[2][2] - t[0][2] * t[2][0], t[0][2] * t[1][0] - t[0][0] * t[1][2]],
            [c02, t[0][1] * t[2][0] - t[0][0] * t[2][1], t[0][0] * t[1][1] - t[0][1] * t[1][0]],
        ];
        for a in 0..3 {
            for b in 0..3 {
                r[a][b] = c[a][b] / det;
            }
        }
    }
    Some(r)
}

/// Consistent P1 mass matrix scaled by `coeff`. The total of all entries is
/// coeff · |Ω|.
pub fn assemble_mass(mesh: &SimplicialMesh, coeff: f64) -> CsrMatrix {
    let k = mesh.dim() + 1;
    let mut b = TripletBuilder::new(mesh.n_vertices());
    let denom = ((k * (k + 1)) / 2) as f64; // 2D: 6, 3D: 10; entry = m/(denom·2)·(1+δ)
    for c in 0..mesh.n_cells() {
        let scale = coeff * mesh.cell_measure(c) / (denom * 2.0);
        let cell = mesh.cell(c);
        for a in 0..k {
            for bb in 0..k {
                let w = if a == bb { 2.0 } else { 1.0 };
                b.push(cell[a] as usize, cell[bb] as usize, scale * w);
            }
        }
    }
    b.finish()
}

/// Diagonal (lumped) mass: each vertex gets measure/(d+1) from every
/// incident cell. Used for weighted means and surface norms.
pub fn lumped_mass(mesh: &SimplicialMesh) -> Vec<f64> {
    let k = mesh.dim() + 1;
    let mut w = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let share = mesh.cell_measure(c) / k as f64;
        for &v in mesh.cell(c) {
            w[v as usize] += share;
        }
    }
    w
}

/// P1 gradients of the barycentric basis on cell `c`, one Vec3 per vertex.
fn cell_gradients(mesh: &SimplicialMesh, c: usize) -> ([Vec3; 4], usize) {
    let cell = mesh.cell(c);
    let p0 = mesh.vertex(cell[0] as usize);
    let mut g = [[0.0; 3]; 4];
    if mesh.dim() == 2 {
        let e1 = vec3::sub(mesh.vertex(cell[1] as usize), p0);
        let e2 = vec3::sub(mesh.vertex(cell[2] as usize), p0);
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        g[1] = [e2[1] / det, -e2[0] / det, 0.0];
        g[2] = [-e1[1] / det, e1[0] / det, 0.0];
        g[0] = [-g[1][0] - g[2][0], -g[1][1] - g[2][1], 0.0];
        (g, 3)
    } else {
        let e1 = vec3::sub(mesh.vertex(cell[1] as usize), p0);
        let e2 = vec3::sub(mesh.vertex(cell[2] as usize), p0);
        let e3 = vec3::sub(mesh.vertex(cell[3] as usize), p0);
        let det = vec3::dot(e1, vec3::cross(e2, e3));
        g[1] = vec3::scale(vec3::cross(e2, e3), 1.0 / det);
        g[2] = vec3::scale(vec3::cross(e3, e1), 1.0 / det);
        g[3] = vec3::scale(vec3::cross(e1, e2), 1.0 / det);
        g[0] = [
            -g[1][0] - g[2][0] - g[3][0],
            -g[1][1] - g[2][1] - g[3][1],
            -g[1][2] - g[2][2] - g[3][2],
        ];
        (g, 4)
    }
}

/// Anisotropic P1 stiffness ∫ D ∇u·∇φ. Symmetric PSD with constants in the
/// nullspace.
pub fn assemble_stiffness(mesh: &SimplicialMesh, field: &ConductivityField) -> CsrMatrix {
    assert_eq!(field.n_cells(), mesh.n_cells());
    assert_eq!(field.dim, mesh.dim());
    let k = mesh.dim() + 1;
    let mut b = TripletBuilder::new(mesh.n_vertices());
    for c in 0..mesh.n_cells() {
        let (g, nk) = cell_gradients(mesh, c);
        debug_assert_eq!(nk, k);
        let t = &field.tensors[c];
        let measure = mesh.cell_measure(c);
        let cell = mesh.cell(c);
        let mut dg = [[0.0; 3]; 4];
        for i in 0..k {
            for a in 0..3 {
                dg[i][a] = t[a][0] * g[i][0] + t[a][1] * g[i][1] + t[a][2] * g[i][2];
            }
        }
        for i in 0..k {
            for j in 0..k {
                let kij = measure * vec3::dot(g[i], dg[j]);
                b.push(cell[i] as usize, cell[j] as usize, kij);
            }
        }
    }
    b.finish()
}

/// Source field for load assembly: one value per cell, or nodal values
/// evaluated at cell centroids (their P1 mean).
pub enum SourceField<'a> {
    PerCell(&'a [f64]),
    Nodal(&'a [f64]),
}

/// P1 load vector with one-point (centroid) quadrature: each cell spreads
/// value·measure equally over its vertices. The entries sum to ∫ source.
pub fn assemble_load(mesh: &SimplicialMesh, source: SourceField) -> Result<Vec<f64>, FemError> {
    let k = mesh.dim() + 1;
    match &source {
        SourceField::PerCell(v) if v.len() != mesh.n_cells() => {
            return Err(FemError::SizeMismatch(format!(
                "{} cell values for {} cells",
                v.len(),
                mesh.n_cells()
            )))
        }
        SourceField::Nodal(v) if v.len() != mesh.n_vertices() => {
            return Err(FemError::SizeMismatch(format!(
                "{} nodal values for {} vertices",
                v.len(),
                mesh.n_vertices()
            )))
        }
        _ => {}
    }
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        let value = match &source {
            SourceField::PerCell(v) => v[c],
            SourceField::Nodal(v) => {
                cell.iter().map(|&i| v[i as usize]).sum::<f64>() / k as f64
            }
        };
        let share = value * mesh.cell_measure(c) / k as f64;
        for &v in cell {
            out[v as usize] += share;
        }
    }
    Ok(out)
}

/// Symmetric Dirichlet elimination: constrained rows and columns are zeroed,
/// the diagonal set to 1, and the right-hand side compensated so the solution
/// reproduces the prescribed values exactly.
pub fn apply_dirichlet(
    a: &CsrMatrix,
    b: &[f64],
    nodes: &[u32],
    values: &[f64],
) -> Result<(CsrMatrix, Vec<f64>), FemError> {
    if nodes.len() != values.len() {
        return Err(FemError::SizeMismatch(format!(
            "{} nodes but {} values",
            nodes.len(),
            values.len()
        )));
    }
    let system = ConstrainedSystem::new(a, nodes, values)?;
    let mut full = vec![0.0; a.n()];
    for (&i, &v) in nodes.iter().zip(values) {
        full[i as usize] = v;
    }
    let rhs = system.rhs(b, &full);
    Ok((system.matrix, rhs))
}

/// A Dirichlet-eliminated system prepared once and reused with changing
/// boundary values: `matrix` has constrained rows/columns eliminated, and
/// `rhs` folds any prescribed values into a compensated right-hand side.
pub struct ConstrainedSystem {
    pub matrix: CsrMatrix,
    coupling: CsrMatrix,
    constrained: Vec<bool>,
}

impl ConstrainedSystem {
    pub fn new(a: &CsrMatrix, nodes: &[u32], values: &[f64]) -> Result<Self, FemError> {
        let n = a.n();
        let mut constrained = vec![false; n];
        let mut seen = vec![f64::NAN; n];
        for (k, &i) in nodes.iter().enumerate() {
            let i = i as usize;
            if constrained[i] && k < values.len() && seen[i] != values[k] {
                return Err(FemError::ConflictingConstraint { node: i });
            }
            constrained[i] = true;
            if k < values.len() {
                seen[i] = values[k];
            }
        }
        let mut reduced = TripletBuilder::new(n);
        let mut coupling = TripletBuilder::new(n);
        for i in 0..n {
            if constrained[i] {
                reduced.push(i, i, 1.0);
                continue;
            }
            for (j, v) in a.row(i) {
                if constrained[j] {
                    coupling.push(i, j, v);
                } else {
                    reduced.push(i, j, v);
                }
            }
        }
        Ok(Self { matrix: reduced.finish(), coupling: coupling.finish(), constrained })
    }

    /// Compensated right-hand side for prescribed values `g` (full-size
    /// vector; only constrained entries are read).
    pub fn rhs(&self, b: &[f64], g: &[f64]) -> Vec<f64> {
        let n = self.constrained.len();
        assert_eq!(b.len(), n);
        assert_eq!(g.len(), n);
        let mut shift = vec![0.0; n];
        self.coupling.matvec(g, &mut shift);
        (0..n)
            .map(|i| if self.constrained[i] { g[i] } else { b[i] - shift[i] })
            .collect()
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.constrained[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{cg_solve, SolverConfig};

    fn unit_right_triangle() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![0, 1, 2],
            vec![0],
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn mass_element_matrix_is_exact() {
        let mesh = unit_right_triangle();
        let m = assemble_mass(&mesh, 1.0);
        let expect = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - expect[i][j] / 24.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_element_matrix_is_exact() {
        let mesh = unit_right_triangle();
        let field = ConductivityField::isotropic(&mesh, 1.0);
        let k = assemble_stiffness(&mesh, &field);
        let expect = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - expect[i][j] / 2.0).abs() < 1e-15, "at ({i},{j})");
            }
        }
    }

    #[test]
    fn mass_total_equals_domain_measure() {
        let mesh = cardiowave_mesh::factory::structured_rectangle([0.0, 0.0], [2.0, 3.0], 5, 4, 0);
        let m = assemble_mass(&mesh, 2.5);
        let total: f64 = (0..m.n()).map(|i| m.row(i).map(|(_, v)| v).sum::<f64>()).sum();
        assert!((total - 2.5 * 6.0).abs() < 1e-12);
        let zero = assemble_mass(&mesh, 0.0);
        assert_eq!(zero.infinity_norm(), 0.0);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let mesh = cardiowave_mesh::factory::structured_rectangle([0.0, 0.0], [1.0, 1.0], 6, 6, 0);
        let field = ConductivityField::isotropic(&mesh, 1.7);
        let k = assemble_stiffness(&mesh, &field);
        assert_eq!(k.symmetry_error(), 0.0);
        let ones = vec![1.0; k.n()];
        let mut y = vec![0.0; k.n()];
        k.matvec(&ones, &mut y);
        let worst = y.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(worst <= 1e-12 * k.infinity_norm());
    }

    #[test]
    fn canonical_frame_gives_diagonal_tensor() {
        let mesh = unit_right_triangle();
        let frame = FiberFrame::uniform(&mesh, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], None).unwrap();
        let d = build_conduction_tensor(&frame, (3.0, 2.0, 1.0));
        assert_eq!(d.tensors[0][0][0], 3.0);
        assert_eq!(d.tensors[0][1][1], 2.0);
        assert_eq!(d.tensors[0][0][1], 0.0);
    }

    #[test]
    fn isotropic_sigma_gives_sigma_identity_for_any_frame() {
        let mesh = unit_right_triangle();
        let c = 0.6f64.cos();
        let s = 0.6f64.sin();
        let frame = FiberFrame::uniform(&mesh, [c, s, 0.0], [-s, c, 0.0], None).unwrap();
        let d = build_conduction_tensor(&frame, (2.0, 2.0, 2.0));
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((d.tensors[0][a][b] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rotated_frame_has_prescribed_eigenpairs() {
        let mesh = unit_right_triangle();
        let th = 30.0f64.to_radians();
        let f = [th.cos(), th.sin(), 0.0];
        let s = [-th.sin(), th.cos(), 0.0];
        let frame = FiberFrame::uniform(&mesh, f, s, None).unwrap();
        let d = build_conduction_tensor(&frame, (3.0, 1.0, 1.0));
        let t = &d.tensors[0];
        // D f = 3 f and D s = s.
        for a in 0..2 {
            let df = t[a][0] * f[0] + t[a][1] * f[1];
            assert!((df - 3.0 * f[a]).abs() < 1e-12);
            let ds = t[a][0] * s[0] + t[a][1] * s[1];
            assert!((ds - s[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn nonorthonormal_frame_is_rejected() {
        let mesh = unit_right_triangle();
        assert!(FiberFrame::uniform(&mesh, [1.0, 0.0, 0.0], [0.7, 0.7, 0.0], None).is_err());
        assert!(FiberFrame::uniform(&mesh, [2.0, 0.0, 0.0], [0.0, 1.0, 0.0], None).is_err());
    }

    #[test]
    fn harmonic_tensor_matches_scalar_arithmetic() {
        let mesh = unit_right_triangle();
        let frame = FiberFrame::uniform(&mesh, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], None).unwrap();
        let di = build_conduction_tensor(&frame, (2.0, 2.0, 2.0));
        let de = build_conduction_tensor(&frame, (2.0, 2.0, 2.0));
        let dm = harmonic_tensor(&di, &de).unwrap();
        assert!((dm.tensors[0][0][0] - 1.0).abs() < 1e-14);

        let di = build_conduction_tensor(&frame, (1.0, 1.0, 1.0));
        let de = build_conduction_tensor(&frame, (3.0, 3.0, 3.0));
        let dm = harmonic_tensor(&di, &de).unwrap();
        assert!((dm.tensors[0][0][0] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn harmonic_of_proportional_tensors_is_scaled_di() {
        let mesh = unit_right_triangle();
        let th = 40.0f64.to_radians();
        let frame =
            FiberFrame::uniform(&mesh, [th.cos(), th.sin(), 0.0], [-th.sin(), th.cos(), 0.0], None)
                .unwrap();
        let lambda = 2.5;
        let di = build_conduction_tensor(&frame, (0.17, 0.019, 0.019));
        let de = build_conduction_tensor(&frame, (lambda * 0.17, lambda * 0.019, lambda * 0.019));
        let dm = harmonic_tensor(&di, &de).unwrap();
        let want = lambda / (1.0 + lambda);
        for a in 0..2 {
            for b in 0..2 {
                assert!((dm.tensors[0][a][b] - want * di.tensors[0][a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mismatched_eigenbases_are_rejected() {
        let mesh = unit_right_triangle();
        let f1 = FiberFrame::uniform(&mesh, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], None).unwrap();
        let th = 45.0f64.to_radians();
        let f2 =
            FiberFrame::uniform(&mesh, [th.cos(), th.sin(), 0.0], [-th.sin(), th.cos(), 0.0], None)
                .unwrap();
        let di = build_conduction_tensor(&f1, (3.0, 1.0, 1.0));
        let de = build_conduction_tensor(&f2, (3.0, 1.0, 1.0));
        assert!(matches!(harmonic_tensor(&di, &de), Err(FemError::MismatchedFrames(_))));
    }

    #[test]
    fn load_total_matches_integral() {
        let mesh = cardiowave_mesh::factory::structured_rectangle([0.0, 0.0], [1.0, 1.0], 4, 4, 0);
        let ones = vec![1.0; mesh.n_cells()];
        let load = assemble_load(&mesh, SourceField::PerCell(&ones)).unwrap();
        assert!((load.iter().sum::<f64>() - 1.0).abs() < 1e-14);

        let zeros = vec![0.0; mesh.n_vertices()];
        let load = assemble_load(&mesh, SourceField::Nodal(&zeros)).unwrap();
        assert!(load.iter().all(|&v| v == 0.0));

        let mut one_cell = vec![0.0; mesh.n_cells()];
        one_cell[3] = 4.0;
        let load = assemble_load(&mesh, SourceField::PerCell(&one_cell)).unwrap();
        let expect = 4.0 * mesh.cell_measure(3);
        assert!((load.iter().sum::<f64>() - expect).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_on_path_laplacian() {
        let mut b = TripletBuilder::new(3);
        for (i, j) in [(0usize, 1usize), (1, 2)] {
            b.push(i, i, 1.0);
            b.push(j, j, 1.0);
            b.push(i, j, -1.0);
            b.push(j, i, -1.0);
        }
        let k = b.finish();
        let (a, rhs) = apply_dirichlet(&k, &[0.0, 0.0, 0.0], &[0, 2], &[0.0, 1.0]).unwrap();
        let cfg = SolverConfig { tol: 1e-13, ..Default::default() };
        let (x, _) = cg_solve(&a, &rhs, &cfg).unwrap();
        assert!(x[0].abs() < 1e-12);
        assert!((x[1] - 0.5).abs() < 1e-12);
        assert!((x[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constraining_every_node_reproduces_values() {
        let k = CsrMatrix::identity(3);
        let (a, rhs) =
            apply_dirichlet(&k, &[9.0, 9.0, 9.0], &[0, 1, 2], &[1.0, 2.0, 3.0]).unwrap();
        let (x, _) = cg_solve(&a, &rhs, &SolverConfig::default()).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_constraint_set_changes_nothing() {
        let mesh = unit_right_triangle();
        let m = assemble_mass(&mesh, 1.0);
        let b = [1.0, 2.0, 3.0];
        let (a, rhs) = apply_dirichlet(&m, &b, &[], &[]).unwrap();
        assert_eq!(a, m);
        assert_eq!(rhs, b.to_vec());
    }

    #[test]
    fn conflicting_constraints_are_rejected() {
        let k = CsrMatrix::identity(2);
        let err = apply_dirichlet(&k, &[0.0, 0.0], &[0, 0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, FemError::ConflictingConstraint { node: 0 }));
    }

    #[test]
    fn lumped_mass_sums_to_measure() {
        let mesh = cardiowave_mesh::factory::structured_rectangle([0.0, 0.0], [2.0, 1.0], 3, 3, 0);
        let w = lumped_mass(&mesh);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(w.iter().all(|&x| x > 0.0));
    }
}
