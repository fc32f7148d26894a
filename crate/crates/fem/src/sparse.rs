//! Compressed sparse row matrices and preconditioned conjugate gradients,
//! including a deflated variant for singular systems with a known
//! one-dimensional nullspace (pure-Neumann problems, block systems with a
//! floating potential).

use crate::FemError;

/// Triplet accumulator for FEM scatter. Duplicate (row, col) entries are
/// summed when the CSR matrix is finalized.
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    /// Scatter `scale * m` with rows and columns renumbered through index
    /// maps (used to place submeshes and blocks into a larger system).
    pub fn scatter_mapped(&mut self, rows: &[u32], cols: &[u32], scale: f64, m: &CsrMatrix) {
        assert_eq!(rows.len(), m.n());
        assert_eq!(cols.len(), m.n());
        for i in 0..m.n() {
            for (j, v) in m.row(i) {
                self.push(rows[i] as usize, cols[j] as usize, scale * v);
            }
        }
    }

    /// Scatter `scale * m` at a diagonal-aligned offset.
    pub fn scatter_offset(&mut self, row_offset: usize, col_offset: usize, scale: f64, m: &CsrMatrix) {
        for i in 0..m.n() {
            for (j, v) in m.row(i) {
                self.push(row_offset + i, col_offset + j, scale * v);
            }
        }
    }

    pub fn finish(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col: Vec<u32> = Vec::with_capacity(self.entries.len());
        let mut val: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(u32, u32)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                last = Some((i, j));
            }
            row_ptr[i as usize + 1] = col.len();
        }
        // Empty rows inherit the previous offset.
        for r in 1..=self.n {
            row_ptr[r] = row_ptr[r].max(row_ptr[r - 1]);
        }
        CsrMatrix { row_ptr, col, val }
    }
}

/// Square sparse matrix in CSR form; column indices are sorted and unique
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            row_ptr: (0..=n).collect(),
            col: (0..n as u32).collect(),
            val: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().zip(&self.val[r]).map(|(&j, &v)| (j as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x. Each row is reduced in column order, so results are
    /// deterministic.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n());
        assert_eq!(y.len(), self.n());
        for i in 0..self.n() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k] as usize];
            }
            y[i] = acc;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// Largest absolute asymmetry max |A_ij - A_ji|.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Sum of scaled matrices: Σ cᵢ Aᵢ (patterns may differ).
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        assert!(!terms.is_empty());
        let n = terms[0].1.n();
        let mut b = TripletBuilder::new(n);
        for &(c, m) in terms {
            assert_eq!(m.n(), n);
            b.scatter_offset(0, 0, c, m);
        }
        b.finish()
    }

    pub fn infinity_norm(&self) -> f64 {
        (0..self.n())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

/// Conjugate-gradient controls. The tolerance is relative to ‖b‖₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 5000, preconditioner: Preconditioner::Jacobi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final ‖b − Ax‖₂ / ‖b‖₂ (absolute residual when b = 0).
    pub residual: f64,
}

/// Reusable CG scratch space. Warm starts are the norm in the time loop:
/// `solve` takes the initial guess in `x` and leaves the solution there.
pub struct CgWorkspace {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl CgWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
            inv_diag: Vec::new(),
        }
    }

    fn prepare_preconditioner(&mut self, a: &CsrMatrix, cfg: &SolverConfig) {
        match cfg.preconditioner {
            Preconditioner::None => self.inv_diag.clear(),
            Preconditioner::Jacobi => {
                self.inv_diag = a
                    .diag()
                    .iter()
                    .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
                    .collect();
            }
        }
    }

    fn apply_preconditioner(&mut self) {
        if self.inv_diag.is_empty() {
            self.z.copy_from_slice(&self.r);
        } else {
            for i in 0..self.r.len() {
                self.z[i] = self.inv_diag[i] * self.r[i];
            }
        }
    }

    /// Preconditioned CG for SPD systems. `x` holds the initial guess on
    /// entry and the solution on success.
    pub fn solve(
        &mut self,
        a: &CsrMatrix,
        b: &[f64],
        x: &mut [f64],
        cfg: &SolverConfig,
    ) -> Result<CgReport, FemError> {
        self.solve_deflated(a, b, x, cfg, None)
    }

    /// CG with the constant nullspace deflated: the Euclidean mean of `b` is
    /// removed up front (feasibility), and the `weights`-weighted mean of the
    /// iterate is removed every iteration, so the returned solution satisfies
    /// Σ wᵢ xᵢ = 0.
    pub fn solve_zero_mean(
        &mut self,
        a: &CsrMatrix,
        b: &[f64],
        weights: &[f64],
        x: &mut [f64],
        cfg: &SolverConfig,
    ) -> Result<CgReport, FemError> {
        let ones = vec![1.0; a.n()];
        self.solve_deflated(a, b, x, cfg, Some((&ones, weights)))
    }

    /// CG on a singular SPD system whose one-dimensional nullspace is spanned
    /// by `direction`. The component of `b` along the direction is projected
    /// out (feasibility), and the iterate is shifted along the direction every
    /// iteration so the solution satisfies Σ wᵢ xᵢ = 0 for the given
    /// `weights` (which must not be orthogonal to the direction).
    pub fn solve_deflated(
        &mut self,
        a: &CsrMatrix,
        b: &[f64],
        x: &mut [f64],
        cfg: &SolverConfig,
        deflation: Option<(&[f64], &[f64])>,
    ) -> Result<CgReport, FemError> {
        let n = a.n();
        assert_eq!(b.len(), n);
        assert_eq!(x.len(), n);
        assert!(cfg.tol > 0.0);
        if let Some((z, w)) = deflation {
            assert_eq!(z.len(), n);
            assert_eq!(w.len(), n);
            assert!(dot(w, z) != 0.0, "weights are orthogonal to the nullspace");
        }
        self.prepare_preconditioner(a, cfg);

        let feasible_b: Vec<f64>;
        let b = match deflation {
            Some((z, _)) => {
                let shift = dot(z, b) / dot(z, z);
                feasible_b = b.iter().zip(z).map(|(&bi, &zi)| bi - shift * zi).collect();
                &feasible_b[..]
            }
            None => b,
        };
        let pick_solution = |x: &mut [f64]| {
            if let Some((z, w)) = deflation {
                let shift = dot(w, x) / dot(w, z);
                for (xi, &zi) in x.iter_mut().zip(z) {
                    *xi -= shift * zi;
                }
            }
        };

        let norm_b = norm2(b);
        if norm_b == 0.0 {
            x.fill(0.0);
            return Ok(CgReport { iterations: 0, residual: 0.0 });
        }
        let target = cfg.tol * norm_b;

        pick_solution(x);
        a.matvec(x, &mut self.r);
        for i in 0..n {
            self.r[i] = b[i] - self.r[i];
        }
        let mut res = norm2(&self.r);
        if res <= target {
            return Ok(CgReport { iterations: 0, residual: res / norm_b });
        }

        self.apply_preconditioner();
        self.p.copy_from_slice(&self.z);
        let mut rz = dot(&self.r, &self.z);

        for it in 1..=cfg.max_iter {
            a.matvec(&self.p, &mut self.ap);
            let pap = dot(&self.p, &self.ap);
            if pap <= 0.0 {
                return Err(FemError::NotPositiveDefinite { at_iteration: it });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * self.p[i];
                self.r[i] -= alpha * self.ap[i];
            }
            pick_solution(x);
            res = norm2(&self.r);
            if res <= target {
                return Ok(CgReport { iterations: it, residual: res / norm_b });
            }
            self.apply_preconditioner();
            let rz_next = dot(&self.r, &self.z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                self.p[i] = self.z[i] + beta * self.p[i];
            }
        }
        Err(FemError::NoConvergence { iterations: cfg.max_iter, residual: res / norm_b })
    }
}

/// One-shot CG from a zero initial guess.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, CgReport), FemError> {
    let mut x = vec![0.0; a.n()];
    let mut ws = CgWorkspace::new(a.n());
    let report = ws.solve(a, b, &mut x, cfg)?;
    Ok((x, report))
}

/// One-shot deflated CG from a zero initial guess; see
/// [`CgWorkspace::solve_zero_mean`].
pub fn cg_solve_zero_mean(
    a: &CsrMatrix,
    b: &[f64],
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, CgReport), FemError> {
    let mut x = vec![0.0; a.n()];
    let mut ws = CgWorkspace::new(a.n());
    let report = ws.solve_zero_mean(a, b, weights, &mut x, cfg)?;
    Ok((x, report))
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csr(n: usize, entries: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for &(i, j, v) in entries {
            b.push(i, j, v);
        }
        b.finish()
    }

    #[test]
    fn duplicates_are_summed_and_columns_sorted() {
        let m = csr(2, &[(0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0), (1, 1, 4.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        let cols: Vec<usize> = m.row(0).map(|(j, _)| j).collect();
        assert_eq!(cols, vec![0, 1]);
    }

    #[test]
    fn empty_rows_are_handled() {
        let m = csr(4, &[(0, 0, 1.0), (3, 3, 2.0)]);
        assert_eq!(m.row(1).count(), 0);
        assert_eq!(m.row(2).count(), 0);
        let mut y = vec![0.0; 4];
        m.matvec(&[1.0, 1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(3);
        let (x, rep) = cg_solve(&a, &[1.0, 2.0, 3.0], &SolverConfig::default()).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn two_by_two_matches_direct_inverse() {
        let a = csr(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let cfg = SolverConfig { tol: 1e-14, ..Default::default() };
        let (x, _) = cg_solve(&a, &[1.0, 2.0], &cfg).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_returns_zero_without_iterating() {
        let a = csr(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let (x, rep) = cg_solve(&a, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn warm_start_skips_iterations() {
        let a = csr(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
        let (sol, _) = cg_solve(&a, &[1.0, 2.0], &cfg).unwrap();
        let mut x = sol.clone();
        let mut ws = CgWorkspace::new(2);
        let rep = ws.solve(&a, &[1.0, 2.0], &mut x, &cfg).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(x, sol);
    }

    #[test]
    fn singular_laplacian_solved_with_zero_mean() {
        let a = csr(2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let cfg = SolverConfig { tol: 1e-13, ..Default::default() };
        let (x, _) = cg_solve_zero_mean(&a, &[1.0, -1.0], &[1.0, 1.0], &cfg).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert!((x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_rhs_gives_zero_solution() {
        let a = csr(2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let (x, _) =
            cg_solve_zero_mean(&a, &[3.0, 3.0], &[1.0, 1.0], &SolverConfig::default()).unwrap();
        assert!(x[0].abs() < 1e-14 && x[1].abs() < 1e-14);
    }

    #[test]
    fn constant_shift_of_rhs_does_not_change_solution() {
        // 4-node path-graph Laplacian.
        let mut b = TripletBuilder::new(4);
        for (i, j) in [(0usize, 1usize), (1, 2), (2, 3)] {
            b.push(i, i, 1.0);
            b.push(j, j, 1.0);
            b.push(i, j, -1.0);
            b.push(j, i, -1.0);
        }
        let a = b.finish();
        let w = [1.0, 2.0, 2.0, 1.0];
        let rhs = [1.0, -0.5, 0.25, -0.75];
        let shifted: Vec<f64> = rhs.iter().map(|v| v + 7.0).collect();
        let cfg = SolverConfig { tol: 1e-13, ..Default::default() };
        let (x1, _) = cg_solve_zero_mean(&a, &rhs, &w, &cfg).unwrap();
        let (x2, _) = cg_solve_zero_mean(&a, &shifted, &w, &cfg).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-8);
        }
        let wx: f64 = w.iter().zip(&x1).map(|(a, b)| a * b).sum();
        assert!(wx.abs() < 1e-10);
    }

    #[test]
    fn symmetry_error_detects_asymmetry() {
        let sym = csr(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        assert_eq!(sym.symmetry_error(), 0.0);
        let asym = csr(2, &[(0, 1, 1.0), (1, 0, 1.5)]);
        assert_eq!(asym.symmetry_error(), 0.5);
    }

    #[test]
    fn linear_combination_merges_patterns() {
        let a = csr(2, &[(0, 0, 1.0)]);
        let b = csr(2, &[(1, 1, 2.0), (0, 1, 1.0)]);
        let c = CsrMatrix::linear_combination(&[(2.0, &a), (3.0, &b)]);
        assert_eq!(c.get(0, 0), 2.0);
        assert_eq!(c.get(0, 1), 3.0);
        assert_eq!(c.get(1, 1), 6.0);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = csr(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let cfg = SolverConfig { tol: 1e-10, preconditioner: Preconditioner::None, max_iter: 10 };
        let err = cg_solve(&a, &[1.0, 1.0], &cfg).unwrap_err();
        assert!(matches!(err, FemError::NotPositiveDefinite { .. }));
    }
}
