//! Cross-checks against dense linear algebra and a grid-convergence study.
//!
//! Dense LU / symmetric eigensolves from nalgebra act as the independent
//! reference for the sparse CG path; the Laplace study pins second-order
//! accuracy of the P1 assembly end to end.

use cardiowave_fem::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, cg_solve,
    cg_solve_zero_mean, lumped_mass, ConductivityField, CsrMatrix, FemError, FiberFrame,
    Preconditioner, SolverConfig, SourceField, TripletBuilder, build_conduction_tensor,
};
use cardiowave_mesh::factory::{generate_pair, structured_rectangle, IdealGeometrySpec};
use cardiowave_mesh::LABEL_GAMMA;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let n = a.n();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

fn from_dense(d: &DMatrix<f64>) -> CsrMatrix {
    let mut b = TripletBuilder::new(d.nrows());
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            if d[(i, j)] != 0.0 {
                b.push(i, j, d[(i, j)]);
            }
        }
    }
    b.finish()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// CG agrees with dense LU on random SPD systems.
    #[test]
    fn cg_matches_dense_lu(
        n in 2usize..50,
        seed in proptest::collection::vec(-1.0f64..1.0, 50 * 50 + 50),
    ) {
        let b_mat = DMatrix::from_fn(n, n, |i, j| seed[i * n + j]);
        let a_dense = &b_mat * b_mat.transpose() + DMatrix::identity(n, n) * n as f64;
        let rhs: Vec<f64> = seed[50 * 50..50 * 50 + n].to_vec();

        let lu = a_dense.clone().lu();
        let x_ref = lu.solve(&DVector::from_column_slice(&rhs)).expect("SPD is invertible");

        let a = from_dense(&a_dense);
        let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
        let (x, _) = cg_solve(&a, &rhs, &cfg).unwrap();

        let scale = x_ref.amax().max(1.0);
        for i in 0..n {
            prop_assert!((x[i] - x_ref[i]).abs() <= 1e-6 * scale,
                "component {i}: {} vs {}", x[i], x_ref[i]);
        }
    }

    /// On diagonally dominant SPD systems the CG residual decreases
    /// monotonically. (Not a theorem for general SPD matrices, where the
    /// 2-norm residual may oscillate; dominance keeps the condition number
    /// small enough for it to hold reliably.)
    #[test]
    fn residual_is_monotone_on_dominant_systems(
        n in 3usize..20,
        seed in proptest::collection::vec(0.1f64..1.0, 20 * 20 + 20),
    ) {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = 0.5 * (seed[i * n + j] + seed[j * n + i]);
                    b.push(i, j, -v);
                    row_sum += v;
                }
            }
            b.push(i, i, row_sum + 1.0 + seed[20 * 20 + i]);
        }
        let a = b.finish();
        let rhs: Vec<f64> = seed[20 * 20..20 * 20 + n].to_vec();

        let mut last = f64::INFINITY;
        for k in 1..=12 {
            let cfg = SolverConfig {
                tol: 1e-300,
                max_iter: k,
                preconditioner: Preconditioner::Jacobi,
            };
            let res = match cg_solve(&a, &rhs, &cfg) {
                Ok((_, report)) => report.residual,
                Err(FemError::NoConvergence { residual, .. }) => residual,
                Err(e) => return Err(TestCaseError::fail(format!("unexpected: {e}"))),
            };
            prop_assert!(res <= last * (1.0 + 1e-12), "rose from {last} to {res} at {k}");
            last = res;
            if res == 0.0 {
                break;
            }
        }
    }
}

/// Deflated CG matches a dense pseudoinverse oracle on a singular graph
/// Laplacian, including the weighted-mean pick of the representative.
#[test]
fn zero_mean_solve_matches_dense_pseudoinverse() {
    let n = 12;
    let mut b = TripletBuilder::new(n);
    for i in 0..n {
        let j = (i + 1) % n;
        let w = 1.0 + (i as f64 * 0.37).sin().abs();
        b.push(i, i, w);
        b.push(j, j, w);
        b.push(i, j, -w);
        b.push(j, i, -w);
    }
    let a = b.finish();
    let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
    let weights: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();

    // Dense oracle: eigendecompose, invert away from the constant mode,
    // then shift to the zero-weighted-mean representative.
    let dense = to_dense(&a);
    let eig = dense.symmetric_eigen();
    let b_feasible = {
        let mean = rhs.iter().sum::<f64>() / n as f64;
        DVector::from_iterator(n, rhs.iter().map(|&v| v - mean))
    };
    let coeffs = eig.eigenvectors.transpose() * &b_feasible;
    let mut x_ref = DVector::zeros(n);
    for k in 0..n {
        if eig.eigenvalues[k].abs() > 1e-9 {
            x_ref += eig.eigenvectors.column(k) * (coeffs[k] / eig.eigenvalues[k]);
        }
    }
    let wsum: f64 = weights.iter().sum();
    let wmean: f64 = weights.iter().zip(x_ref.iter()).map(|(&w, &x)| w * x).sum::<f64>() / wsum;
    for k in 0..n {
        x_ref[k] -= wmean;
    }

    let cfg = SolverConfig { tol: 1e-13, ..Default::default() };
    let (x, _) = cg_solve_zero_mean(&a, &rhs, &weights, &cfg).unwrap();
    for i in 0..n {
        assert!((x[i] - x_ref[i]).abs() < 1e-8, "component {i}: {} vs {}", x[i], x_ref[i]);
    }
}

/// Assembled operators have the right spectra: mass positive definite,
/// anisotropic stiffness positive semidefinite with the constant nullspace.
#[test]
fn assembled_spectra_are_correct() {
    let spec = IdealGeometrySpec {
        heart_radius: 20.0,
        h_heart: 5.0,
        ..IdealGeometrySpec::desk_default()
    };
    let (mesh, _) = generate_pair(&spec).unwrap();
    assert!(mesh.n_vertices() <= 200, "oracle needs a small dense problem");

    let frame = FiberFrame::circumferential(&mesh, spec.heart_center);
    let field = build_conduction_tensor(&frame, (0.17, 0.019, 0.019));
    let k = assemble_stiffness(&mesh, &field);
    let m = assemble_mass(&mesh, 1.0);

    let ek = to_dense(&k).symmetric_eigen();
    let kmax = ek.eigenvalues.amax();
    let kmin = ek.eigenvalues.min();
    assert!(kmin >= -1e-10 * kmax, "stiffness has negative eigenvalue {kmin}");

    let em = to_dense(&m).symmetric_eigen();
    assert!(em.eigenvalues.min() > 0.0, "mass is not positive definite");
}

/// With a globally constant conduction tensor, the discrete Laplace solve
/// reproduces affine boundary data exactly.
#[test]
fn galerkin_is_exact_on_affine_data() {
    let spec = IdealGeometrySpec {
        heart_radius: 30.0,
        h_heart: 6.0,
        ..IdealGeometrySpec::desk_default()
    };
    let (mesh, _) = generate_pair(&spec).unwrap();
    let th = 25.0f64.to_radians();
    let frame =
        FiberFrame::uniform(&mesh, [th.cos(), th.sin(), 0.0], [-th.sin(), th.cos(), 0.0], None)
            .unwrap();
    let field = build_conduction_tensor(&frame, (0.62, 0.24, 0.24));
    let k = assemble_stiffness(&mesh, &field);

    let affine = |p: [f64; 3]| 0.7 - 0.03 * p[0] + 0.011 * p[1];
    let boundary: Vec<u32> =
        mesh.surface_vertices(LABEL_GAMMA).into_iter().map(|v| v as u32).collect();
    let values: Vec<f64> = boundary.iter().map(|&v| affine(mesh.vertex(v as usize))).collect();
    let zero = vec![0.0; mesh.n_vertices()];
    let (a, rhs) = apply_dirichlet(&k, &zero, &boundary, &values).unwrap();
    let cfg = SolverConfig { tol: 1e-13, ..Default::default() };
    let (u, _) = cg_solve(&a, &rhs, &cfg).unwrap();

    for i in 0..mesh.n_vertices() {
        let want = affine(mesh.vertex(i));
        assert!((u[i] - want).abs() < 1e-10, "vertex {i}: {} vs {want}", u[i]);
    }
}

fn laplace_error(n: usize) -> f64 {
    let mesh = structured_rectangle([0.0, 0.0], [1.0, 1.0], n, n, 0);
    let pi = std::f64::consts::PI;
    let exact: Vec<f64> =
        (0..mesh.n_vertices()).map(|i| {
            let p = mesh.vertex(i);
            (pi * p[0]).sin() * (pi * p[1]).sin()
        }).collect();
    let source: Vec<f64> = exact.iter().map(|&u| 2.0 * pi * pi * u).collect();

    let field = ConductivityField::isotropic(&mesh, 1.0);
    let k = assemble_stiffness(&mesh, &field);
    let load = assemble_load(&mesh, SourceField::Nodal(&source)).unwrap();

    let boundary: Vec<u32> =
        mesh.surface_vertices(LABEL_GAMMA).into_iter().map(|v| v as u32).collect();
    let values = vec![0.0; boundary.len()];
    let (a, rhs) = apply_dirichlet(&k, &load, &boundary, &values).unwrap();
    let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
    let (u, _) = cg_solve(&a, &rhs, &cfg).unwrap();

    // Discrete L2 error against the nodal interpolant, weighted by the
    // lumped mass so the norm approximates ∫ e² dx.
    let w = lumped_mass(&mesh);
    let mut err2 = 0.0;
    for i in 0..mesh.n_vertices() {
        let e = u[i] - exact[i];
        err2 += w[i] * e * e;
    }
    err2.sqrt()
}

/// Three uniform refinements of the manufactured Laplace problem converge
/// at second order in the discrete L2 norm.
#[test]
fn laplace_converges_at_second_order() {
    let errs: Vec<f64> = [8, 16, 32].iter().map(|&n| laplace_error(n)).collect();
    let order01 = (errs[0] / errs[1]).log2();
    let order12 = (errs[1] / errs[2]).log2();
    assert!(order01 >= 1.9, "first refinement order {order01:.3} (errors {errs:?})");
    assert!(order12 >= 1.9, "second refinement order {order12:.3} (errors {errs:?})");
}
