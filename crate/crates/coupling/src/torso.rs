//! The torso volume-conductor solve.
//!
//! The torso potential obeys a pure diffusion balance with prescribed values
//! on the cavity boundary and an insulating exterior surface, so each solve
//! is an independent elliptic problem driven entirely by the current
//! interface data. The solver keeps the previous solution as the CG starting
//! guess; consecutive interface data differ little, so later solves converge
//! in a few iterations.

use crate::CouplingError;
use cardiowave_fem::{
    assemble_stiffness, CgWorkspace, ConductivityField, ConstrainedSystem, SolverConfig,
};
use cardiowave_mesh::SimplicialMesh;

/// Dirichlet-driven Laplace solver over a fixed torso mesh.
pub struct TorsoSolver {
    system: ConstrainedSystem,
    gamma: Vec<usize>,
    g_full: Vec<f64>,
    zero_load: Vec<f64>,
    u: Vec<f64>,
    ws: CgWorkspace,
    cfg: SolverConfig,
    solves: usize,
    total_iterations: usize,
}

impl TorsoSolver {
    /// `gamma` lists the torso vertices that receive Dirichlet data, in the
    /// order later `solve` calls will supply values.
    pub fn new(
        torso: &SimplicialMesh,
        sigma_t: f64,
        gamma: Vec<usize>,
        cfg: SolverConfig,
    ) -> Result<Self, CouplingError> {
        if !(sigma_t > 0.0) {
            return Err(CouplingError::InvalidConfig(format!(
                "torso conductivity {sigma_t} must be > 0"
            )));
        }
        if gamma.is_empty() {
            return Err(CouplingError::InvalidConfig(
                "no interface nodes to constrain".into(),
            ));
        }
        let n = torso.n_vertices();
        let field = ConductivityField::isotropic(torso, sigma_t);
        let stiffness = assemble_stiffness(torso, &field);
        let nodes: Vec<u32> = gamma.iter().map(|&v| v as u32).collect();
        let system = ConstrainedSystem::new(&stiffness, &nodes, &[])?;
        Ok(Self {
            system,
            gamma,
            g_full: vec![0.0; n],
            zero_load: vec![0.0; n],
            u: vec![0.0; n],
            ws: CgWorkspace::new(n),
            cfg,
            solves: 0,
            total_iterations: 0,
        })
    }

    /// Solves with `values` prescribed on the gamma nodes (same order as the
    /// construction list). Constrained entries of the result carry the
    /// prescribed values exactly; free entries satisfy the discrete balance
    /// to the solver tolerance.
    pub fn solve(&mut self, values: &[f64]) -> Result<&[f64], CouplingError> {
        assert_eq!(values.len(), self.gamma.len());
        for (&v, &g) in self.gamma.iter().zip(values) {
            self.g_full[v] = g;
        }
        let rhs = self.system.rhs(&self.zero_load, &self.g_full);
        // Exact Dirichlet entries in the start vector: the reduced matrix is
        // the identity on constrained rows with empty off-diagonal columns,
        // so CG never moves them again.
        for (&v, &g) in self.gamma.iter().zip(values) {
            self.u[v] = g;
        }
        let report = self.ws.solve(&self.system.matrix, &rhs, &mut self.u, &self.cfg)?;
        self.solves += 1;
        self.total_iterations += report.iterations;
        Ok(&self.u)
    }

    pub fn solution(&self) -> &[f64] {
        &self.u
    }

    pub fn gamma(&self) -> &[usize] {
        &self.gamma
    }

    pub fn solves(&self) -> usize {
        self.solves
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }
}

/// One-shot wrapper around [`TorsoSolver`] for a single right-hand side.
pub fn solve_torso(
    torso: &SimplicialMesh,
    sigma_t: f64,
    gamma: Vec<usize>,
    values: &[f64],
    cfg: SolverConfig,
) -> Result<Vec<f64>, CouplingError> {
    let mut solver = TorsoSolver::new(torso, sigma_t, gamma, cfg)?;
    solver.solve(values)?;
    Ok(solver.u)
}
