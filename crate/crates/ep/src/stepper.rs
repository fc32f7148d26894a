//! Semi-implicit time integrators for the reaction-diffusion systems:
//! backward Euler on the first step (one history level), BDF2 afterwards.
//! The nonlinear reaction enters through an explicitly supplied forcing
//! vector, so the matrices are assembled once.

use crate::EpError;
use cardiowave_fem::{CgReport, CgWorkspace, CsrMatrix, SolverConfig};

/// Potential extrapolation used to evaluate the reaction term: the previous
/// value by default, or the two-point linear extension 2·Vⁱ − Vⁱ⁻¹ when
/// `linear` is set. `history` is oldest-first.
pub fn extrapolate_vm(history: &[&[f64]], linear: bool) -> Result<Vec<f64>, EpError> {
    match history {
        [] => Err(EpError::EmptyHistory),
        [.., prev, last] if linear => {
            Ok(last.iter().zip(prev.iter()).map(|(&l, &p)| 2.0 * l - p).collect())
        }
        [.., last] => Ok(last.to_vec()),
    }
}

/// Integrates a·M·dV/dt + K·V = f(t). The first step uses backward Euler,
/// later steps BDF2 with the history combination 2Vⁱ − ½Vⁱ⁻¹. Both iteration
/// matrices are prebuilt; every solve warm-starts from the current state.
pub struct ReactionDiffusionStepper {
    mass: CsrMatrix,
    a_boot: CsrMatrix,
    a_main: CsrMatrix,
    scale: f64,
    dt: f64,
    linear_extrapolation: bool,
    v_prev: Vec<f64>,
    v_curr: Vec<f64>,
    hist: Vec<f64>,
    rhs: Vec<f64>,
    ws: CgWorkspace,
    cfg: SolverConfig,
    steps: usize,
    total_iterations: usize,
}

impl ReactionDiffusionStepper {
    pub fn new(
        mass: CsrMatrix,
        stiffness: &CsrMatrix,
        scale: f64,
        dt: f64,
        v0: Vec<f64>,
        linear_extrapolation: bool,
        cfg: SolverConfig,
    ) -> Self {
        assert!(scale > 0.0 && dt > 0.0);
        assert_eq!(mass.n(), stiffness.n());
        assert_eq!(mass.n(), v0.len());
        let n = v0.len();
        let a_boot = CsrMatrix::linear_combination(&[(scale / dt, &mass), (1.0, stiffness)]);
        let a_main = CsrMatrix::linear_combination(&[(1.5 * scale / dt, &mass), (1.0, stiffness)]);
        Self {
            mass,
            a_boot,
            a_main,
            scale,
            dt,
            linear_extrapolation,
            v_prev: v0.clone(),
            v_curr: v0,
            hist: vec![0.0; n],
            rhs: vec![0.0; n],
            ws: CgWorkspace::new(n),
            cfg,
            steps: 0,
            total_iterations: 0,
        }
    }

    pub fn current(&self) -> &[f64] {
        &self.v_curr
    }

    pub fn previous(&self) -> &[f64] {
        &self.v_prev
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    /// Reaction-evaluation potential for the upcoming step.
    pub fn extrapolated(&self) -> Vec<f64> {
        if self.linear_extrapolation && self.steps >= 1 {
            extrapolate_vm(&[&self.v_prev, &self.v_curr], true).expect("two levels held")
        } else {
            self.v_curr.clone()
        }
    }

    /// Advance one step; `forcing` is the assembled nodal load on the right
    /// side (reaction and applied currents).
    pub fn advance(&mut self, forcing: &[f64]) -> Result<CgReport, EpError> {
        let n = self.v_curr.len();
        assert_eq!(forcing.len(), n);
        let matrix = if self.steps == 0 {
            self.hist.copy_from_slice(&self.v_curr);
            &self.a_boot
        } else {
            for i in 0..n {
                self.hist[i] = 2.0 * self.v_curr[i] - 0.5 * self.v_prev[i];
            }
            &self.a_main
        };
        self.mass.matvec(&self.hist, &mut self.rhs);
        let coeff = self.scale / self.dt;
        for i in 0..n {
            self.rhs[i] = coeff * self.rhs[i] + forcing[i];
        }
        // Solve in `hist` (free now), warm-started from the current state.
        self.hist.copy_from_slice(&self.v_curr);
        let report = self.ws.solve(matrix, &self.rhs, &mut self.hist, &self.cfg)?;
        self.total_iterations += report.iterations;
        std::mem::swap(&mut self.v_prev, &mut self.v_curr);
        std::mem::swap(&mut self.v_curr, &mut self.hist);
        self.steps += 1;
        Ok(report)
    }
}

/// Parabolic-elliptic two-field stepper: the transmembrane potential V is
/// integrated in time while the extracellular potential u solves an elliptic
/// constraint each step. The symmetric block system
///
///   [ (c/Δt)·a·M + K_i   K_i     ] [V]   [ (a/Δt)·M·hist + f ]
///   [ K_i                K_i+K_e ] [u] = [ 0                 ]
///
/// is positive semidefinite with nullspace (0, 1); the solve is deflated so u
/// keeps a zero weighted mean.
pub struct BidomainStepper {
    mass: CsrMatrix,
    a_boot: CsrMatrix,
    a_main: CsrMatrix,
    scale: f64,
    dt: f64,
    linear_extrapolation: bool,
    n: usize,
    /// [V; u] at the current step.
    x: Vec<f64>,
    v_prev: Vec<f64>,
    hist: Vec<f64>,
    rhs: Vec<f64>,
    direction: Vec<f64>,
    weights: Vec<f64>,
    ws: CgWorkspace,
    cfg: SolverConfig,
    steps: usize,
    total_iterations: usize,
}

impl BidomainStepper {
    /// `weights` are the lumped-mass weights that pin the floating u block.
    pub fn new(
        mass: CsrMatrix,
        k_i: &CsrMatrix,
        k_ie: &CsrMatrix,
        scale: f64,
        dt: f64,
        v0: Vec<f64>,
        weights: &[f64],
        linear_extrapolation: bool,
        cfg: SolverConfig,
    ) -> Self {
        assert!(scale > 0.0 && dt > 0.0);
        let n = v0.len();
        assert_eq!(mass.n(), n);
        assert_eq!(k_i.n(), n);
        assert_eq!(k_ie.n(), n);
        assert_eq!(weights.len(), n);

        let block = |c: f64| {
            let vv = CsrMatrix::linear_combination(&[(c * scale / dt, &mass), (1.0, k_i)]);
            let mut b = cardiowave_fem::TripletBuilder::new(2 * n);
            b.scatter_offset(0, 0, 1.0, &vv);
            b.scatter_offset(0, n, 1.0, k_i);
            b.scatter_offset(n, 0, 1.0, k_i);
            b.scatter_offset(n, n, 1.0, k_ie);
            b.finish()
        };
        let a_boot = block(1.0);
        let a_main = block(1.5);

        let mut x = vec![0.0; 2 * n];
        x[..n].copy_from_slice(&v0);
        let mut direction = vec![0.0; 2 * n];
        direction[n..].fill(1.0);
        let mut w = vec![0.0; 2 * n];
        w[n..].copy_from_slice(weights);

        Self {
            mass,
            a_boot,
            a_main,
            scale,
            dt,
            linear_extrapolation,
            n,
            v_prev: v0,
            x,
            hist: vec![0.0; n],
            rhs: vec![0.0; 2 * n],
            direction,
            weights: w,
            ws: CgWorkspace::new(2 * n),
            cfg,
            steps: 0,
            total_iterations: 0,
        }
    }

    pub fn vm(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn ue(&self) -> &[f64] {
        &self.x[self.n..]
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn extrapolated(&self) -> Vec<f64> {
        if self.linear_extrapolation && self.steps >= 1 {
            extrapolate_vm(&[&self.v_prev, self.vm()], true).expect("two levels held")
        } else {
            self.vm().to_vec()
        }
    }

    pub fn advance(&mut self, forcing: &[f64]) -> Result<CgReport, EpError> {
        let n = self.n;
        assert_eq!(forcing.len(), n);
        let matrix = if self.steps == 0 {
            self.hist.copy_from_slice(&self.x[..n]);
            &self.a_boot
        } else {
            for i in 0..n {
                self.hist[i] = 2.0 * self.x[i] - 0.5 * self.v_prev[i];
            }
            &self.a_main
        };
        self.mass.matvec(&self.hist, &mut self.rhs[..n]);
        let coeff = self.scale / self.dt;
        for i in 0..n {
            self.rhs[i] = coeff * self.rhs[i] + forcing[i];
        }
        self.rhs[n..].fill(0.0);
        self.v_prev.copy_from_slice(&self.x[..n]);
        let report = self.ws.solve_deflated(
            matrix,
            &self.rhs,
            &mut self.x,
            &self.cfg,
            Some((&self.direction, &self.weights)),
        )?;
        self.total_iterations += report.iterations;
        self.steps += 1;
        Ok(report)
    }
}
