//! Tissue-level drivers for the monodomain, bidomain, and pseudo-bidomain
//! models. One driver owns the assembled operators, advances the IMEX time
//! loop, and records potentials at the coupling cadence.

use crate::membrane::MembraneModel;
use crate::stepper::{BidomainStepper, ReactionDiffusionStepper};
use crate::stimulus::StimulusProtocol;
use crate::EpError;
use cardiowave_fem::{
    assemble_load, assemble_mass, assemble_stiffness, build_conduction_tensor, harmonic_tensor,
    lumped_mass, CgWorkspace, CsrMatrix, FiberFrame, SolverConfig, SourceField,
};
use cardiowave_mesh::SimplicialMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Monodomain,
    Bidomain,
    PseudoBidomain,
}

/// Tissue and integration parameters. Conductivity triples are
/// (longitudinal, transverse, normal) in mS/mm; the normal entry is ignored
/// in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpParameters {
    /// Membrane surface-to-volume ratio, 1/mm.
    pub chi: f64,
    /// Membrane capacitance, µF/mm².
    pub c_m: f64,
    /// EP time step, ms.
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Record every this many EP steps (the coupling cadence m).
    pub record_every: usize,
    /// Discard snapshots before this time (warm-up beats).
    pub record_from: f64,
    pub kind: ModelKind,
    pub sigma_i: (f64, f64, f64),
    pub sigma_e: (f64, f64, f64),
    /// Evaluate the reaction at 2Vⁱ − Vⁱ⁻¹ instead of Vⁱ.
    pub linear_extrapolation: bool,
    pub solver: SolverConfig,
}

impl Default for EpParameters {
    fn default() -> Self {
        Self {
            chi: 140.0,
            c_m: 0.01,
            dt: 0.05,
            t_start: 0.0,
            t_end: 100.0,
            record_every: 20,
            record_from: 0.0,
            kind: ModelKind::PseudoBidomain,
            sigma_i: (0.17, 0.019, 0.019),
            sigma_e: (0.62, 0.24, 0.24),
            linear_extrapolation: false,
            solver: SolverConfig::default(),
        }
    }
}

impl EpParameters {
    pub fn validate(&self) -> Result<(), EpError> {
        if !(self.chi > 0.0 && self.c_m > 0.0 && self.dt > 0.0) {
            return Err(EpError::InvalidParameter("chi, c_m and dt must be positive".into()));
        }
        if !(self.t_end >= self.t_start) {
            return Err(EpError::InvalidParameter("t_end must not precede t_start".into()));
        }
        if self.record_every == 0 {
            return Err(EpError::InvalidParameter("record_every must be at least 1".into()));
        }
        for (name, s) in [("sigma_i", self.sigma_i), ("sigma_e", self.sigma_e)] {
            if !(s.0 > 0.0 && s.1 > 0.0 && s.2 > 0.0) {
                return Err(EpError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }
}

/// Operators assembled once per heart mesh: consistent mass, intracellular
/// and bulk stiffness, the monodomain stiffness from the per-direction
/// harmonic tensor, and lumped-mass weights for zero-mean picks.
pub struct EpSystem {
    pub mass: CsrMatrix,
    pub k_i: CsrMatrix,
    pub k_ie: CsrMatrix,
    pub k_m: CsrMatrix,
    pub lumped: Vec<f64>,
}

pub fn assemble_ep_system(
    mesh: &SimplicialMesh,
    fibers: &FiberFrame,
    sigma_i: (f64, f64, f64),
    sigma_e: (f64, f64, f64),
) -> Result<EpSystem, EpError> {
    let d_i = build_conduction_tensor(fibers, sigma_i);
    let d_e = build_conduction_tensor(fibers, sigma_e);
    let d_m = harmonic_tensor(&d_i, &d_e)?;
    let k_i = assemble_stiffness(mesh, &d_i);
    let k_e = assemble_stiffness(mesh, &d_e);
    let k_ie = CsrMatrix::linear_combination(&[(1.0, &k_i), (1.0, &k_e)]);
    let k_m = assemble_stiffness(mesh, &d_m);
    Ok(EpSystem {
        mass: assemble_mass(mesh, 1.0),
        k_i,
        k_ie,
        k_m,
        lumped: lumped_mass(mesh),
    })
}

/// Recorded simulation output: snapshots every `record_every` steps plus the
/// first threshold-crossing time per node (NaN where the node never
/// activated). `ue` stays empty in pure monodomain runs.
#[derive(Debug, Clone)]
pub struct EpTimeline {
    pub times: Vec<f64>,
    pub vm: Vec<Vec<f64>>,
    pub ue: Vec<Vec<f64>>,
    pub activation: Vec<f64>,
    pub ep_steps: usize,
    pub solver_iterations: usize,
}

/// Warm-started solver for the elliptic recovery K_{i+e}·u_e = −K_i·V_m with
/// the zero-weighted-mean pick.
pub struct ExtracellularRecovery {
    k_i: CsrMatrix,
    k_ie: CsrMatrix,
    weights: Vec<f64>,
    ue: Vec<f64>,
    rhs: Vec<f64>,
    ws: CgWorkspace,
    cfg: SolverConfig,
    total_iterations: usize,
}

impl ExtracellularRecovery {
    pub fn new(k_i: CsrMatrix, k_ie: CsrMatrix, weights: Vec<f64>, cfg: SolverConfig) -> Self {
        let n = k_i.n();
        assert_eq!(k_ie.n(), n);
        assert_eq!(weights.len(), n);
        Self {
            k_i,
            k_ie,
            weights,
            ue: vec![0.0; n],
            rhs: vec![0.0; n],
            ws: CgWorkspace::new(n),
            cfg,
            total_iterations: 0,
        }
    }

    pub fn recover(&mut self, vm: &[f64]) -> Result<&[f64], EpError> {
        self.k_i.matvec(vm, &mut self.rhs);
        for r in self.rhs.iter_mut() {
            *r = -*r;
        }
        let report =
            self.ws.solve_zero_mean(&self.k_ie, &self.rhs, &self.weights, &mut self.ue, &self.cfg)?;
        self.total_iterations += report.iterations;
        Ok(&self.ue)
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }
}

/// One-shot extracellular recovery from a cold start.
pub fn recover_extracellular(
    k_i: &CsrMatrix,
    k_ie: &CsrMatrix,
    weights: &[f64],
    vm: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>, EpError> {
    let mut rec =
        ExtracellularRecovery::new(k_i.clone(), k_ie.clone(), weights.to_vec(), *cfg);
    Ok(rec.recover(vm)?.to_vec())
}

enum Engine {
    Scalar { stepper: ReactionDiffusionStepper, recovery: Option<ExtracellularRecovery> },
    Block(BidomainStepper),
}

impl Engine {
    fn vm(&self) -> &[f64] {
        match self {
            Engine::Scalar { stepper, .. } => stepper.current(),
            Engine::Block(b) => b.vm(),
        }
    }

    fn extrapolated(&self) -> Vec<f64> {
        match self {
            Engine::Scalar { stepper, .. } => stepper.extrapolated(),
            Engine::Block(b) => b.extrapolated(),
        }
    }

    fn advance(&mut self, forcing: &[f64]) -> Result<usize, EpError> {
        let report = match self {
            Engine::Scalar { stepper, .. } => stepper.advance(forcing)?,
            Engine::Block(b) => b.advance(forcing)?,
        };
        Ok(report.iterations)
    }
}

/// Advance the chosen cardiac model over (t_start, t_end], recording Vm and
/// u_e every `record_every` steps. The per-step order is: extrapolate the
/// potential, advance gates and concentrations, evaluate the ionic current,
/// then solve the reaction-diffusion step.
pub fn run_cardiac(
    params: &EpParameters,
    protocol: &StimulusProtocol,
    mesh: &SimplicialMesh,
    fibers: &FiberFrame,
    model: &dyn MembraneModel,
) -> Result<EpTimeline, EpError> {
    params.validate()?;
    protocol.validate()?;
    let system = assemble_ep_system(mesh, fibers, params.sigma_i, params.sigma_e)?;
    run_cardiac_with_system(params, protocol, mesh, &system, model)
}

/// `run_cardiac` against operators the caller already assembled.
pub fn run_cardiac_with_system(
    params: &EpParameters,
    protocol: &StimulusProtocol,
    mesh: &SimplicialMesh,
    system: &EpSystem,
    model: &dyn MembraneModel,
) -> Result<EpTimeline, EpError> {
    params.validate()?;
    protocol.validate()?;
    let n = mesh.n_vertices();
    let n_steps = params.n_steps();
    let scale = params.chi * params.c_m;
    let v0 = vec![model.v_rest(); n];

    let mut engine = match params.kind {
        ModelKind::Monodomain | ModelKind::PseudoBidomain => {
            let stepper = ReactionDiffusionStepper::new(
                system.mass.clone(),
                &system.k_m,
                scale,
                params.dt,
                v0,
                params.linear_extrapolation,
                params.solver,
            );
            let recovery = (params.kind == ModelKind::PseudoBidomain).then(|| {
                ExtracellularRecovery::new(
                    system.k_i.clone(),
                    system.k_ie.clone(),
                    system.lumped.clone(),
                    params.solver,
                )
            });
            Engine::Scalar { stepper, recovery }
        }
        ModelKind::Bidomain => Engine::Block(BidomainStepper::new(
            system.mass.clone(),
            &system.k_i,
            &system.k_ie,
            scale,
            params.dt,
            v0,
            &system.lumped,
            params.linear_extrapolation,
            params.solver,
        )),
    };

    let mut state = model.rest_state(n);
    let threshold = model.v_rest() + 0.5 * model.delta_v();
    let current_scale = params.c_m * model.delta_v();

    let mut timeline = EpTimeline {
        times: Vec::new(),
        vm: Vec::new(),
        ue: Vec::new(),
        activation: vec![f64::NAN; n],
        ep_steps: n_steps,
        solver_iterations: 0,
    };
    let mut rate = vec![0.0; n];
    let mut forcing = vec![0.0; n];
    let mut v_old = vec![0.0; n];
    let mut cell_source = vec![0.0; mesh.n_cells()];

    for step in 0..n_steps {
        let t_old = params.t_start + step as f64 * params.dt;
        let t_next = t_old + params.dt;

        let v_ext = engine.extrapolated();
        model.step_gating(&mut state, &v_ext, params.dt);
        model.step_concentrations(&mut state, &v_ext, params.dt);
        model.ionic_current(&state, &v_ext, &mut rate);
        for r in rate.iter_mut() {
            *r *= current_scale;
        }
        system.mass.matvec(&rate, &mut forcing);
        for f in forcing.iter_mut() {
            *f *= -params.chi;
        }
        if protocol.active(t_next) {
            protocol.applied_current(mesh, t_next, &mut cell_source);
            let load = assemble_load(mesh, SourceField::PerCell(&cell_source))?;
            for (f, l) in forcing.iter_mut().zip(&load) {
                *f += l;
            }
        }

        v_old.copy_from_slice(engine.vm());
        timeline.solver_iterations += engine.advance(&forcing)?;

        let v_new = engine.vm();
        for i in 0..n {
            if timeline.activation[i].is_nan() && v_old[i] < threshold && v_new[i] >= threshold {
                let frac = (threshold - v_old[i]) / (v_new[i] - v_old[i]);
                timeline.activation[i] = t_old + frac * params.dt;
            }
        }

        if (step + 1) % params.record_every == 0 && t_next >= params.record_from - 1e-9 {
            timeline.times.push(t_next);
            timeline.vm.push(engine.vm().to_vec());
            match &mut engine {
                Engine::Scalar { recovery: Some(rec), stepper } => {
                    let ue = rec.recover(stepper.current())?.to_vec();
                    timeline.ue.push(ue);
                }
                Engine::Scalar { recovery: None, .. } => {}
                Engine::Block(b) => timeline.ue.push(b.ue().to_vec()),
            }
        }
    }
    if let Engine::Scalar { recovery: Some(rec), .. } = &engine {
        timeline.solver_iterations += rec.total_iterations();
    }
    Ok(timeline)
}
