//! The monolithic heart-torso reference solver.
//!
//! One block system per EP step over the merged conforming mesh: the
//! transmembrane potential lives on the heart vertices, the extracellular
//! and torso potentials are a single continuous field on every merged
//! vertex. Interface continuity of value and flux is natural, so no
//! interface rows are modified; the block is symmetric positive semidefinite
//! with the u-constant nullspace, pinned by the zero weighted mean over the
//! heart subdomain.

use crate::staggered::{CoupledConfig, CoupledRun, CouplingMode};
use crate::CouplingError;
use cardiowave_ep::{
    assemble_ep_system, extrapolate_vm, EpError, EpParameters, MembraneModel, StimulusProtocol,
};
use cardiowave_fem::{
    assemble_load, assemble_stiffness, CgReport, CgWorkspace, ConductivityField, CsrMatrix,
    FiberFrame, SolverConfig, SourceField, TripletBuilder,
};
use cardiowave_mesh::{merge_conforming, SimplicialMesh};
use std::time::Instant;

/// Implicit-explicit stepper for the combined block system. The unknown is
/// `[V; u]` with `V` on the heart vertices and `u` on every merged vertex;
/// the first heart-count entries of the u block are the heart vertices, so
/// the coupling blocks land there unchanged.
pub struct FchtStepper {
    mass: CsrMatrix,
    a_boot: CsrMatrix,
    a_main: CsrMatrix,
    scale: f64,
    dt: f64,
    linear_extrapolation: bool,
    n_heart: usize,
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

impl FchtStepper {
    /// `torso_to_merged` sends torso vertex ids into merged ids;
    /// `heart_weights` are the heart lumped-mass weights that pin the
    /// floating u block.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mass: CsrMatrix,
        k_i: &CsrMatrix,
        k_ie: &CsrMatrix,
        k_torso: &CsrMatrix,
        torso_to_merged: &[u32],
        n_merged: usize,
        scale: f64,
        dt: f64,
        v0: Vec<f64>,
        heart_weights: &[f64],
        linear_extrapolation: bool,
        cfg: SolverConfig,
    ) -> Self {
        assert!(scale > 0.0 && dt > 0.0);
        let n_heart = v0.len();
        assert_eq!(mass.n(), n_heart);
        assert_eq!(k_i.n(), n_heart);
        assert_eq!(k_ie.n(), n_heart);
        assert_eq!(k_torso.n(), torso_to_merged.len());
        assert_eq!(heart_weights.len(), n_heart);
        assert!(n_merged >= n_heart);
        let size = n_heart + n_merged;

        let map: Vec<u32> = torso_to_merged
            .iter()
            .map(|&m| n_heart as u32 + m)
            .collect();
        let block = |c: f64| {
            let vv = CsrMatrix::linear_combination(&[(c * scale / dt, &mass), (1.0, k_i)]);
            let mut b = TripletBuilder::new(size);
            b.scatter_offset(0, 0, 1.0, &vv);
            b.scatter_offset(0, n_heart, 1.0, k_i);
            b.scatter_offset(n_heart, 0, 1.0, k_i);
            b.scatter_offset(n_heart, n_heart, 1.0, k_ie);
            b.scatter_mapped(&map, &map, 1.0, k_torso);
            b.finish()
        };
        let a_boot = block(1.0);
        let a_main = block(1.5);

        let mut x = vec![0.0; size];
        x[..n_heart].copy_from_slice(&v0);
        let mut direction = vec![0.0; size];
        direction[n_heart..].fill(1.0);
        let mut weights = vec![0.0; size];
        weights[n_heart..2 * n_heart].copy_from_slice(heart_weights);

        Self {
            mass,
            a_boot,
            a_main,
            scale,
            dt,
            linear_extrapolation,
            n_heart,
            v_prev: v0,
            x,
            hist: vec![0.0; n_heart],
            rhs: vec![0.0; size],
            direction,
            weights,
            ws: CgWorkspace::new(size),
            cfg,
            steps: 0,
            total_iterations: 0,
        }
    }

    pub fn vm(&self) -> &[f64] {
        &self.x[..self.n_heart]
    }

    /// The combined extracellular/torso field over merged vertices.
    pub fn potential(&self) -> &[f64] {
        &self.x[self.n_heart..]
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn bootstrap_matrix(&self) -> &CsrMatrix {
        &self.a_boot
    }

    pub fn main_matrix(&self) -> &CsrMatrix {
        &self.a_main
    }

    pub fn extrapolated(&self) -> Vec<f64> {
        if self.linear_extrapolation && self.steps >= 1 {
            extrapolate_vm(&[&self.v_prev, self.vm()], true).expect("two levels held")
        } else {
            self.vm().to_vec()
        }
    }

    /// Advances one step; `forcing` is the heart-row load (reaction plus
    /// applied current). The potential rows carry no load.
    pub fn advance(&mut self, forcing: &[f64]) -> Result<CgReport, EpError> {
        let n = self.n_heart;
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

/// Runs the monolithic mode end to end. Requires a conforming pair; the
/// merge fails otherwise.
pub fn run_fcht(
    params: &EpParameters,
    protocol: &StimulusProtocol,
    heart: &SimplicialMesh,
    fibers: &FiberFrame,
    model: &dyn MembraneModel,
    torso: &SimplicialMesh,
    config: &CoupledConfig,
) -> Result<CoupledRun, CouplingError> {
    config.validate()?;
    params.validate()?;
    protocol.validate()?;

    let start = Instant::now();
    let merged = merge_conforming(heart, torso)?;
    let system = assemble_ep_system(heart, fibers, params.sigma_i, params.sigma_e)?;
    let k_torso = assemble_stiffness(torso, &ConductivityField::isotropic(torso, config.sigma_t));
    let n_heart = heart.n_vertices();
    let n_torso = torso.n_vertices();
    let mut stepper = FchtStepper::new(
        system.mass.clone(),
        &system.k_i,
        &system.k_ie,
        &k_torso,
        &merged.torso_vertex,
        merged.mesh.n_vertices(),
        params.chi * params.c_m,
        params.dt,
        vec![model.v_rest(); n_heart],
        &system.lumped,
        params.linear_extrapolation,
        params.solver,
    );
    let resolved = config.electrodes.resolve(torso)?;
    let mut run = CoupledRun::empty(CouplingMode::Fcht, torso)?;
    run.timings.setup_s = start.elapsed().as_secs_f64();

    let n_steps = params.n_steps();
    let mut state = model.rest_state(n_heart);
    let threshold = model.v_rest() + 0.5 * model.delta_v();
    let current_scale = params.c_m * model.delta_v();
    run.timeline.ep_steps = n_steps;
    run.timeline.activation = vec![f64::NAN; n_heart];

    let mut rate = vec![0.0; n_heart];
    let mut forcing = vec![0.0; n_heart];
    let mut v_old = vec![0.0; n_heart];
    let mut cell_source = vec![0.0; heart.n_cells()];

    let start = Instant::now();
    for step in 0..n_steps {
        let t_old = params.t_start + step as f64 * params.dt;
        let t_next = t_old + params.dt;

        let v_ext = stepper.extrapolated();
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
            protocol.applied_current(heart, t_next, &mut cell_source);
            let load = assemble_load(heart, SourceField::PerCell(&cell_source))?;
            for (f, l) in forcing.iter_mut().zip(&load) {
                *f += l;
            }
        }

        v_old.copy_from_slice(stepper.vm());
        run.timeline.solver_iterations += stepper.advance(&forcing)?.iterations;

        let v_new = stepper.vm();
        for i in 0..n_heart {
            if run.timeline.activation[i].is_nan()
                && v_old[i] < threshold
                && v_new[i] >= threshold
            {
                let frac = (threshold - v_old[i]) / (v_new[i] - v_old[i]);
                run.timeline.activation[i] = t_old + frac * params.dt;
            }
        }

        if (step + 1) % config.cadence == 0 && t_next >= params.record_from - 1e-9 {
            let u = stepper.potential();
            run.timeline.times.push(t_next);
            run.timeline.vm.push(v_new.to_vec());
            run.timeline.ue.push(u[..n_heart].to_vec());
            let u_torso: Vec<f64> = (0..n_torso)
                .map(|v| u[merged.torso_vertex[v] as usize])
                .collect();
            run.traces.push(t_next, resolved.sample(&u_torso));
            let index = run.torso_potentials.len();
            run.keep_bspm(config.bspm_every, index, t_next, &u_torso);
            run.torso_potentials.push(u_torso);
        }
    }
    run.timings.ep_s = start.elapsed().as_secs_f64();
    Ok(run)
}
