//! The one-way staggered driver.
//!
//! The heart runs at its own small time step; every m-th step the recorded
//! extracellular potential is transferred to the torso cavity boundary and a
//! single elliptic solve produces the torso field. Nothing flows back, so
//! the EP trajectory is bitwise independent of the torso mesh, the torso
//! conductivity, and the cadence, and the torso potential at an instant
//! depends only on the extracellular snapshot at that instant.

use crate::interface::{interpolate_interface, InterfaceMap};
use crate::outputs::{surface_lumped_weights, ElectrodeSet, TraceSet};
use crate::torso::TorsoSolver;
use crate::CouplingError;
use cardiowave_ep::{
    run_cardiac, EpParameters, EpTimeline, MembraneModel, ModelKind, StimulusProtocol,
};
use cardiowave_fem::FiberFrame;
use cardiowave_mesh::{SimplicialMesh, LABEL_GAMMA, LABEL_SIGMA_EXT};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Full bidomain heart, torso slaved through the interface operator.
    OneWayBidomain,
    /// Monodomain heart with elliptic recovery of the extracellular
    /// potential, torso slaved through the interface operator.
    OneWayPseudoBidomain,
    /// Monolithic heart-torso system solved as one block each EP step.
    Fcht,
}

/// How the torso half of a coupled run is driven.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledConfig {
    /// Torso cadence: one torso solve per this many EP steps.
    pub cadence: usize,
    /// Isotropic torso conductivity, mS/mm.
    pub sigma_t: f64,
    pub mode: CouplingMode,
    /// Keep a body-surface snapshot every this many torso solves; 0 disables.
    pub bspm_every: usize,
    pub electrodes: ElectrodeSet,
}

impl Default for CoupledConfig {
    fn default() -> Self {
        Self {
            cadence: 20,
            sigma_t: 0.2,
            mode: CouplingMode::OneWayPseudoBidomain,
            bspm_every: 1,
            electrodes: ElectrodeSet::desk_default(),
        }
    }
}

impl CoupledConfig {
    pub fn validate(&self) -> Result<(), CouplingError> {
        if self.cadence == 0 {
            return Err(CouplingError::InvalidConfig(
                "torso cadence must be >= 1".into(),
            ));
        }
        if !(self.sigma_t > 0.0) {
            return Err(CouplingError::InvalidConfig(format!(
                "torso conductivity {} must be > 0",
                self.sigma_t
            )));
        }
        Ok(())
    }
}

/// Wall-clock seconds spent in each phase of a coupled run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub setup_s: f64,
    pub ep_s: f64,
    pub interpolation_s: f64,
    pub torso_s: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.setup_s + self.ep_s + self.interpolation_s + self.torso_s
    }
}

/// Everything a coupled run produces: the heart timeline, the torso field at
/// every recorded instant, electrode traces, optional body-surface
/// snapshots, and bookkeeping for reports.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub mode: CouplingMode,
    pub timeline: EpTimeline,
    pub traces: TraceSet,
    /// Full torso nodal field per recorded instant.
    pub torso_potentials: Vec<Vec<f64>>,
    pub bspm_times: Vec<f64>,
    /// Body-surface values restricted to `bspm_vertices`, per kept snapshot.
    pub bspm: Vec<Vec<f64>>,
    /// Exterior-surface vertex ids, ascending.
    pub bspm_vertices: Vec<usize>,
    /// Lumped boundary-mass weight per entry of `bspm_vertices`.
    pub bspm_weights: Vec<f64>,
    /// Worst and average interface projection distance, mm. Zero for the
    /// monolithic mode, whose interface is shared exactly.
    pub interface_max_distance: f64,
    pub interface_mean_distance: f64,
    pub torso_solves: usize,
    pub torso_iterations: usize,
    pub timings: PhaseTimings,
}

impl CoupledRun {
    pub(crate) fn empty(mode: CouplingMode, torso: &SimplicialMesh) -> Result<Self, CouplingError> {
        let exterior = torso.extract_boundary(LABEL_SIGMA_EXT)?;
        let weights_full = surface_lumped_weights(&exterior);
        let bspm_vertices = torso.surface_vertices(LABEL_SIGMA_EXT);
        let bspm_weights = bspm_vertices.iter().map(|&v| weights_full[v]).collect();
        Ok(Self {
            mode,
            timeline: EpTimeline {
                times: Vec::new(),
                vm: Vec::new(),
                ue: Vec::new(),
                activation: Vec::new(),
                ep_steps: 0,
                solver_iterations: 0,
            },
            traces: TraceSet::new(),
            torso_potentials: Vec::new(),
            bspm_times: Vec::new(),
            bspm: Vec::new(),
            bspm_vertices,
            bspm_weights,
            interface_max_distance: 0.0,
            interface_mean_distance: 0.0,
            torso_solves: 0,
            torso_iterations: 0,
            timings: PhaseTimings::default(),
        })
    }

    /// Stores one body-surface snapshot if the cadence keeps it.
    pub(crate) fn keep_bspm(&mut self, every: usize, index: usize, t: f64, u_torso: &[f64]) {
        if every > 0 && index % every == 0 {
            self.bspm_times.push(t);
            self.bspm
                .push(self.bspm_vertices.iter().map(|&v| u_torso[v]).collect());
        }
    }
}

/// Runs one of the one-way modes end to end. The EP model is decided by
/// `config.mode`; `params.kind` is overridden accordingly.
pub fn run_staggered(
    params: &EpParameters,
    protocol: &StimulusProtocol,
    heart: &SimplicialMesh,
    fibers: &FiberFrame,
    model: &dyn MembraneModel,
    torso: &SimplicialMesh,
    config: &CoupledConfig,
) -> Result<CoupledRun, CouplingError> {
    config.validate()?;
    let kind = match config.mode {
        CouplingMode::OneWayBidomain => ModelKind::Bidomain,
        CouplingMode::OneWayPseudoBidomain => ModelKind::PseudoBidomain,
        CouplingMode::Fcht => {
            return Err(CouplingError::InvalidConfig(
                "the staggered driver handles one-way modes; use run_fcht for the monolithic mode"
                    .into(),
            ))
        }
    };
    let ep_params = EpParameters { kind, record_every: config.cadence, ..*params };

    let start = Instant::now();
    let patch = heart.extract_boundary(LABEL_GAMMA)?;
    let map = InterfaceMap::build(&patch, torso)?;
    let mut solver = TorsoSolver::new(torso, config.sigma_t, map.torso_vertices(), params.solver)?;
    let resolved = config.electrodes.resolve(torso)?;
    let mut run = CoupledRun::empty(config.mode, torso)?;
    run.interface_max_distance = map.max_distance();
    run.interface_mean_distance = map.mean_distance();
    run.timings.setup_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    run.timeline = run_cardiac(&ep_params, protocol, heart, fibers, model)?;
    run.timings.ep_s = start.elapsed().as_secs_f64();

    for k in 0..run.timeline.times.len() {
        let t = run.timeline.times[k];
        let start = Instant::now();
        let dirichlet = interpolate_interface(&map, &run.timeline.ue[k]);
        run.timings.interpolation_s += start.elapsed().as_secs_f64();

        let start = Instant::now();
        let u = solver.solve(&dirichlet)?;
        run.timings.torso_s += start.elapsed().as_secs_f64();

        run.traces.push(t, resolved.sample(u));
        run.keep_bspm(config.bspm_every, k, t, u);
        run.torso_potentials.push(u.to_vec());
    }
    run.torso_solves = solver.solves();
    run.torso_iterations = solver.total_iterations();
    Ok(run)
}

/// Dispatches on the configured mode.
pub fn run_coupled(
    params: &EpParameters,
    protocol: &StimulusProtocol,
    heart: &SimplicialMesh,
    fibers: &FiberFrame,
    model: &dyn MembraneModel,
    torso: &SimplicialMesh,
    config: &CoupledConfig,
) -> Result<CoupledRun, CouplingError> {
    match config.mode {
        CouplingMode::Fcht => {
            crate::fcht::run_fcht(params, protocol, heart, fibers, model, torso, config)
        }
        _ => run_staggered(params, protocol, heart, fibers, model, torso, config),
    }
}
