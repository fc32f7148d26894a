//! JSON experiment configuration.
//!
//! The schema is strict: unknown keys are rejected so typos in sweep files
//! surface as errors instead of silently running the default experiment.
//! `parse -> serialize -> parse` is the identity on the canonical
//! (fully expanded) form; `simulate` echoes that form next to its outputs.

use std::path::{Path, PathBuf};

use cardiowave_coupling::{CoupledConfig, CouplingMode, ElectrodeSet};
use cardiowave_ep::{
    EpParameters, MembraneModelSpec, ModelKind, Stimulus, StimulusProtocol, TwoVariableModel,
};
use cardiowave_fem::{FiberFrame, SolverConfig};
use cardiowave_mesh::factory::{apply_rigid, generate_pair};
use cardiowave_mesh::io::load_mesh;
use cardiowave_mesh::vec3::Vec3;
use cardiowave_mesh::{IdealGeometrySpec, RigidTransform, SimplicialMesh};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Coupling strategy names as they appear in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeField {
    Fcht,
    OneWayBidomain,
    OneWayPseudoBidomain,
}

impl ModeField {
    pub fn to_mode(self) -> CouplingMode {
        match self {
            ModeField::Fcht => CouplingMode::Fcht,
            ModeField::OneWayBidomain => CouplingMode::OneWayBidomain,
            ModeField::OneWayPseudoBidomain => CouplingMode::OneWayPseudoBidomain,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeField::Fcht => "fcht",
            ModeField::OneWayBidomain => "one-way-bidomain",
            ModeField::OneWayPseudoBidomain => "one-way-pseudo-bidomain",
        }
    }
}

/// Idealized heart/torso pair, mirroring the mesh factory knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpecConfig {
    pub dim: usize,
    pub torso_half_widths: [f64; 3],
    pub heart_center: [f64; 3],
    pub heart_radius: f64,
    pub h_heart: f64,
    pub h_torso_interface: f64,
    pub h_torso_exterior: f64,
    pub conforming: bool,
}

impl Default for GeometrySpecConfig {
    fn default() -> Self {
        let s = IdealGeometrySpec::desk_default();
        Self {
            dim: s.dim,
            torso_half_widths: s.torso_half_widths,
            heart_center: s.heart_center,
            heart_radius: s.heart_radius,
            h_heart: s.h_heart,
            h_torso_interface: s.h_torso_interface,
            h_torso_exterior: s.h_torso_exterior,
            conforming: s.conforming,
        }
    }
}

impl GeometrySpecConfig {
    pub fn to_spec(&self) -> IdealGeometrySpec {
        IdealGeometrySpec {
            dim: self.dim,
            torso_half_widths: self.torso_half_widths,
            heart_center: self.heart_center,
            heart_radius: self.heart_radius,
            h_heart: self.h_heart,
            h_torso_interface: self.h_torso_interface,
            h_torso_exterior: self.h_torso_exterior,
            conforming: self.conforming,
        }
    }
}

/// Either an inline geometry spec or a pair of mesh files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub spec: Option<GeometrySpecConfig>,
    pub heart_mesh: Option<PathBuf>,
    pub torso_mesh: Option<PathBuf>,
    /// Fiber frame pivot; defaults to the spec's heart center. Required when
    /// meshes come from files.
    pub fiber_center: Option<[f64; 3]>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            spec: Some(GeometrySpecConfig::default()),
            heart_mesh: None,
            torso_mesh: None,
            fiber_center: None,
        }
    }
}

impl GeometryConfig {
    /// A `geometry: {}` with neither source explicit means the default spec.
    fn normalize(&mut self) {
        if self.spec.is_none() && self.heart_mesh.is_none() && self.torso_mesh.is_none() {
            self.spec = Some(GeometrySpecConfig::default());
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let from_files = self.heart_mesh.is_some() || self.torso_mesh.is_some();
        if self.spec.is_some() && from_files {
            return Err(config_err(
                "geometry.spec and geometry.heart_mesh/torso_mesh are mutually exclusive",
            ));
        }
        if from_files {
            if self.heart_mesh.is_none() {
                return Err(config_err("geometry.heart_mesh: missing"));
            }
            if self.torso_mesh.is_none() {
                return Err(config_err("geometry.torso_mesh: missing"));
            }
            if self.fiber_center.is_none() {
                return Err(config_err(
                    "geometry.fiber_center: required when meshes come from files",
                ));
            }
        } else if self.spec.is_none() {
            return Err(config_err(
                "geometry: provide either spec or heart_mesh + torso_mesh",
            ));
        }
        Ok(())
    }
}

/// Per-stimulus ball source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusConfig {
    pub center: [f64; 3],
    pub radius: f64,
    pub start: f64,
    pub duration: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub period: Option<f64>,
}

impl StimulusConfig {
    fn to_stimulus(&self) -> Stimulus {
        Stimulus {
            center: self.center,
            radius: self.radius,
            start: self.start,
            duration: self.duration,
            amplitude: self.amplitude,
            period: self.period,
        }
    }
}

/// Membrane model coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MembraneConfig {
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    pub tau_close: f64,
    pub v_gate: f64,
    pub v_rest: f64,
    pub v_peak: f64,
}

impl Default for MembraneConfig {
    fn default() -> Self {
        let m = MembraneModelSpec::default();
        Self {
            tau_in: m.tau_in,
            tau_out: m.tau_out,
            tau_open: m.tau_open,
            tau_close: m.tau_close,
            v_gate: m.v_gate,
            v_rest: m.v_rest,
            v_peak: m.v_peak,
        }
    }
}

impl MembraneConfig {
    pub fn to_spec(&self) -> MembraneModelSpec {
        MembraneModelSpec {
            tau_in: self.tau_in,
            tau_out: self.tau_out,
            tau_open: self.tau_open,
            tau_close: self.tau_close,
            v_gate: self.v_gate,
            v_rest: self.v_rest,
            v_peak: self.v_peak,
        }
    }
}

/// Tissue and time-integration parameters for the heart solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpConfig {
    pub chi: f64,
    pub c_m: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub record_from: f64,
    pub sigma_i: [f64; 3],
    pub sigma_e: [f64; 3],
    pub linear_extrapolation: bool,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub membrane: MembraneConfig,
}

impl Default for EpConfig {
    fn default() -> Self {
        let p = EpParameters::default();
        Self {
            chi: p.chi,
            c_m: p.c_m,
            dt: p.dt,
            t_start: p.t_start,
            t_end: p.t_end,
            record_from: p.record_from,
            sigma_i: [p.sigma_i.0, p.sigma_i.1, p.sigma_i.2],
            sigma_e: [p.sigma_e.0, p.sigma_e.1, p.sigma_e.2],
            linear_extrapolation: p.linear_extrapolation,
            solver_tol: p.solver.tol,
            solver_max_iter: p.solver.max_iter,
            membrane: MembraneConfig::default(),
        }
    }
}

impl EpConfig {
    /// Library parameters; `kind` and `record_every` are owned by the
    /// coupling driver and filled with placeholders here.
    pub fn to_params(&self) -> EpParameters {
        EpParameters {
            chi: self.chi,
            c_m: self.c_m,
            dt: self.dt,
            t_start: self.t_start,
            t_end: self.t_end,
            record_every: 1,
            record_from: self.record_from,
            kind: ModelKind::PseudoBidomain,
            sigma_i: (self.sigma_i[0], self.sigma_i[1], self.sigma_i[2]),
            sigma_e: (self.sigma_e[0], self.sigma_e[1], self.sigma_e[2]),
            linear_extrapolation: self.linear_extrapolation,
            solver: SolverConfig {
                tol: self.solver_tol,
                max_iter: self.solver_max_iter,
                ..SolverConfig::default()
            },
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.dt > 0.0) {
            return Err(config_err("ep.dt: must be positive"));
        }
        if !(self.t_end > self.t_start) {
            return Err(config_err("ep.t_end: must exceed ep.t_start"));
        }
        if !(self.solver_tol > 0.0) {
            return Err(config_err("ep.solver_tol: must be positive"));
        }
        if self.solver_max_iter == 0 {
            return Err(config_err("ep.solver_max_iter: must be positive"));
        }
        Ok(())
    }
}

/// Staggering cadence, torso conductivity, and output density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    /// Torso updates every this many heart steps.
    pub cadence: usize,
    pub sigma_t: f64,
    /// Keep every Nth body-surface snapshot (0 disables them).
    pub bspm_every: usize,
    /// Write volume-field files for every Nth snapshot (0 disables them).
    pub vtk_every: usize,
}

impl Default for CouplingSection {
    fn default() -> Self {
        let c = CoupledConfig::default();
        Self { cadence: c.cadence, sigma_t: c.sigma_t, bspm_every: c.bspm_every, vtk_every: 0 }
    }
}

/// Nine electrode positions; nearest exterior-surface vertices are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodesConfig {
    #[serde(rename = "R")]
    pub r: [f64; 3],
    #[serde(rename = "L")]
    pub l: [f64; 3],
    #[serde(rename = "F")]
    pub f: [f64; 3],
    #[serde(rename = "V1")]
    pub v1: [f64; 3],
    #[serde(rename = "V2")]
    pub v2: [f64; 3],
    #[serde(rename = "V3")]
    pub v3: [f64; 3],
    #[serde(rename = "V4")]
    pub v4: [f64; 3],
    #[serde(rename = "V5")]
    pub v5: [f64; 3],
    #[serde(rename = "V6")]
    pub v6: [f64; 3],
}

impl ElectrodesConfig {
    pub fn to_set(&self) -> ElectrodeSet {
        ElectrodeSet::new([
            self.r, self.l, self.f, self.v1, self.v2, self.v3, self.v4, self.v5, self.v6,
        ])
    }
}

/// Rigid motion applied to the heart mesh (and to stimulus centers, which are
/// given in the untransformed heart frame): rotate about `axis` through
/// `pivot`, then translate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub translate: [f64; 3],
    pub rotate_deg: f64,
    pub axis: [f64; 3],
    /// Defaults to the spec's heart center.
    pub pivot: Option<[f64; 3]>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self { translate: [0.0; 3], rotate_deg: 0.0, axis: [0.0, 0.0, 1.0], pivot: None }
    }
}

impl TransformConfig {
    pub fn is_identity(&self) -> bool {
        self.translate == [0.0; 3] && self.rotate_deg == 0.0
    }

    fn to_rigid(&self, default_pivot: Option<Vec3>) -> Result<RigidTransform, CliError> {
        let pivot = match (self.pivot, default_pivot) {
            (Some(p), _) => p,
            (None, Some(p)) => p,
            (None, None) => {
                return Err(config_err(
                    "transform.pivot: required when geometry comes from files",
                ))
            }
        };
        let mut t = if self.rotate_deg != 0.0 {
            RigidTransform::rotation_deg(self.axis, self.rotate_deg, pivot)
        } else {
            RigidTransform::identity()
        };
        t.translation = self.translate;
        Ok(t)
    }
}

/// One full experiment: geometry, physics, coupling strategy, outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: ModeField,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub ep: EpConfig,
    #[serde(default)]
    pub stimuli: Vec<StimulusConfig>,
    #[serde(default)]
    pub coupling: CouplingSection,
    /// Defaults to electrodes laid out for the desk-scale torso.
    #[serde(default)]
    pub electrodes: Option<ElectrodesConfig>,
    #[serde(default)]
    pub transform: Option<TransformConfig>,
    pub output_dir: PathBuf,
    /// Reserved; the physics is deterministic and never reads it.
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.geometry.validate()?;
        self.ep.validate()?;
        if self.coupling.cadence == 0 {
            return Err(config_err("coupling.cadence: must be at least 1"));
        }
        if !(self.coupling.sigma_t > 0.0) {
            return Err(config_err("coupling.sigma_t: must be positive"));
        }
        for (i, s) in self.stimuli.iter().enumerate() {
            if !(s.radius > 0.0) {
                return Err(config_err(format!("stimuli[{i}].radius: must be positive")));
            }
            if !(s.duration > 0.0) {
                return Err(config_err(format!("stimuli[{i}].duration: must be positive")));
            }
        }
        if self.mode == ModeField::Fcht {
            if let Some(t) = &self.transform {
                if !t.is_identity() {
                    return Err(config_err(
                        "transform: the monolithic mode needs a conforming pair; \
                         a moved heart is only supported by the one-way modes",
                    ));
                }
            }
            if let Some(spec) = &self.geometry.spec {
                if !spec.conforming {
                    return Err(config_err(
                        "geometry.spec.conforming: the monolithic mode needs a conforming pair",
                    ));
                }
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(config_err("output_dir: must not be empty"));
        }
        Ok(())
    }

    pub fn to_coupled_config(&self) -> CoupledConfig {
        CoupledConfig {
            cadence: self.coupling.cadence,
            sigma_t: self.coupling.sigma_t,
            mode: self.mode.to_mode(),
            bspm_every: self.coupling.bspm_every,
            electrodes: match &self.electrodes {
                Some(e) => e.to_set(),
                None => ElectrodeSet::desk_default(),
            },
        }
    }

    pub fn protocol(&self) -> StimulusProtocol {
        StimulusProtocol { stimuli: self.stimuli.iter().map(|s| s.to_stimulus()).collect() }
    }

    pub fn membrane_model(&self) -> Result<TwoVariableModel, CliError> {
        TwoVariableModel::new(self.ep.membrane.to_spec())
            .map_err(|e| config_err(format!("ep.membrane: {e}")))
    }

    /// Builds the problem geometry: meshes (with the rigid transform applied
    /// to the heart), fiber frame, and transformed stimulus protocol.
    pub fn build_problem(&self) -> Result<Problem, CliError> {
        self.validate()?;
        let (heart, torso, fiber_center) = match &self.geometry.spec {
            Some(spec) => {
                let s = spec.to_spec();
                let (h, t) = generate_pair(&s).map_err(|e| config_err(format!("geometry: {e}")))?;
                (h, t, self.geometry.fiber_center.unwrap_or(s.heart_center))
            }
            None => {
                let hp = self.geometry.heart_mesh.as_ref().unwrap();
                let tp = self.geometry.torso_mesh.as_ref().unwrap();
                let h = load_mesh(hp)
                    .map_err(|e| config_err(format!("geometry.heart_mesh: {e}")))?;
                let t = load_mesh(tp)
                    .map_err(|e| config_err(format!("geometry.torso_mesh: {e}")))?;
                (h, t, self.geometry.fiber_center.unwrap())
            }
        };

        let mut heart = heart;
        let mut fiber_center = fiber_center;
        let mut protocol = self.protocol();
        if let Some(tc) = &self.transform {
            if !tc.is_identity() {
                let default_pivot = self.geometry.spec.as_ref().map(|s| s.heart_center);
                let rigid = tc.to_rigid(default_pivot)?;
                heart = apply_rigid(&heart, &rigid)
                    .map_err(|e| config_err(format!("transform: {e}")))?;
                fiber_center = rigid.apply_point(fiber_center);
                for s in &mut protocol.stimuli {
                    s.center = rigid.apply_point(s.center);
                }
            }
        }
        let fibers = FiberFrame::circumferential(&heart, fiber_center);
        Ok(Problem { heart, torso, fibers, protocol })
    }
}

/// Fully resolved geometry and sources, ready to hand to the solvers.
pub struct Problem {
    pub heart: SimplicialMesh,
    pub torso: SimplicialMesh,
    pub fibers: FiberFrame,
    pub protocol: StimulusProtocol,
}

/// Sweep: a reference experiment plus named single-knob variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub reference: ExperimentConfig,
    pub variants: Vec<SweepVariant>,
    /// Per-variant runs land in `output_dir/<name>`; the aggregated report
    /// lands in `output_dir/sweep_report.json`.
    pub output_dir: PathBuf,
}

/// Overrides applied on top of the reference config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepVariant {
    pub name: String,
    pub mode: Option<ModeField>,
    pub h_heart: Option<f64>,
    pub h_torso_interface: Option<f64>,
    pub h_torso_exterior: Option<f64>,
    pub conforming: Option<bool>,
    pub sigma_t: Option<f64>,
    pub transform: Option<TransformConfig>,
    /// Instead of moving the heart against the fixed torso, bake the
    /// transform into the geometry spec and generate a fresh conforming pair
    /// around the moved heart.
    pub regenerate_conforming: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.reference.validate()?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(config_err("output_dir: must not be empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, v) in self.variants.iter().enumerate() {
            if v.name.is_empty() {
                return Err(config_err(format!("variants[{i}].name: must not be empty")));
            }
            if v.name.contains(['/', '\\']) || v.name == "." || v.name == ".." {
                return Err(config_err(format!(
                    "variants[{i}].name: must be a plain directory name"
                )));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(config_err(format!(
                    "variants[{i}].name: duplicate name `{}`",
                    v.name
                )));
            }
            let needs_spec = v.h_heart.is_some()
                || v.h_torso_interface.is_some()
                || v.h_torso_exterior.is_some()
                || v.conforming.is_some()
                || v.regenerate_conforming;
            if needs_spec && self.reference.geometry.spec.is_none() {
                return Err(config_err(format!(
                    "variants[{i}]: mesh-size and regeneration overrides need reference \
                     geometry given as a spec, not mesh files"
                )));
            }
            if v.regenerate_conforming && v.transform.is_none() {
                return Err(config_err(format!(
                    "variants[{i}].regenerate_conforming: needs a transform to bake in"
                )));
            }
        }
        Ok(())
    }

    /// The concrete experiment for one variant.
    pub fn variant_config(&self, v: &SweepVariant) -> Result<ExperimentConfig, CliError> {
        let mut cfg = self.reference.clone();
        cfg.output_dir = self.output_dir.join(&v.name);
        if let Some(m) = v.mode {
            cfg.mode = m;
        }
        if let Some(spec) = cfg.geometry.spec.as_mut() {
            if let Some(h) = v.h_heart {
                spec.h_heart = h;
            }
            if let Some(h) = v.h_torso_interface {
                spec.h_torso_interface = h;
            }
            if let Some(h) = v.h_torso_exterior {
                spec.h_torso_exterior = h;
            }
            if let Some(c) = v.conforming {
                spec.conforming = c;
            }
        }
        if let Some(s) = v.sigma_t {
            cfg.coupling.sigma_t = s;
        }
        if let Some(tc) = &v.transform {
            if v.regenerate_conforming {
                let spec = cfg.geometry.spec.as_mut().unwrap();
                let rigid = tc.to_rigid(Some(spec.heart_center))?;
                spec.heart_center = rigid.apply_point(spec.heart_center);
                spec.conforming = true;
                cfg.transform = None;
                // Stimuli still follow the moved heart.
                for s in &mut cfg.stimuli {
                    s.center = rigid.apply_point(s.center);
                }
            } else {
                cfg.transform = Some(tc.clone());
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_experiment(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| config_err(format!("config: {e}")))?;
    cfg.geometry.normalize();
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_sweep(text: &str) -> Result<SweepConfig, CliError> {
    let mut cfg: SweepConfig =
        serde_json::from_str(text).map_err(|e| config_err(format!("sweep config: {e}")))?;
    cfg.reference.geometry.normalize();
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_experiment(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_experiment(&text)
}

pub fn read_sweep(path: &Path) -> Result<SweepConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_sweep(&text)
}

/// Canonical (fully expanded) JSON form.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("config serialization");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ExperimentConfig {
        parse_experiment(
            r#"{ "mode": "one-way-pseudo-bidomain", "output_dir": "/tmp/run" }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_mirror_the_library() {
        let cfg = minimal();
        let p = cfg.ep.to_params();
        let lib = EpParameters::default();
        assert_eq!(p.chi, lib.chi);
        assert_eq!(p.c_m, lib.c_m);
        assert_eq!(p.dt, lib.dt);
        assert_eq!(p.sigma_i, lib.sigma_i);
        assert_eq!(p.sigma_e, lib.sigma_e);
        assert_eq!(cfg.coupling.cadence, CoupledConfig::default().cadence);
        assert_eq!(cfg.coupling.sigma_t, CoupledConfig::default().sigma_t);
        let spec = cfg.geometry.spec.unwrap().to_spec();
        let desk = IdealGeometrySpec::desk_default();
        assert_eq!(spec.heart_radius, desk.heart_radius);
        assert_eq!(spec.torso_half_widths, desk.torso_half_widths);
        assert!(spec.conforming);
    }

    #[test]
    fn round_trip_is_identity_on_the_canonical_form() {
        let cfg = minimal();
        let text = canonical_json(&cfg);
        let again = parse_experiment(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(canonical_json(&again), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x", "cadence": 20 }"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cadence"), "message should name the bad key: {msg}");

        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x", "ep": { "dtt": 0.05 } }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("dtt"));
    }

    #[test]
    fn mode_names_follow_the_documented_spelling() {
        for (name, mode) in [
            ("fcht", CouplingMode::Fcht),
            ("one-way-bidomain", CouplingMode::OneWayBidomain),
            ("one-way-pseudo-bidomain", CouplingMode::OneWayPseudoBidomain),
        ] {
            let cfg = parse_experiment(&format!(
                r#"{{ "mode": "{name}", "output_dir": "/tmp/x" }}"#
            ))
            .unwrap();
            assert_eq!(cfg.mode.to_mode(), mode);
            assert_eq!(cfg.mode.name(), name);
        }
        assert!(parse_experiment(r#"{ "mode": "two-way", "output_dir": "/tmp/x" }"#).is_err());
    }

    #[test]
    fn geometry_source_must_be_unambiguous() {
        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x",
                 "geometry": { "heart_mesh": "h.mesh" } }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("torso_mesh"));

        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x",
                 "geometry": { "spec": {}, "heart_mesh": "h.mesh", "torso_mesh": "t.mesh" } }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"));

        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x",
                 "geometry": { "heart_mesh": "h.mesh", "torso_mesh": "t.mesh" } }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("fiber_center"));
    }

    #[test]
    fn monolithic_mode_rejects_moved_or_nonconforming_hearts() {
        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x",
                 "transform": { "translate": [1.0, 0.0, 0.0] } }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("one-way"));

        let err = parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x",
                 "geometry": { "spec": { "conforming": false } } }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("conforming"));

        // Identity transform is allowed.
        parse_experiment(
            r#"{ "mode": "fcht", "output_dir": "/tmp/x", "transform": {} }"#,
        )
        .unwrap();
    }

    #[test]
    fn transform_moves_heart_fibers_and_stimuli_together() {
        let cfg = parse_experiment(
            r#"{ "mode": "one-way-pseudo-bidomain", "output_dir": "/tmp/x",
                 "geometry": { "spec": { "heart_radius": 30.0, "h_heart": 4.0,
                                         "h_torso_interface": 5.0, "h_torso_exterior": 25.0,
                                         "torso_half_widths": [100.0, 150.0, 0.0] } },
                 "stimuli": [ { "center": [0.0, 50.0, 0.0], "radius": 5.0,
                                "start": 0.0, "duration": 1.0, "amplitude": 80.0 } ],
                 "transform": { "translate": [2.0, 0.0, 0.0] } }"#,
        )
        .unwrap();
        let base = {
            let mut c = cfg.clone();
            c.transform = None;
            c.build_problem().unwrap()
        };
        let moved = cfg.build_problem().unwrap();
        assert_eq!(moved.heart.n_vertices(), base.heart.n_vertices());
        for (a, b) in base.heart.vertices().iter().zip(moved.heart.vertices()) {
            assert_eq!(b[0], a[0] + 2.0);
            assert_eq!(b[1], a[1]);
        }
        assert_eq!(moved.protocol.stimuli[0].center, [2.0, 50.0, 0.0]);
        // Torso stays put.
        assert_eq!(base.torso.vertices(), moved.torso.vertices());
    }

    #[test]
    fn sweep_overrides_apply_one_knob_at_a_time() {
        let sweep = parse_sweep(
            r#"{ "reference": { "mode": "one-way-pseudo-bidomain", "output_dir": "/tmp/ref" },
                 "variants": [
                   { "name": "coarse", "h_torso_interface": 12.0, "conforming": false },
                   { "name": "rot", "transform": { "rotate_deg": 3.0 } },
                   { "name": "rot-ref", "transform": { "translate": [1.0, 0.0, 0.0] },
                     "regenerate_conforming": true }
                 ],
                 "output_dir": "/tmp/sweep" }"#,
        )
        .unwrap();

        let coarse = sweep.variant_config(&sweep.variants[0]).unwrap();
        let spec = coarse.geometry.spec.as_ref().unwrap();
        assert_eq!(spec.h_torso_interface, 12.0);
        assert!(!spec.conforming);
        assert_eq!(coarse.output_dir, PathBuf::from("/tmp/sweep/coarse"));

        let rot = sweep.variant_config(&sweep.variants[1]).unwrap();
        assert_eq!(rot.transform.as_ref().unwrap().rotate_deg, 3.0);

        let regen = sweep.variant_config(&sweep.variants[2]).unwrap();
        assert!(regen.transform.is_none());
        let spec = regen.geometry.spec.as_ref().unwrap();
        assert_eq!(spec.heart_center[0], IdealGeometrySpec::desk_default().heart_center[0] + 1.0);
        assert!(spec.conforming);
    }

    #[test]
    fn sweep_rejects_duplicate_or_pathy_names() {
        assert!(parse_sweep(
            r#"{ "reference": { "mode": "fcht", "output_dir": "/tmp/r" },
                 "variants": [ { "name": "a" }, { "name": "a" } ],
                 "output_dir": "/tmp/s" }"#,
        )
        .is_err());
        assert!(parse_sweep(
            r#"{ "reference": { "mode": "fcht", "output_dir": "/tmp/r" },
                 "variants": [ { "name": "../up" } ],
                 "output_dir": "/tmp/s" }"#,
        )
        .is_err());
    }
}
