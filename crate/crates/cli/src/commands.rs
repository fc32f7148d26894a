//! Subcommand implementations, shared by the binary and the tests.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cardiowave_coupling::{bspm_l2, cc, compare_modes, rmse, run_coupled, CoupledRun, LEAD_NAMES};
use cardiowave_mesh::factory::generate_pair;
use cardiowave_mesh::io::save_mesh;
use cardiowave_mesh::vec3::Vec3;
use cardiowave_mesh::{SimplicialMesh, LABEL_SIGMA_EXT};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    self, list_snapshots, read_traces_csv, read_vtk, write_json, write_mesh_vtk, write_traces_csv,
    write_vtk, RunReport,
};
use crate::config::{canonical_json, ExperimentConfig, GeometrySpecConfig, SweepConfig};
use crate::CliError;

// ---------------------------------------------------------------------------
// genmesh

pub struct GenmeshOutcome {
    pub heart_path: PathBuf,
    pub torso_path: PathBuf,
    pub heart_vertices: usize,
    pub heart_cells: usize,
    pub torso_vertices: usize,
    pub torso_cells: usize,
}

pub fn genmesh(spec: &GeometrySpecConfig, out_dir: &Path) -> Result<GenmeshOutcome, CliError> {
    let (heart, torso) = generate_pair(&spec.to_spec())
        .map_err(|e| CliError::Config(format!("geometry: {e}")))?;
    std::fs::create_dir_all(out_dir)?;
    let heart_path = out_dir.join("heart.mesh");
    let torso_path = out_dir.join("torso.mesh");
    save_mesh(&heart, &heart_path)?;
    save_mesh(&torso, &torso_path)?;
    Ok(GenmeshOutcome {
        heart_path,
        torso_path,
        heart_vertices: heart.n_vertices(),
        heart_cells: heart.n_cells(),
        torso_vertices: torso.n_vertices(),
        torso_cells: torso.n_cells(),
    })
}

// ---------------------------------------------------------------------------
// simulate

pub struct SimulateOutcome {
    pub run: CoupledRun,
    pub report: RunReport,
    pub heart: SimplicialMesh,
    pub torso: SimplicialMesh,
    pub output_dir: PathBuf,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulateOutcome, CliError> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let model = cfg.membrane_model()?;
    let params = cfg.ep.to_params();
    let coupled = cfg.to_coupled_config();

    let start = Instant::now();
    let run = run_coupled(
        &params,
        &problem.protocol,
        &problem.heart,
        &problem.fibers,
        &model,
        &problem.torso,
        &coupled,
    )?;
    let total = start.elapsed().as_secs_f64();

    let report = RunReport::from_run(cfg.mode.name(), &run, &problem.heart, &problem.torso, total);
    report.validate()?;
    write_run_artifacts(cfg, &problem.heart, &problem.torso, &run, &report)?;
    Ok(SimulateOutcome {
        run,
        report,
        heart: problem.heart,
        torso: problem.torso,
        output_dir: cfg.output_dir.clone(),
    })
}

fn write_run_artifacts(
    cfg: &ExperimentConfig,
    heart: &SimplicialMesh,
    torso: &SimplicialMesh,
    run: &CoupledRun,
    report: &RunReport,
) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    cardiowave_mesh::io::atomic_write(&dir.join("config.json"), canonical_json(cfg).as_bytes())?;
    save_mesh(heart, &dir.join("heart.mesh"))?;
    save_mesh(torso, &dir.join("torso.mesh"))?;
    write_traces_csv(&dir.join("traces.csv"), &run.traces)?;
    write_json(&dir.join("report.json"), report)?;

    if !run.bspm.is_empty() {
        let (points, cells, cell_type) = bspm_surface(torso, &run.bspm_vertices)?;
        for (i, values) in run.bspm.iter().enumerate() {
            let title = format!(
                "body surface potentials t_ms={}",
                artifacts::fmt_f64(run.bspm_times[i])
            );
            write_vtk(
                &dir.join(format!("bspm_{i:04}.vtk")),
                &title,
                &points,
                &cells,
                cell_type,
                &[("uT", values.as_slice())],
            )?;
        }
    }

    if cfg.coupling.vtk_every > 0 {
        for (k, &t) in run.timeline.times.iter().enumerate() {
            if k % cfg.coupling.vtk_every != 0 {
                continue;
            }
            let stamp = format!("t_ms={}", artifacts::fmt_f64(t));
            write_mesh_vtk(
                &dir.join(format!("heart_{k:04}.vtk")),
                &format!("heart fields {stamp}"),
                heart,
                &[
                    ("Vm", run.timeline.vm[k].as_slice()),
                    ("ue", run.timeline.ue[k].as_slice()),
                ],
            )?;
            write_mesh_vtk(
                &dir.join(format!("torso_{k:04}.vtk")),
                &format!("torso potential {stamp}"),
                torso,
                &[("uT", run.torso_potentials[k].as_slice())],
            )?;
        }
    }
    Ok(())
}

/// Exterior-surface geometry restricted to the sampled vertices, with facet
/// connectivity remapped to local indices.
fn bspm_surface(
    torso: &SimplicialMesh,
    vertices: &[usize],
) -> Result<(Vec<Vec3>, Vec<Vec<u32>>, u8), CliError> {
    let points: Vec<Vec3> = vertices.iter().map(|&v| torso.vertex(v)).collect();
    let local: HashMap<u32, u32> = vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| (v as u32, i as u32))
        .collect();
    let patch = torso.extract_boundary(LABEL_SIGMA_EXT).map_err(CliError::Mesh)?;
    let mut cells = Vec::with_capacity(patch.n_facets());
    for i in 0..patch.n_facets() {
        let cell: Option<Vec<u32>> =
            patch.facet_vertices(i).iter().map(|v| local.get(v).copied()).collect();
        let cell = cell.ok_or_else(|| {
            CliError::Artifact("surface facet touches an unsampled vertex".into())
        })?;
        cells.push(cell);
    }
    let cell_type = if torso.dim() == 2 { 3 } else { 5 };
    Ok((points, cells, cell_type))
}

// ---------------------------------------------------------------------------
// compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOutcome {
    pub samples: usize,
    pub lead_rmse: [f64; 12],
    pub lead_cc: [f64; 12],
    pub mean_rmse: f64,
    pub mean_cc: f64,
    /// Present only when both runs carry surface snapshots on the same
    /// exterior vertices.
    pub bspm_l2: Option<f64>,
}

pub fn compare_dirs(dir_a: &Path, dir_b: &Path) -> Result<CompareOutcome, CliError> {
    let ta = read_traces_csv(&dir_a.join("traces.csv"))?;
    let tb = read_traces_csv(&dir_b.join("traces.csv"))?;
    if ta.len() != tb.len() || ta.is_empty() {
        return Err(CliError::Artifact(format!(
            "trace lengths differ: {} vs {}",
            ta.len(),
            tb.len()
        )));
    }
    for (x, y) in ta.times.iter().zip(&tb.times) {
        if (x - y).abs() > 1e-9 {
            return Err(CliError::Artifact(format!("sample times differ: {x} vs {y}")));
        }
    }
    let mut lead_rmse = [0.0; 12];
    let mut lead_cc = [0.0; 12];
    for j in 0..12 {
        let a = ta.lead_column(j);
        let b = tb.lead_column(j);
        lead_rmse[j] = rmse(&a, &b)?;
        lead_cc[j] = cc(&a, &b)?;
    }
    let mean_rmse = lead_rmse.iter().sum::<f64>() / 12.0;
    let mean_cc = lead_cc.iter().sum::<f64>() / 12.0;
    let bspm = compare_bspm(dir_a, dir_b)?;
    Ok(CompareOutcome { samples: ta.len(), lead_rmse, lead_cc, mean_rmse, mean_cc, bspm_l2: bspm })
}

fn compare_bspm(dir_a: &Path, dir_b: &Path) -> Result<Option<f64>, CliError> {
    let files_a = list_snapshots(dir_a, "bspm_")?;
    let files_b = list_snapshots(dir_b, "bspm_")?;
    if files_a.is_empty() || files_b.is_empty() {
        return Ok(None);
    }
    if files_a.len() != files_b.len() {
        return Err(CliError::Artifact(format!(
            "surface snapshot counts differ: {} vs {}",
            files_a.len(),
            files_b.len()
        )));
    }
    let mut reference = Vec::with_capacity(files_a.len());
    let mut test = Vec::with_capacity(files_a.len());
    let mut weights: Option<Vec<f64>> = None;
    for (pa, pb) in files_a.iter().zip(&files_b) {
        let a = read_vtk(pa)?;
        let b = read_vtk(pb)?;
        if a.points != b.points {
            // Different torso discretizations sample different surface
            // vertices; the metric is undefined there.
            return Ok(None);
        }
        if let (Some(x), Some(y)) = (a.time_ms, b.time_ms) {
            if (x - y).abs() > 1e-9 {
                return Err(CliError::Artifact(format!(
                    "surface snapshot times differ: {x} vs {y}"
                )));
            }
        }
        let ua = a.fields.get("uT").ok_or_else(|| {
            CliError::Artifact(format!("{}: missing field `uT`", pa.display()))
        })?;
        let ub = b.fields.get("uT").ok_or_else(|| {
            CliError::Artifact(format!("{}: missing field `uT`", pb.display()))
        })?;
        if weights.is_none() {
            weights = Some(surface_weights(&a.points, &a.cells));
        }
        reference.push(ua.clone());
        test.push(ub.clone());
    }
    let weights = weights.unwrap();
    Ok(Some(bspm_l2(&reference, &test, &weights)?))
}

/// Lumped measure per surface point: each facet spreads its length (2D) or
/// area (3D) evenly over its corners.
fn surface_weights(points: &[Vec3], cells: &[Vec<u32>]) -> Vec<f64> {
    let mut w = vec![0.0; points.len()];
    for cell in cells {
        let measure = match cell.len() {
            2 => cardiowave_mesh::vec3::dist(points[cell[0] as usize], points[cell[1] as usize]),
            3 => {
                let a = points[cell[0] as usize];
                let b = points[cell[1] as usize];
                let c = points[cell[2] as usize];
                let ab = cardiowave_mesh::vec3::sub(b, a);
                let ac = cardiowave_mesh::vec3::sub(c, a);
                0.5 * cardiowave_mesh::vec3::norm(cardiowave_mesh::vec3::cross(ab, ac))
            }
            _ => 0.0,
        };
        let share = measure / cell.len() as f64;
        for &v in cell {
            w[v as usize] += share;
        }
    }
    w
}

pub fn render_compare_table(outcome: &CompareOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:>12} {:>10}", "lead", "rmse", "cc");
    for j in 0..12 {
        let _ = writeln!(
            out,
            "{:<6} {:>12.6} {:>10.6}",
            LEAD_NAMES[j], outcome.lead_rmse[j], outcome.lead_cc[j]
        );
    }
    let _ = writeln!(out, "{:<6} {:>12.6} {:>10.6}", "mean", outcome.mean_rmse, outcome.mean_cc);
    match outcome.bspm_l2 {
        Some(v) => {
            let _ = writeln!(out, "surface map relative l2: {v:.6}");
        }
        None => {
            let _ = writeln!(out, "surface map relative l2: not comparable");
        }
    }
    out
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub name: String,
    pub mode: String,
    pub output_dir: PathBuf,
    pub lead_rmse: [f64; 12],
    pub lead_cc: [f64; 12],
    pub mean_rmse: f64,
    pub mean_cc: f64,
    pub bspm_l2: Option<f64>,
    pub interface_max_distance_mm: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub reference_dir: PathBuf,
    pub reference_mode: String,
    pub reference_seconds: f64,
    pub rows: Vec<SweepRow>,
}

pub struct SweepOutcome {
    pub report: SweepReport,
    pub report_path: PathBuf,
}

/// Worker-thread cap from `CARDIO_THREADS` (default 1).
pub fn worker_threads() -> Result<usize, CliError> {
    match std::env::var("CARDIO_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Config(format!("CARDIO_THREADS: `{v}` is not a positive integer"))
            }),
        Err(_) => Ok(1),
    }
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    let threads = worker_threads()?;
    // Resolve every variant first so config errors surface before any solve.
    let configs: Vec<ExperimentConfig> = cfg
        .variants
        .iter()
        .map(|v| cfg.variant_config(v))
        .collect::<Result<_, _>>()?;

    let reference = simulate(&cfg.reference)?;

    let mut outcomes: Vec<Option<Result<SimulateOutcome, CliError>>> = Vec::new();
    outcomes.resize_with(configs.len(), || None);
    let indices: Vec<usize> = (0..configs.len()).collect();
    for chunk in indices.chunks(threads.max(1)) {
        let mut finished: Vec<(usize, Result<SimulateOutcome, CliError>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&i| {
                        let config = &configs[i];
                        scope.spawn(move || (i, simulate(config)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sweep worker panicked"))
                    .collect()
            });
        for (i, result) in finished.drain(..) {
            outcomes[i] = Some(result);
        }
    }

    let mut rows = Vec::with_capacity(configs.len());
    for ((variant, config), outcome) in cfg.variants.iter().zip(&configs).zip(outcomes) {
        let outcome = outcome.expect("every variant ran")?;
        let m = compare_modes(&reference.run, &outcome.run)?;
        rows.push(SweepRow {
            name: variant.name.clone(),
            mode: config.mode.name().to_string(),
            output_dir: outcome.output_dir.clone(),
            lead_rmse: m.lead_rmse,
            lead_cc: m.lead_cc,
            mean_rmse: m.mean_rmse,
            mean_cc: m.mean_cc,
            bspm_l2: m.bspm,
            interface_max_distance_mm: outcome.run.interface_max_distance,
            total_seconds: outcome.report.total_seconds,
        });
    }

    let report = SweepReport {
        reference_dir: reference.output_dir.clone(),
        reference_mode: cfg.reference.mode.name().to_string(),
        reference_seconds: reference.report.total_seconds,
        rows,
    };
    std::fs::create_dir_all(&cfg.output_dir)?;
    let report_path = cfg.output_dir.join("sweep_report.json");
    write_json(&report_path, &report)?;
    Ok(SweepOutcome { report, report_path })
}

pub fn render_sweep_table(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "reference: {} ({:.2}s) at {}",
        report.reference_mode,
        report.reference_seconds,
        report.reference_dir.display()
    );
    let _ = writeln!(
        out,
        "{:<16} {:>10} {:>10} {:>12} {:>9}",
        "variant", "mean rmse", "mean cc", "surface l2", "seconds"
    );
    for row in &report.rows {
        let bspm = match row.bspm_l2 {
            Some(v) => format!("{v:.6}"),
            None => "n/a".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<16} {:>10.6} {:>10.6} {:>12} {:>9.2}",
            row.name, row.mean_rmse, row.mean_cc, bspm, row.total_seconds
        );
    }
    if report.rows.len() >= 2 {
        let monotone = report
            .rows
            .windows(2)
            .all(|w| w[1].mean_rmse >= w[0].mean_rmse - 1e-15);
        let _ = writeln!(
            out,
            "mean rmse non-decreasing across variants: {}",
            if monotone { "yes" } else { "no" }
        );
    }
    out
}
