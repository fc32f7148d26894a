//! On-disk run artifacts: trace CSV, legacy-VTK snapshots, run report.
//!
//! Every file is written atomically (temp + rename), and every float is
//! printed with 17 significant digits so repeated runs of the same config
//! produce bitwise-identical files and comparisons can trust the bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cardiowave_coupling::{CoupledRun, TraceSet, ELECTRODE_NAMES, LEAD_NAMES};
use cardiowave_mesh::io::atomic_write;
use cardiowave_mesh::vec3::Vec3;
use cardiowave_mesh::SimplicialMesh;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn artifact_err(msg: impl Into<String>) -> CliError {
    CliError::Artifact(msg.into())
}

// ---------------------------------------------------------------------------
// Trace CSV

/// `t_ms`, nine raw electrode potentials, then the twelve derived leads.
pub fn csv_header() -> String {
    let mut h = String::from("t_ms");
    for name in ELECTRODE_NAMES {
        h.push(',');
        h.push_str(name);
    }
    for name in LEAD_NAMES {
        h.push(',');
        h.push_str(name);
    }
    h
}

pub fn write_traces_csv(path: &Path, t: &TraceSet) -> Result<(), CliError> {
    let mut out = csv_header();
    out.push('\n');
    for k in 0..t.len() {
        out.push_str(&fmt_f64(t.times[k]));
        for v in t.electrodes[k] {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        for v in t.leads[k] {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())?;
    Ok(())
}

/// Parsed trace table, column-addressable by electrode or lead name.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub times: Vec<f64>,
    pub electrodes: Vec<[f64; 9]>,
    pub leads: Vec<[f64; 12]>,
}

impl TraceTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn lead_column(&self, j: usize) -> Vec<f64> {
        self.leads.iter().map(|row| row[j]).collect()
    }
}

pub fn read_traces_csv(path: &Path) -> Result<TraceTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| artifact_err(format!("{}: {e}", path.display())))?;
    parse_traces_csv(&text).map_err(|e| artifact_err(format!("{}: {e}", path.display())))
}

fn parse_traces_csv(text: &str) -> Result<TraceTable, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty trace file")?;
    let expected = csv_header();
    if header != expected {
        // Diagnose the likeliest authoring mistake by name.
        let got: Vec<&str> = header.split(',').collect();
        for name in std::iter::once("t_ms")
            .chain(ELECTRODE_NAMES.iter().copied())
            .chain(LEAD_NAMES.iter().copied())
        {
            if !got.contains(&name) {
                return Err(format!("missing column `{name}`"));
            }
        }
        return Err(format!("header mismatch: expected `{expected}`, got `{header}`"));
    }
    let mut table = TraceTable { times: Vec::new(), electrodes: Vec::new(), leads: Vec::new() };
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = i + 2;
        let mut values = [0.0; 22];
        let mut fields = line.split(',');
        for (j, slot) in values.iter_mut().enumerate() {
            let field = fields
                .next()
                .ok_or_else(|| format!("line {row}: expected 22 fields, got {j}"))?;
            *slot = field
                .parse::<f64>()
                .map_err(|e| format!("line {row}, field {}: {e}", j + 1))?;
        }
        if fields.next().is_some() {
            return Err(format!("line {row}: more than 22 fields"));
        }
        table.times.push(values[0]);
        let mut e = [0.0; 9];
        e.copy_from_slice(&values[1..10]);
        table.electrodes.push(e);
        let mut l = [0.0; 12];
        l.copy_from_slice(&values[10..22]);
        table.leads.push(l);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Legacy VTK (ASCII unstructured grid)

/// One scalar field per point, written in the order given.
pub fn write_vtk(
    path: &Path,
    title: &str,
    points: &[Vec3],
    cells: &[Vec<u32>],
    cell_type: u8,
    fields: &[(&str, &[f64])],
) -> Result<(), CliError> {
    for (name, values) in fields {
        if values.len() != points.len() {
            return Err(artifact_err(format!(
                "field `{name}`: {} values for {} points",
                values.len(),
                points.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", points.len());
    for p in points {
        let _ = writeln!(out, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
    }
    let list_len: usize = cells.iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(out, "CELLS {} {list_len}", cells.len());
    for c in cells {
        let _ = write!(out, "{}", c.len());
        for &v in c {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    for _ in cells {
        let _ = writeln!(out, "{cell_type}");
    }
    let _ = writeln!(out, "POINT_DATA {}", points.len());
    for (name, values) in fields {
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for &v in *values {
            out.push_str(&fmt_f64(v));
            out.push('\n');
        }
    }
    atomic_write(path, out.as_bytes())?;
    Ok(())
}

/// Volume snapshot on a simplicial mesh (triangles or tetrahedra).
pub fn write_mesh_vtk(
    path: &Path,
    title: &str,
    mesh: &SimplicialMesh,
    fields: &[(&str, &[f64])],
) -> Result<(), CliError> {
    let cells: Vec<Vec<u32>> = (0..mesh.n_cells()).map(|c| mesh.cell(c).to_vec()).collect();
    let cell_type = if mesh.dim() == 2 { 5 } else { 10 };
    write_vtk(path, title, mesh.vertices(), &cells, cell_type, fields)
}

/// Minimal reader for the files this writer produces.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkSnapshot {
    pub title: String,
    /// Parsed from a `t_ms=<value>` token in the title, when present.
    pub time_ms: Option<f64>,
    pub points: Vec<Vec3>,
    pub cells: Vec<Vec<u32>>,
    pub fields: BTreeMap<String, Vec<f64>>,
}

pub fn read_vtk(path: &Path) -> Result<VtkSnapshot, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| artifact_err(format!("{}: {e}", path.display())))?;
    parse_vtk(&text).map_err(|e| artifact_err(format!("{}: {e}", path.display())))
}

fn parse_vtk(text: &str) -> Result<VtkSnapshot, String> {
    let mut lines = text.lines();
    let magic = lines.next().ok_or("empty file")?;
    if !magic.starts_with("# vtk DataFile") {
        return Err("not a legacy VTK file".into());
    }
    let title = lines.next().ok_or("missing title")?.to_string();
    let time_ms = title
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("t_ms="))
        .and_then(|v| v.parse::<f64>().ok());
    let format = lines.next().ok_or("missing format line")?;
    if format.trim() != "ASCII" {
        return Err(format!("unsupported format `{format}`"));
    }

    // Token stream over the remaining lines.
    let tokens: Vec<&str> = lines.flat_map(str::split_whitespace).collect();
    let mut pos = 0usize;
    fn take<'a>(tokens: &[&'a str], pos: &mut usize, what: &str) -> Result<&'a str, String> {
        let t = tokens
            .get(*pos)
            .copied()
            .ok_or_else(|| format!("unexpected end of file reading {what}"))?;
        *pos += 1;
        Ok(t)
    }
    let next = |pos: &mut usize, what: &str| take(&tokens, pos, what);

    let mut snapshot = VtkSnapshot {
        title,
        time_ms,
        points: Vec::new(),
        cells: Vec::new(),
        fields: BTreeMap::new(),
    };
    while pos < tokens.len() {
        let keyword = next(&mut pos, "keyword")?;
        match keyword {
            "DATASET" => {
                let kind = next(&mut pos, "dataset kind")?;
                if kind != "UNSTRUCTURED_GRID" {
                    return Err(format!("unsupported dataset `{kind}`"));
                }
            }
            "POINTS" => {
                let n: usize = next(&mut pos, "point count")?.parse().map_err(|e| format!("{e}"))?;
                let _dtype = next(&mut pos, "point type")?;
                snapshot.points.reserve(n);
                for _ in 0..n {
                    let mut p = [0.0; 3];
                    for slot in &mut p {
                        *slot =
                            next(&mut pos, "coordinate")?.parse().map_err(|e| format!("coordinate: {e}"))?;
                    }
                    snapshot.points.push(p);
                }
            }
            "CELLS" => {
                let n: usize = next(&mut pos, "cell count")?.parse().map_err(|e| format!("{e}"))?;
                let _list_len = next(&mut pos, "cell list length")?;
                snapshot.cells.reserve(n);
                for _ in 0..n {
                    let k: usize =
                        next(&mut pos, "cell size")?.parse().map_err(|e| format!("cell size: {e}"))?;
                    let mut cell = Vec::with_capacity(k);
                    for _ in 0..k {
                        cell.push(
                            next(&mut pos, "cell index")?.parse().map_err(|e| format!("index: {e}"))?,
                        );
                    }
                    snapshot.cells.push(cell);
                }
            }
            "CELL_TYPES" => {
                let n: usize = next(&mut pos, "type count")?.parse().map_err(|e| format!("{e}"))?;
                for _ in 0..n {
                    next(&mut pos, "cell type")?;
                }
            }
            "POINT_DATA" => {
                let n: usize = next(&mut pos, "point data count")?.parse().map_err(|e| format!("{e}"))?;
                if n != snapshot.points.len() {
                    return Err(format!(
                        "POINT_DATA count {n} does not match {} points",
                        snapshot.points.len()
                    ));
                }
            }
            "SCALARS" => {
                let name = next(&mut pos, "field name")?.to_string();
                let _dtype = next(&mut pos, "field type")?;
                let _comps = next(&mut pos, "component count")?;
                let lut = next(&mut pos, "lookup table keyword")?;
                if lut != "LOOKUP_TABLE" {
                    return Err(format!("expected LOOKUP_TABLE after SCALARS, got `{lut}`"));
                }
                let _table = next(&mut pos, "lookup table name")?;
                let mut values = Vec::with_capacity(snapshot.points.len());
                for _ in 0..snapshot.points.len() {
                    values.push(next(&mut pos, "value")?.parse().map_err(|e| format!("value: {e}"))?);
                }
                snapshot.fields.insert(name, values);
            }
            other => return Err(format!("unsupported keyword `{other}`")),
        }
    }
    Ok(snapshot)
}

/// Numbered snapshot files with a fixed prefix, in index order.
pub fn list_snapshots(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| artifact_err(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| artifact_err(format!("{}: {e}", dir.display())))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with(prefix) && name.ends_with(".vtk") {
            found.push(entry.path());
        }
    }
    found.sort();
    Ok(found)
}

// ---------------------------------------------------------------------------
// Run report

/// Wall-clock and work accounting for one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub mode: String,
    pub n_heart_vertices: usize,
    pub n_torso_vertices: usize,
    pub ep_steps: usize,
    pub snapshots: usize,
    pub torso_solves: usize,
    pub ep_solver_iterations: usize,
    pub torso_solver_iterations: usize,
    pub interface_max_distance_mm: f64,
    pub interface_mean_distance_mm: f64,
    pub setup_seconds: f64,
    pub ep_seconds: f64,
    pub interpolation_seconds: f64,
    pub torso_seconds: f64,
    /// Wall clock around the whole solve; the phases above are contained
    /// in it, so they sum to at most this (small timer overhead aside).
    pub total_seconds: f64,
}

impl RunReport {
    pub fn from_run(
        mode: &str,
        run: &CoupledRun,
        heart: &SimplicialMesh,
        torso: &SimplicialMesh,
        total_seconds: f64,
    ) -> Self {
        Self {
            mode: mode.to_string(),
            n_heart_vertices: heart.n_vertices(),
            n_torso_vertices: torso.n_vertices(),
            ep_steps: run.timeline.ep_steps,
            snapshots: run.timeline.times.len(),
            torso_solves: run.torso_solves,
            ep_solver_iterations: run.timeline.solver_iterations,
            torso_solver_iterations: run.torso_iterations,
            interface_max_distance_mm: run.interface_max_distance,
            interface_mean_distance_mm: run.interface_mean_distance,
            setup_seconds: run.timings.setup_s,
            ep_seconds: run.timings.ep_s,
            interpolation_seconds: run.timings.interpolation_s,
            torso_seconds: run.timings.torso_s,
            total_seconds,
        }
    }

    pub fn phase_sum(&self) -> f64 {
        self.setup_seconds + self.ep_seconds + self.interpolation_seconds + self.torso_seconds
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("setup_seconds", self.setup_seconds),
            ("ep_seconds", self.ep_seconds),
            ("interpolation_seconds", self.interpolation_seconds),
            ("torso_seconds", self.torso_seconds),
            ("total_seconds", self.total_seconds),
        ] {
            if !(v >= 0.0) {
                return Err(artifact_err(format!("report: {name} is negative ({v})")));
            }
        }
        if self.phase_sum() > self.total_seconds * 1.05 + 1e-9 {
            return Err(artifact_err(format!(
                "report: phases sum to {:.6}s but the run took {:.6}s",
                self.phase_sum(),
                self.total_seconds
            )));
        }
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| artifact_err(format!("{}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| artifact_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| artifact_err(format!("{}: {e}", path.display())))
}
