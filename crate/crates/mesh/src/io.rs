//! Plain-text mesh serialization.
//!
//! The format is line oriented. A header `mesh <dim> <nv> <nc> <nf>` is
//! followed by `nv` vertex lines `v x y [z]`, `nc` cell lines
//! `c i0 .. i<dim> region`, and `nf` facet lines `f i0 .. i<dim-1> label`.
//! Indices are 0-based. Blank lines and lines starting with `#` are ignored.
//! Coordinates are written with Rust's shortest-roundtrip float formatting,
//! so save followed by load reproduces the mesh bit for bit.

use crate::mesh::SimplicialMesh;
use crate::vec3::Vec3;
use crate::MeshError;
use std::fmt::Write as _;
use std::path::Path;

pub fn save_mesh(mesh: &SimplicialMesh, path: &Path) -> Result<(), MeshError> {
    let text = mesh_to_string(mesh);
    crate::io::atomic_write(path, text.as_bytes())?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<SimplicialMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    mesh_from_str(&text)
}

/// Write `bytes` to `path` via a temp file in the same directory followed by
/// an atomic rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
            std::process::id()
        )),
        None => Path::new(&format!(".atomic.tmp{}", std::process::id())).to_path_buf(),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub fn mesh_to_string(mesh: &SimplicialMesh) -> String {
    let dim = mesh.dim();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mesh {dim} {} {} {}",
        mesh.n_vertices(),
        mesh.n_cells(),
        mesh.n_facets()
    );
    for i in 0..mesh.n_vertices() {
        let p = mesh.vertex(i);
        if dim == 2 {
            let _ = writeln!(out, "v {} {}", p[0], p[1]);
        } else {
            let _ = writeln!(out, "v {} {} {}", p[0], p[1], p[2]);
        }
    }
    for c in 0..mesh.n_cells() {
        let _ = write!(out, "c");
        for &v in mesh.cell(c) {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out, " {}", mesh.cell_region(c));
    }
    for f in 0..mesh.n_facets() {
        let _ = write!(out, "f");
        for &v in mesh.facet(f) {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out, " {}", mesh.facet_label(f));
    }
    out
}

pub fn mesh_from_str(text: &str) -> Result<SimplicialMesh, MeshError> {
    let parse = |line: usize, what: &str, tok: &str| -> Result<f64, MeshError> {
        tok.parse::<f64>().map_err(|_| MeshError::Parse {
            line,
            msg: format!("bad {what} `{tok}`"),
        })
    };
    let parse_u = |line: usize, what: &str, tok: &str| -> Result<u32, MeshError> {
        tok.parse::<u32>().map_err(|_| MeshError::Parse {
            line,
            msg: format!("bad {what} `{tok}`"),
        })
    };
    let parse_i = |line: usize, what: &str, tok: &str| -> Result<i32, MeshError> {
        tok.parse::<i32>().map_err(|_| MeshError::Parse {
            line,
            msg: format!("bad {what} `{tok}`"),
        })
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or(MeshError::Parse { line: 0, msg: "empty file".into() })?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "mesh" {
        return Err(MeshError::Parse {
            line: hline,
            msg: "expected header `mesh <dim> <nv> <nc> <nf>`".into(),
        });
    }
    let dim = parse_u(hline, "dimension", h[1])? as usize;
    if dim != 2 && dim != 3 {
        return Err(MeshError::Parse { line: hline, msg: format!("dimension must be 2 or 3, got {dim}") });
    }
    let nv = parse_u(hline, "vertex count", h[2])? as usize;
    let nc = parse_u(hline, "cell count", h[3])? as usize;
    let nf = parse_u(hline, "facet count", h[4])? as usize;

    let mut vertices: Vec<Vec3> = Vec::with_capacity(nv);
    let mut cells: Vec<u32> = Vec::with_capacity(nc * (dim + 1));
    let mut regions: Vec<i32> = Vec::with_capacity(nc);
    let mut facets: Vec<u32> = Vec::with_capacity(nf * dim);
    let mut labels: Vec<i32> = Vec::with_capacity(nf);

    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or(MeshError::Parse { line: 0, msg: "file ends inside vertex block".into() })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != dim + 1 || t[0] != "v" {
            return Err(MeshError::Parse { line: ln, msg: format!("expected `v` with {dim} coordinates") });
        }
        let x = parse(ln, "coordinate", t[1])?;
        let y = parse(ln, "coordinate", t[2])?;
        let z = if dim == 3 { parse(ln, "coordinate", t[3])? } else { 0.0 };
        vertices.push([x, y, z]);
    }
    for _ in 0..nc {
        let (ln, l) = lines
            .next()
            .ok_or(MeshError::Parse { line: 0, msg: "file ends inside cell block".into() })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != dim + 3 || t[0] != "c" {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("expected `c` with {} vertex indices and a region", dim + 1),
            });
        }
        for tok in &t[1..=dim + 1] {
            cells.push(parse_u(ln, "vertex index", tok)?);
        }
        regions.push(parse_i(ln, "region", t[dim + 2])?);
    }
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or(MeshError::Parse { line: 0, msg: "file ends inside facet block".into() })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != dim + 2 || t[0] != "f" {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("expected `f` with {dim} vertex indices and a label"),
            });
        }
        for tok in &t[1..=dim] {
            facets.push(parse_u(ln, "vertex index", tok)?);
        }
        labels.push(parse_i(ln, "label", t[dim + 1])?);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(MeshError::Parse { line: ln, msg: "trailing content after facet block".into() });
    }

    SimplicialMesh::new(dim, vertices, cells, regions, facets, labels)
}
