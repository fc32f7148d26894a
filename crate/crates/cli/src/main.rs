use std::path::PathBuf;
use std::process::ExitCode;

use cardiowave_cli::commands::{
    compare_dirs, genmesh, render_compare_table, render_sweep_table, simulate, sweep,
};
use cardiowave_cli::config::{read_experiment, read_sweep, GeometrySpecConfig};
use cardiowave_cli::CliError;
use clap::{Args, Parser, Subcommand};

/// Heart-torso electrophysiology simulator: 12-lead ECGs and body-surface
/// potential maps from finite-element heart and torso meshes.
#[derive(Parser)]
#[command(name = "cardiowave", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an idealized heart/torso mesh pair.
    Genmesh(GenmeshArgs),
    /// Run one experiment from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the trace and surface-map artifacts of two run directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Also write the metrics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a reference experiment plus variants and tabulate the errors.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct GenmeshArgs {
    /// Directory receiving heart.mesh and torso.mesh.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    dim: Option<usize>,
    /// Torso box half-widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    half_widths: Option<Vec<f64>>,
    /// Heart center, comma separated.
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    h_heart: Option<f64>,
    /// Torso mesh size at the interface.
    #[arg(long)]
    h_interface: Option<f64>,
    /// Torso mesh size at the exterior boundary.
    #[arg(long)]
    h_exterior: Option<f64>,
    /// Resample the torso side of the interface instead of reusing the
    /// heart boundary nodes.
    #[arg(long)]
    nonconforming: bool,
}

impl GenmeshArgs {
    fn to_spec(&self) -> Result<GeometrySpecConfig, CliError> {
        let mut spec = GeometrySpecConfig::default();
        if let Some(d) = self.dim {
            spec.dim = d;
        }
        if let Some(hw) = &self.half_widths {
            spec.torso_half_widths = fill3("--half-widths", hw)?;
        }
        if let Some(c) = &self.center {
            spec.heart_center = fill3("--center", c)?;
        }
        if let Some(r) = self.radius {
            spec.heart_radius = r;
        }
        if let Some(h) = self.h_heart {
            spec.h_heart = h;
        }
        if let Some(h) = self.h_interface {
            spec.h_torso_interface = h;
        }
        if let Some(h) = self.h_exterior {
            spec.h_torso_exterior = h;
        }
        if self.nonconforming {
            spec.conforming = false;
        }
        Ok(spec)
    }
}

fn fill3(flag: &str, values: &[f64]) -> Result<[f64; 3], CliError> {
    if values.is_empty() || values.len() > 3 {
        return Err(CliError::Config(format!(
            "{flag}: expected 1 to 3 comma-separated numbers, got {}",
            values.len()
        )));
    }
    let mut out = [0.0; 3];
    out[..values.len()].copy_from_slice(values);
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Genmesh(args) => {
            let spec = args.to_spec()?;
            let out = genmesh(&spec, &args.out_dir)?;
            println!(
                "heart: {} vertices, {} cells -> {}",
                out.heart_vertices,
                out.heart_cells,
                out.heart_path.display()
            );
            println!(
                "torso: {} vertices, {} cells -> {}",
                out.torso_vertices,
                out.torso_cells,
                out.torso_path.display()
            );
        }
        Command::Simulate { config } => {
            let cfg = read_experiment(&config)?;
            let out = simulate(&cfg)?;
            let r = &out.report;
            println!(
                "{}: {} heart + {} torso vertices, {} steps, {} snapshots",
                r.mode, r.n_heart_vertices, r.n_torso_vertices, r.ep_steps, r.snapshots
            );
            println!(
                "phases: setup {:.2}s, heart {:.2}s, interface {:.2}s, torso {:.2}s \
                 (total {:.2}s)",
                r.setup_seconds,
                r.ep_seconds,
                r.interpolation_seconds,
                r.torso_seconds,
                r.total_seconds
            );
            println!("artifacts in {}", out.output_dir.display());
        }
        Command::Compare { dir_a, dir_b, out } => {
            let outcome = compare_dirs(&dir_a, &dir_b)?;
            print!("{}", render_compare_table(&outcome));
            if let Some(path) = out {
                cardiowave_cli::artifacts::write_json(&path, &outcome)?;
                println!("metrics written to {}", path.display());
            }
        }
        Command::Sweep { config } => {
            let cfg = read_sweep(&config)?;
            let outcome = sweep(&cfg)?;
            print!("{}", render_sweep_table(&outcome.report));
            println!("report written to {}", outcome.report_path.display());
        }
    }
    Ok(())
}
