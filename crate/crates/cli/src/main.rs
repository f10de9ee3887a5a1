//! `gosr`: build, project, verify and export renewable operating regions.

use clap::{Args, Parser, Subcommand};
use gosr::method::{MethodError, MethodRegistry};
use gosr::projector::{PhgConfig, Polytope, ProjectorError, Provenance, RunStatus};
use gosr::region::{
    build_linear_region, parse_case_json, parse_matpower_subset, BuildOptions, LinearRegion, RegSpec, RegionError,
};
use gosr::verify::{
    classify_samples, enumerate_vertices_2d3d, fme_project, regions_equivalent, samples_csv, vertices_csv, VerifyError,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    /// Bad input: unreadable file, parse or validation failure, dimension mismatch.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    SizeGuard(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::SizeGuard(_) => 4,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::Lp(_) => CliError::Failed(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::SizeGuardExceeded { .. } => CliError::SizeGuard(e.to_string()),
            VerifyError::Dimension(_) | VerifyError::Region(RegionError::Validation(_)) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<MethodError> for CliError {
    fn from(e: MethodError) -> Self {
        match e {
            MethodError::Unknown { .. } | MethodError::Projector(ProjectorError::Dimension(_)) => {
                CliError::Input(e.to_string())
            }
            MethodError::Verify(v) => v.into(),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "gosr", version, about = "Exact operating regions of renewable generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the linearized region of a network case.
    Build {
        /// Case file: `.m` (MATPOWER subset) or `.json`.
        case: PathBuf,
        /// Comma-separated bus ids hosting renewable generation.
        #[arg(long, value_delimiter = ',', required = true)]
        reg: Vec<usize>,
        /// Capacity per bus in per-unit, one value for all or one per bus.
        #[arg(long, value_delimiter = ',', required = true)]
        wmax: Vec<f64>,
        /// Add generator ramp limits around the last dispatch.
        #[arg(long)]
        ramp: bool,
        /// Also limit flows in the to→from direction.
        #[arg(long)]
        reverse_flow: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Project a region onto its renewable outputs.
    Project {
        region: PathBuf,
        /// Projection method; see `--method list`.
        #[arg(long, default_value = "phg")]
        method: String,
        /// Maximum tolerated angle between facets, in degrees.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Sample the capacity box and compare the polytope with the region.
    Verify {
        region: PathBuf,
        polytope: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        out: OutDir,
    },
    /// Project by Fourier–Motzkin elimination, optionally comparing with a polytope.
    Fme {
        region: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Write vertices and classified samples of a 2-D or 3-D polytope.
    PlotData {
        polytope: PathBuf,
        region: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct OutDir {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl OutDir {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Failed(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Input(format!("{}: no such file", path.display())),
        _ => CliError::Input(format!("{}: {e}", path.display())),
    })
}

fn read_region(path: &Path) -> Result<LinearRegion, CliError> {
    LinearRegion::from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_polytope(path: &Path) -> Result<Polytope, CliError> {
    Polytope::from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_build(case: &Path, reg: Vec<usize>, wmax: Vec<f64>, opts: BuildOptions, out: &OutDir) -> Result<(), CliError> {
    let text = read(case)?;
    let parsed = match case.extension().and_then(|e| e.to_str()) {
        Some("m") => {
            let (c, warnings) = parse_matpower_subset(&text)?;
            warnings.iter().for_each(|w| log::warn!("{w}"));
            c
        }
        Some("json") => parse_case_json(&text)?,
        _ => return Err(CliError::Input(format!("{}: expected a .m or .json case file", case.display()))),
    };
    let spec = match wmax.as_slice() {
        [w] => RegSpec::uniform(reg, *w),
        _ => RegSpec::new(reg, wmax),
    };
    let region = build_linear_region(&parsed, &spec, opts)?;
    let path = out.write("region.json", &region.to_json())?;
    println!(
        "region: {} w + {} x variables, {} equalities, {} inequalities -> {}",
        region.n_w,
        region.n_x,
        region.eq_block.len(),
        region.ineq_block.len(),
        path.display()
    );
    Ok(())
}

/// Returns whether the run finished before the iteration cap.
fn cmd_project(region: &Path, method: &str, config: PhgConfig, out: &OutDir) -> Result<bool, CliError> {
    let registry = MethodRegistry::default();
    if method == "list" {
        for name in registry.names() {
            println!("{name}: {}", registry.get(name)?.description());
        }
        return Ok(true);
    }
    let m = registry.get(method)?;
    config.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let region = read_region(region)?;
    let start = Instant::now();
    let polytope = m.project(&region, &config)?;
    let elapsed = start.elapsed();
    let path = out.write("polytope.json", &polytope.to_json())?;
    let stats = polytope.stats.clone().unwrap_or_default();
    println!(
        "facets: {} ({} box, {} discovered), {} LP solves, {:.3}s -> {}",
        polytope.facets.len(),
        polytope.count(Provenance::InitialBox),
        polytope.count(Provenance::Discovered),
        stats.lp_solves,
        elapsed.as_secs_f64(),
        path.display()
    );
    if stats.status == RunStatus::IterationCap {
        eprintln!("warning: iteration cap {} reached; the polytope is partial", config.max_iterations);
        return Ok(false);
    }
    Ok(true)
}

fn cmd_verify(region: &Path, polytope: &Path, s: &Sampling, out: &OutDir) -> Result<(), CliError> {
    let region = read_region(region)?;
    let polytope = read_polytope(polytope)?;
    let (classes, report) = classify_samples(&region, &polytope, s.samples, s.seed)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    out.write("report.json", &json)?;
    out.write("samples.csv", &samples_csv(&classes, polytope.dimension))?;
    match report.e_r {
        Some(e) => println!("E_r = {e}% ({} of {} samples inside the polytope agree)", report.n_sa, report.n_sr),
        None => println!("E_r undefined: no samples inside the polytope"),
    }
    Ok(())
}

fn cmd_fme(region: &Path, compare: Option<&Path>, out: &OutDir) -> Result<(), CliError> {
    let region = read_region(region)?;
    let other = compare.map(read_polytope).transpose()?;
    let oracle = fme_project(&region)?;
    let path = out.write("fme_polytope.json", &oracle.to_json())?;
    println!(
        "facets: {} ({} discovered) -> {}",
        oracle.facets.len(),
        oracle.count(Provenance::Discovered),
        path.display()
    );
    if let Some(p) = other {
        let eq = regions_equivalent(&oracle, &p, 1e-6)?;
        let verdict = if eq.equal { "equal" } else { "not equal" };
        println!("{verdict}, max_violation {:e}", eq.max_violation);
    }
    Ok(())
}

fn cmd_plot_data(polytope: &Path, region: &Path, s: &Sampling, out: &OutDir) -> Result<(), CliError> {
    let polytope = read_polytope(polytope)?;
    let region = read_region(region)?;
    let verts = enumerate_vertices_2d3d(&polytope)?;
    out.write("vertices.csv", &vertices_csv(&verts, polytope.dimension))?;
    let (classes, _) = classify_samples(&region, &polytope, s.samples, s.seed)?;
    out.write("samples.csv", &samples_csv(&classes, polytope.dimension))?;
    println!("{} vertices, {} samples -> {}", verts.len(), classes.len(), out.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Build { case, reg, wmax, ramp, reverse_flow, out } => {
            cmd_build(&case, reg, wmax, BuildOptions { ramp, reverse_flow }, &out)?
        }
        Command::Project { region, method, phi, eps, seed, max_iterations, out } => {
            let config = PhgConfig { phi_deg: phi, eps, seed, max_iterations, ..PhgConfig::default() };
            if !cmd_project(&region, &method, config, &out)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Verify { region, polytope, sampling, out } => cmd_verify(&region, &polytope, &sampling, &out)?,
        Command::Fme { region, compare, out } => cmd_fme(&region, compare.as_deref(), &out)?,
        Command::PlotData { polytope, region, sampling, out } => cmd_plot_data(&polytope, &region, &sampling, &out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
