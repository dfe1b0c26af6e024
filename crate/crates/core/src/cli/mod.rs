//! The `stfem` command line: `run`, `sweep`, `check` and `export-mesh`.
//!
//! Exit codes: 0 success, 1 failed self-check or internal error, 2 invalid
//! arguments or configuration, 3 unknown problem, 4 output not writable,
//! 5 solver failure.

mod check;
mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use check::{run_checks, CheckOutcome};
pub use config::{resolve, FileConfig, Resolved};

use crate::driver::{
    builtin_problem, custom_problem, run_study_on, write_csv, write_json_summary, write_level_vtk,
    Study, StudyConfig,
};
use crate::error::Error;
use crate::linalg::{write_matrix_market, write_vector_market, PreconditionerKind};
use crate::mesh::{read_stmesh, write_stmesh, write_vtk, SpaceTimeMesh};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNKNOWN_PROBLEM: i32 = 3;
pub const EXIT_OUTPUT: i32 = 4;
pub const EXIT_SOLVER: i32 = 5;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "STFEM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "stfem",
    version,
    about = "Stabilized space-time finite elements for the heat equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one convergence study and write its reports.
    Run(StudyArgs),
    /// Run one study per (degree, sigma) pair.
    Sweep(SweepArgs),
    /// Run the built-in invariant self-tests.
    Check {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Write a box mesh, optionally refined, as stmesh or VTK.
    ExportMesh(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// Key = value file with defaults for any of the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// smooth, oscillatory, peak or custom.
    #[arg(long)]
    pub problem: Option<String>,
    /// Spatial dimension (1 or 2).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Polynomial degree (1 or 2).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Marking threshold in [0, 1]; 0 refines uniformly. Use 0.5 for adaptive runs.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub max_dofs: Option<usize>,
    /// Cells per axis of the initial box mesh.
    #[arg(long)]
    pub initial_n: Option<usize>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    #[arg(long)]
    pub final_time: Option<f64>,
    /// Stop once the energy error is at or below this value.
    #[arg(long)]
    pub target_error: Option<f64>,
    /// Relative residual tolerance [default: 1e-8].
    #[arg(long)]
    pub rtol: Option<f64>,
    /// GMRES restart length [default: 50].
    #[arg(long)]
    pub restart: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum)]
    pub preconditioner: Option<PreconditionerKind>,
    /// Multiplier on the stabilization parameter.
    #[arg(long)]
    pub theta_scale: Option<f64>,
    /// Initial mesh in stmesh format (custom problem only).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Constant diffusion coefficient (custom problem only).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Constant source term (custom problem only).
    #[arg(long, allow_negative_numbers = true)]
    pub source: Option<f64>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write a VTK file per level.
    #[arg(long)]
    pub vtk: bool,
    /// Write each level's matrix and right-hand side in MatrixMarket format.
    #[arg(long)]
    pub dump_matrix: bool,
    /// Suppress the per-level table.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub degrees: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5")]
    pub sigmas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshFormat {
    Stmesh,
    Vtk,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Cells per axis.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub final_time: f64,
    /// Rounds of uniform bisection.
    #[arg(long, default_value_t = 0)]
    pub uniform: usize,
    /// Rounds of bisection on randomly chosen elements.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Output format; taken from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<MeshFormat>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    UnknownProblem(String),
    Output(PathBuf, std::io::Error),
    Solver(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::UnknownProblem(_) => EXIT_UNKNOWN_PROBLEM,
            Self::Output(..) => EXIT_OUTPUT,
            Self::Solver(_) => EXIT_SOLVER,
            Self::Failed(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "invalid configuration: {m}"),
            Self::UnknownProblem(name) => write!(
                f,
                "unknown problem `{name}`; choose one of {}",
                crate::driver::BUILTIN_PROBLEMS.join(", ")
            ),
            Self::Output(p, e) => write!(f, "cannot write {}: {e}", p.display()),
            Self::Solver(m) => write!(f, "{m}"),
            Self::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownProblem(name) => Self::UnknownProblem(name),
            Error::SolverDiverged { .. } => Self::Solver(e.to_string()),
            Error::InvalidArgument(_)
            | Error::UnsupportedDimension(_)
            | Error::UnsupportedOrder { .. }
            | Error::Parse { .. }
            | Error::DimensionMismatch { .. }
            | Error::MissingExactSolution => Self::Usage(e.to_string()),
            other => Self::Failed(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.code();
    }
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Check { seed } => cmd_check(*seed),
        Command::ExportMesh(args) => cmd_export(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_VAR} must be a positive integer, got `{value}`"
            ))
        })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn load_resolved(args: &StudyArgs) -> CliResult<Resolved> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path).map_err(|e| match e {
            Error::Io(io) => CliError::Usage(format!("cannot read {}: {io}", path.display())),
            other => CliError::Usage(format!("{}: {other}", path.display())),
        })?,
        None => FileConfig::default(),
    };
    Ok(resolve(args, &file)?)
}

fn prepare_output_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(dir.to_path_buf(), e))?;
    let probe = dir.join(".stfem-write-test");
    File::create(&probe).map_err(|e| CliError::Output(dir.to_path_buf(), e))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(path.to_path_buf(), e))
}

fn output_error(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match e {
        Error::Io(io) => CliError::Output(path.to_path_buf(), io),
        other => other.into(),
    }
}

fn execute_study(resolved: &Resolved, quiet: bool, label: &str) -> CliResult<Study> {
    let cfg = &resolved.study;
    let dir = &resolved.out;
    prepare_output_dir(dir)?;

    let (problem, mesh) = if cfg.problem == "custom" {
        let mesh = match &resolved.mesh {
            Some(path) => {
                let f = File::open(path).map_err(|e| {
                    CliError::Usage(format!("cannot open mesh {}: {e}", path.display()))
                })?;
                read_stmesh(std::io::BufReader::new(f))?
            }
            None => SpaceTimeMesh::build_box_mesh(cfg.dim, cfg.initial_n, cfg.final_time)?,
        };
        if mesh.spatial_dim() != cfg.dim {
            return Err(CliError::Usage(format!(
                "mesh has spatial dimension {} but --dim is {}",
                mesh.spatial_dim(),
                cfg.dim
            )));
        }
        let problem = custom_problem(cfg.dim, mesh.final_time(), resolved.nu, resolved.source)?;
        (problem, mesh)
    } else {
        let problem = builtin_problem(&cfg.problem, cfg.dim)?;
        let mesh = SpaceTimeMesh::build_box_mesh(cfg.dim, cfg.initial_n, cfg.final_time)?;
        (problem, mesh)
    };

    if !quiet {
        println!(
            "{label}problem={} d={} p={} sigma={} max_dofs={}",
            cfg.problem, cfg.dim, cfg.degree, cfg.sigma, cfg.max_dofs
        );
        println!(
            "{:>5} {:>9} {:>13} {:>13} {:>7} {:>7} {:>8}",
            "level", "dofs", "energy", "eta", "rate", "iters", "seconds"
        );
    }
    let study = run_study_on(&problem, mesh, cfg, |view| {
        let r = view.record;
        if !quiet {
            println!(
                "{:>5} {:>9} {:>13} {:>13.5e} {:>7} {:>7} {:>8.2}",
                r.level,
                r.dofs,
                r.energy_error
                    .map(|e| format!("{e:.5e}"))
                    .unwrap_or_else(|| "-".into()),
                r.eta_total,
                r.rate_dofs.map(|x| format!("{x:.3}")).unwrap_or_default(),
                r.iterations,
                r.assemble_s + r.solve_s + r.estimate_s
            );
        }
        if resolved.vtk {
            let path = dir.join(format!("level_{:03}.vtk", view.level));
            let out = File::create(&path)?;
            write_level_vtk(view, BufWriter::new(out))?;
        }
        if resolved.dump_matrix {
            let mtx = dir.join(format!("matrix_{:03}.mtx", view.level));
            write_matrix_market(&view.system.matrix, BufWriter::new(File::create(mtx)?))?;
            let rhs = dir.join(format!("rhs_{:03}.mtx", view.level));
            write_vector_market(&view.system.rhs, BufWriter::new(File::create(rhs)?))?;
        }
        Ok(())
    })
    .map_err(output_error(dir))?;

    let csv = dir.join("study.csv");
    let mut w = create(&csv)?;
    write_csv(&study.records, &mut w).map_err(output_error(&csv))?;
    w.flush().map_err(|e| CliError::Output(csv.clone(), e))?;
    let json = dir.join("summary.json");
    let mut w = create(&json)?;
    write_json_summary(cfg, &study, &mut w).map_err(output_error(&json))?;
    w.flush().map_err(|e| CliError::Output(json.clone(), e))?;

    if !quiet {
        if let Some(rate) = study.fitted_rate(3.min(study.records.len()), cfg.dim) {
            println!("rate over the last levels: {rate:.3}");
        }
        if !study.homogeneous_data {
            println!("note: boundary and initial values taken from the exact solution");
        }
        println!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(study)
}

fn finish(study: &Study) -> CliResult<()> {
    match &study.aborted {
        Some(msg) => Err(CliError::Solver(msg.clone())),
        None => Ok(()),
    }
}

fn cmd_run(args: &StudyArgs) -> CliResult<()> {
    let resolved = load_resolved(args)?;
    let study = execute_study(&resolved, args.quiet, "")?;
    finish(&study)
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let base = load_resolved(&args.study)?;
    if args.degrees.is_empty() || args.sigmas.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one degree and one sigma".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &degree in &args.degrees {
        for &sigma in &args.sigmas {
            let study = StudyConfig {
                degree,
                sigma,
                ..base.study.clone()
            };
            study.validate()?;
            let out = base.out.join(format!("p{degree}_sigma{sigma}"));
            jobs.push(Resolved {
                study,
                out,
                ..base.clone()
            });
        }
    }
    // the per-level table would interleave, so sweeps print one line per study
    let results: Vec<CliResult<Study>> = jobs
        .par_iter()
        .map(|job| execute_study(job, true, ""))
        .collect();
    let mut first_error = None;
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(study) => {
                let last = study.records.last();
                println!(
                    "p={} sigma={}: {} levels, final dofs {}, final energy error {}, rate {}{}",
                    job.study.degree,
                    job.study.sigma,
                    study.records.len(),
                    last.map(|r| r.dofs).unwrap_or(0),
                    last.and_then(|r| r.energy_error)
                        .map(|e| format!("{e:.4e}"))
                        .unwrap_or_else(|| "-".into()),
                    study
                        .fitted_rate(3.min(study.records.len()), job.study.dim)
                        .map(|r| format!("{r:.3}"))
                        .unwrap_or_else(|| "-".into()),
                    if study.aborted.is_some() {
                        " (aborted)"
                    } else {
                        ""
                    }
                );
                if let Err(e) = finish(&study) {
                    first_error.get_or_insert(e);
                }
            }
            Err(e) => {
                eprintln!("p={} sigma={}: {e}", job.study.degree, job.study.sigma);
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_check(seed: u64) -> CliResult<()> {
    let outcomes = run_checks(seed);
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    for c in &outcomes {
        println!(
            "{} {:<36} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} of {} checks failed",
            outcomes.len()
        )));
    }
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> CliResult<()> {
    let mut mesh = SpaceTimeMesh::build_box_mesh(args.dim, args.n, args.final_time)?;
    for _ in 0..args.uniform {
        let all: Vec<usize> = (0..mesh.n_elements()).collect();
        mesh = mesh.refine(&all)?.mesh;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for _ in 0..args.random {
        let n = mesh.n_elements();
        let count = rng.gen_range(1..=n.div_ceil(4));
        let marked = sample(&mut rng, n, count).into_vec();
        mesh = mesh.refine(&marked)?.mesh;
    }
    let format =
        args.format
            .unwrap_or_else(|| match args.output.extension().and_then(|e| e.to_str()) {
                Some("vtk") => MeshFormat::Vtk,
                _ => MeshFormat::Stmesh,
            });
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Output(parent.to_path_buf(), e))?;
    }
    let mut w = create(&args.output)?;
    match format {
        MeshFormat::Stmesh => write_stmesh(&mesh, &mut w),
        MeshFormat::Vtk => write_vtk(&mesh, &[], &[], &mut w),
    }
    .map_err(output_error(&args.output))?;
    w.flush()
        .map_err(|e| CliError::Output(args.output.clone(), e))?;
    println!(
        "wrote {} ({} vertices, {} elements)",
        args.output.display(),
        mesh.n_vertices(),
        mesh.n_elements()
    );
    Ok(())
}
