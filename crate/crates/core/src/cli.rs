//! Headless command line: `validate`, `snapshot`, `bench` and `run`.
//!
//! Exit codes: 0 success, 1 invalid input (unloadable or invalid system,
//! bad `--set`), 2 runtime failure or usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{bench, BenchOptions};
use crate::engine::{BackendKind, Selection, Simulation, SimulationConfig};
use crate::layout::Layout;
use crate::model::{load_system, SystemDefinition};
use crate::systems;

const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Parser, Debug)]
#[command(name = "swarm", version, about = "Integrate and inspect particle clouds of ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a system document.
    Validate { file: PathBuf },
    /// Integrate a system and write the final particle positions.
    Snapshot(SnapshotArgs),
    /// Time steps per backend and layout.
    Bench(BenchArgs),
    /// Launch the interactive viewer.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct SnapshotArgs {
    /// System document path or builtin:<name>.
    system: String,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    dt: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "cpu")]
    backend: BackendKind,
    /// Override a parameter: name=value. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    sets: Vec<String>,
    /// Resize the system to this many particles.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    reset_batch: Option<usize>,
    #[arg(long, default_value = "column")]
    layout: Layout,
}

#[derive(Args, Debug)]
struct BenchArgs {
    system: String,
    #[arg(long, default_value_t = 100_000)]
    particles: usize,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "cpu,gpu")]
    backends: Vec<BackendKind>,
    #[arg(long, value_delimiter = ',', default_value = "column")]
    layouts: Vec<Layout>,
    #[arg(long, default_value_t = 0.001)]
    dt: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    system: String,
    #[arg(long)]
    fps_cap: Option<u32>,
    #[arg(long)]
    steps_per_frame: Option<u32>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_file(path: &Path) -> Result<SystemDefinition, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    load_system(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn resolve(spec: &str) -> Result<SystemDefinition, Failure> {
    match spec.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => systems::builtin(name).map_err(|e| Failure::Invalid(e.to_string())),
        None => load_file(Path::new(spec)),
    }
}

fn parse_set(s: &str) -> Result<(String, f64), Failure> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| Failure::Invalid(format!("--set expects name=value, got '{s}'")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| Failure::Invalid(format!("--set {name}: '{value}' is not a number")))?;
    Ok((name.trim().to_string(), value))
}

fn validate(file: &Path) -> Result<(), Failure> {
    let def = load_file(file)?;
    println!(
        "ok: {} ({} state variables, {} parameters, {} particles)",
        def.name,
        def.dims(),
        def.parameters.len(),
        def.particle_count()
    );
    Ok(())
}

fn snapshot(a: &SnapshotArgs) -> Result<(), Failure> {
    let mut def = resolve(&a.system)?;
    if let Some(p) = a.particles {
        def = def.with_particle_count(p);
    }
    def.ensure_valid().map_err(|e| Failure::Invalid(e.to_string()))?;
    let sets = a.sets.iter().map(|s| parse_set(s)).collect::<Result<Vec<_>, _>>()?;
    let particles = def.particle_count();
    let config = SimulationConfig {
        step_size: a.dt,
        layout: a.layout,
        reset_batch: a.reset_batch.unwrap_or(particles.min(1024)),
        seed: a.seed,
    };
    config
        .validate(particles)
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut sim = Simulation::new(def, config, a.backend).map_err(runtime)?;
    for (name, value) in &sets {
        sim.set_parameter(name, *value)
            .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    sim.advance(a.steps).map_err(runtime)?;
    let snap = sim.read_back(Selection::All).map_err(runtime)?;
    let file = File::create(&a.out).map_err(|e| runtime(format!("{}: {e}", a.out.display())))?;
    let mut w = BufWriter::new(file);
    match a.format {
        Format::Csv => snap.write_csv(&mut w),
        Format::Bin => snap.write_binary(&mut w, a.layout),
    }
    .and_then(|_| w.flush())
    .map_err(runtime)?;
    eprintln!(
        "wrote {} particles after {} steps to {}",
        snap.len(),
        a.steps,
        a.out.display()
    );
    Ok(())
}

fn bench_cmd(a: &BenchArgs) -> Result<(), Failure> {
    let def = resolve(&a.system)?;
    let opts = BenchOptions {
        particles: a.particles,
        steps: a.steps,
        backends: a.backends.clone(),
        layouts: a.layouts.clone(),
        step_size: a.dt,
        seed: 0,
    };
    let report = bench(&def, &opts).map_err(|e| match e {
        crate::bench::BenchError::Engine(e) => runtime(e),
        other => Failure::Invalid(other.to_string()),
    })?;
    let json = report.to_json();
    println!("{}", report.to_table());
    println!("{json}");
    if let Some(path) = &a.json {
        std::fs::write(path, &json).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_cmd(a: &RunArgs) -> Result<(), Failure> {
    let def = resolve(&a.system)?;
    def.ensure_valid().map_err(|e| Failure::Invalid(e.to_string()))?;
    Err(Failure::Runtime(
        "the interactive viewer is not included in this build; use `snapshot` or the library examples"
            .into(),
    ))
}

/// Parse `argv` (including the program name) and execute. Returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Snapshot(a) => snapshot(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Run(a) => run_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}
