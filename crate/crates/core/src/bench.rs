//! Step-time benchmark across backends and memory layouts.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{create_backend, init_particles, BackendKind, EngineError, Simulation, SimulationConfig};
use crate::layout::Layout;
use crate::model::SystemDefinition;

pub const MIN_TIMED_STEPS: usize = 100;
pub const WARMUP_STEPS: usize = 10;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least {MIN_TIMED_STEPS} timed steps are required, got {0}")]
    TooFewSteps(usize),
    #[error("particle count must be at least 1")]
    NoParticles,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub particles: usize,
    pub steps: usize,
    pub backends: Vec<BackendKind>,
    pub layouts: Vec<Layout>,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            particles: 100_000,
            steps: 1000,
            backends: vec![BackendKind::Cpu, BackendKind::Gpu],
            layouts: vec![Layout::ColumnMajor],
            step_size: 0.001,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ok { mean_ms: f64, std_ms: f64 },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub system: String,
    pub particles: usize,
    pub backend: String,
    pub layout: String,
    pub device: Option<String>,
    pub steps: usize,
    pub warmup: usize,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub devices: Vec<String>,
    pub precision: String,
    pub cpu_threads: usize,
    pub os: String,
    pub arch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub environment: Environment,
}

/// Sample mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn time_one(
    def: &SystemDefinition,
    kind: BackendKind,
    layout: Layout,
    opts: &BenchOptions,
) -> Result<(String, Vec<f64>), EngineError> {
    let config = SimulationConfig {
        step_size: opts.step_size,
        layout,
        reset_batch: 1,
        seed: opts.seed,
    };
    let state = init_particles(def, &config)?;
    let backend = create_backend(kind, def, layout, state.particles)?;
    let mut sim = Simulation::with_backend(def.clone(), config, state, backend)?;
    let device = sim.device_name();
    for _ in 0..WARMUP_STEPS {
        sim.step()?;
    }
    sim.synchronize()?;
    let mut samples = Vec::with_capacity(opts.steps);
    for _ in 0..opts.steps {
        let t = Instant::now();
        sim.step()?;
        sim.synchronize()?;
        samples.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok((device, samples))
}

/// Time `opts.steps` steps of `def` resized to `opts.particles`, for every
/// backend and layout. Unavailable backends produce skipped rows.
pub fn bench(def: &SystemDefinition, opts: &BenchOptions) -> Result<BenchReport, BenchError> {
    if opts.steps < MIN_TIMED_STEPS {
        return Err(BenchError::TooFewSteps(opts.steps));
    }
    if opts.particles == 0 {
        return Err(BenchError::NoParticles);
    }
    let def = def.clone().with_particle_count(opts.particles);
    def.ensure_valid().map_err(EngineError::from)?;

    let mut rows = Vec::new();
    let mut devices: Vec<String> = Vec::new();
    for &kind in &opts.backends {
        for &layout in &opts.layouts {
            let (device, outcome) = match time_one(&def, kind, layout, opts) {
                Ok((device, samples)) => {
                    let (mean_ms, std_ms) = mean_std(&samples);
                    (Some(device), Outcome::Ok { mean_ms, std_ms })
                }
                Err(EngineError::BackendUnavailable(reason)) => {
                    (None, Outcome::Skipped { reason })
                }
                Err(e) => return Err(e.into()),
            };
            if let Some(d) = &device {
                if !devices.contains(d) {
                    devices.push(d.clone());
                }
            }
            rows.push(BenchRow {
                system: def.name.clone(),
                particles: opts.particles,
                backend: kind.id().to_string(),
                layout: layout.name().to_string(),
                device,
                steps: opts.steps,
                warmup: WARMUP_STEPS,
                outcome,
            });
        }
    }
    rows.sort_by(|a, b| (&a.system, &a.backend).cmp(&(&b.system, &b.backend)));
    Ok(BenchReport {
        rows,
        environment: Environment {
            devices,
            precision: "f32".into(),
            cpu_threads: rayon::current_num_threads(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        },
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table followed by the environment block.
    pub fn to_table(&self) -> String {
        let header = ["system", "particles", "backend", "layout", "mean ms/step", "std ms", "note"];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let (mean, std, note) = match &r.outcome {
                Outcome::Ok { mean_ms, std_ms } => {
                    (format!("{mean_ms:.3}"), format!("{std_ms:.3}"), String::new())
                }
                Outcome::Skipped { reason } => {
                    // first clause only; the JSON report keeps the full text
                    let short = reason.split(';').next().unwrap_or(reason);
                    ("-".into(), "-".into(), format!("skipped: {short}"))
                }
            };
            cells.push(vec![
                r.system.clone(),
                r.particles.to_string(),
                r.backend.clone(),
                r.layout.clone(),
                mean,
                std,
                note,
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| {
                    // numbers right-aligned, text left-aligned
                    if matches!(c, 1 | 4 | 5) {
                        format!("{s:>w$}")
                    } else {
                        format!("{s:<w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                // the free-text note column does not stretch the rule
                let last = header.len() - 1;
                let total: usize =
                    widths[..last].iter().sum::<usize>() + header[last].len() + 2 * last;
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out.push('\n');
        out.push_str(&format!("precision: {}\n", self.environment.precision));
        out.push_str(&format!(
            "host: {} {} ({} threads)\n",
            self.environment.os, self.environment.arch, self.environment.cpu_threads
        ));
        for d in &self.environment.devices {
            out.push_str(&format!("device: {d}\n"));
        }
        out
    }
}
