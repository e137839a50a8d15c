//! Particle state and the simulation loop body.
//!
//! A [`Simulation`] owns one backend holding the position buffer, the
//! host-side bookkeeping (group ids, ages, reset epochs) and a command queue
//! through which other threads can change parameters. The owner calls
//! [`Simulation::step`] and [`Simulation::scan_and_reset`] once per frame.

mod backend;
pub mod cpu;
#[cfg(feature = "gpu")]
pub mod gpu;
mod reference;
pub mod sampler;
pub mod snapshot;

use std::ops::Range;
use std::str::FromStr;
use std::sync::mpsc;

use thiserror::Error;

pub use backend::{Backend, Dispatch};
pub use cpu::CpuBackend;
pub use reference::{rk4_step_reference, ReferenceSystem};
pub use snapshot::{read_binary, BinarySnapshot, Snapshot};

use crate::expr::program::{Program, Slot};
use crate::expr::{CodegenError, EvalError};
use crate::layout::Layout;
use crate::model::{Interval, ModelError, SystemDefinition};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("value {value} for parameter '{name}' is outside [{min}, {max}]")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("selection {start}..{end} exceeds {particles} particles")]
    Selection {
        start: usize,
        end: usize,
        particles: usize,
    },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("device error: {0}")]
    Device(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Step magnitude; each group applies its own sign.
    pub step_size: f64,
    pub layout: Layout,
    /// Particles examined per [`Simulation::scan_and_reset`] call.
    pub reset_batch: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            step_size: 0.01,
            layout: Layout::ColumnMajor,
            reset_batch: 1024,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self, particles: usize) -> Result<(), EngineError> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(EngineError::Config(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if particles == 0 {
            return Err(EngineError::Config("system has no particles".into()));
        }
        if self.reset_batch == 0 || self.reset_batch > particles {
            return Err(EngineError::Config(format!(
                "reset batch must be in 1..={particles}, got {}",
                self.reset_batch
            )));
        }
        Ok(())
    }
}

/// Host-side particle state. `positions` is laid out per `layout`; ages are
/// measured against a shared clock so a step touches no per-particle data on
/// the host.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub layout: Layout,
    pub particles: usize,
    pub dims: usize,
    pub positions: Vec<f32>,
    pub group_ids: Vec<u32>,
    pub born_at: Vec<f64>,
    pub epochs: Vec<u32>,
    pub clock: f64,
    pub rng_seed: u64,
}

impl ParticleState {
    pub fn age(&self, particle: usize) -> f64 {
        self.clock - self.born_at[particle]
    }

    pub fn ages(&self) -> Vec<f64> {
        (0..self.particles).map(|p| self.age(p)).collect()
    }
}

/// Initial-condition cube of every group, in state-variable order.
fn ic_boxes(def: &SystemDefinition) -> Vec<Vec<Interval>> {
    def.groups
        .iter()
        .map(|g| {
            def.state_variables
                .iter()
                .map(|v| g.ic.get(&v.name).copied().unwrap_or(v.bounds))
                .collect()
        })
        .collect()
}

/// Sample every particle uniformly from its group's initial-condition cube.
pub fn init_particles(
    def: &SystemDefinition,
    config: &SimulationConfig,
) -> Result<ParticleState, EngineError> {
    def.ensure_valid()?;
    let particles = def.particle_count();
    config.validate(particles)?;
    let n = def.dims();
    let boxes = ic_boxes(def);
    let mut positions = vec![0.0f32; particles * n];
    let mut group_ids = Vec::with_capacity(particles);
    let mut row = vec![0.0f32; n];
    for (g, group) in def.groups.iter().enumerate() {
        for _ in 0..group.count {
            let p = group_ids.len();
            sampler::sample_point(config.seed, p as u64, 0, &boxes[g], &mut row);
            for (d, v) in row.iter().enumerate() {
                positions[config.layout.index(p, d, particles, n)] = *v;
            }
            group_ids.push(g as u32);
        }
    }
    Ok(ParticleState {
        layout: config.layout,
        particles,
        dims: n,
        positions,
        group_ids,
        born_at: vec![0.0; particles],
        epochs: vec![0; particles],
        clock: 0.0,
        rng_seed: config.seed,
    })
}

/// Compile the derivative of `def` for the CPU backend.
pub fn compile_program(def: &SystemDefinition) -> Result<Program, EngineError> {
    let rhs = def.parsed_rhs()?;
    Program::compile(&rhs, def.parameters.len(), |name| {
        def.state_index(name)
            .map(Slot::State)
            .or_else(|| def.param_index(name).map(Slot::Param))
    })
    .map_err(|e| CodegenError::UnknownIdentifier(e.0).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    /// All cores via rayon.
    Cpu,
    /// One CPU thread.
    CpuSingle,
    Gpu,
}

impl BackendKind {
    pub fn id(self) -> &'static str {
        match self {
            BackendKind::Cpu => "cpu",
            BackendKind::CpuSingle => "cpu1",
            BackendKind::Gpu => "gpu",
        }
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cpu" => Ok(BackendKind::Cpu),
            "cpu1" => Ok(BackendKind::CpuSingle),
            "gpu" => Ok(BackendKind::Gpu),
            other => Err(format!("unknown backend '{other}' (expected cpu, cpu1 or gpu)")),
        }
    }
}

/// Build a backend for `def` with an uninitialized buffer of `particles`.
pub fn create_backend(
    kind: BackendKind,
    def: &SystemDefinition,
    layout: Layout,
    particles: usize,
) -> Result<Box<dyn Backend>, EngineError> {
    match kind {
        BackendKind::Cpu => Ok(Box::new(CpuBackend::new(
            compile_program(def)?,
            layout,
            particles,
        ))),
        BackendKind::CpuSingle => Ok(Box::new(CpuBackend::single_threaded(
            compile_program(def)?,
            layout,
            particles,
        )?)),
        #[cfg(feature = "gpu")]
        BackendKind::Gpu => {
            let kernel = crate::expr::emit_kernel_source(def, layout)?;
            Ok(Box::new(gpu::GpuBackend::new(
                &kernel,
                particles,
                def.dims(),
                def.parameters.len(),
            )?))
        }
        #[cfg(not(feature = "gpu"))]
        BackendKind::Gpu => Err(EngineError::BackendUnavailable(
            "built without the gpu feature".into(),
        )),
    }
}

/// Requests another thread may send to a running simulation. They are
/// applied in order at the start of the next [`Simulation::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Clamped to the parameter's range, like a slider.
    SetParameter { name: String, value: f64 },
    SetStepSize(f64),
    SetResetBatch(usize),
    /// Flip the sign of every group's step.
    SetTimeReversed(bool),
}

/// Cloneable handle for enqueueing [`Command`]s.
#[derive(Debug, Clone)]
pub struct CommandSender(mpsc::Sender<Command>);

impl CommandSender {
    /// Fails only if the simulation has been dropped.
    pub fn send(&self, command: Command) -> Result<(), Command> {
        self.0.send(command).map_err(|e| e.0)
    }
}

/// Which particles to read back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    All,
    Range(Range<usize>),
}

impl From<Range<usize>> for Selection {
    fn from(r: Range<usize>) -> Self {
        Selection::Range(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOutcome {
    pub cursor: usize,
    pub reset: usize,
}

pub struct Simulation {
    def: SystemDefinition,
    config: SimulationConfig,
    backend: Box<dyn Backend>,
    params: Vec<f64>,
    group_ranges: Vec<Range<usize>>,
    group_signs: Vec<f64>,
    ic: Vec<Vec<Interval>>,
    bounds: Vec<Interval>,
    max_age: Vec<Option<f64>>,
    group_ids: Vec<u32>,
    born_at: Vec<f64>,
    epochs: Vec<u32>,
    clock: f64,
    steps: u64,
    cursor: usize,
    time_reversed: bool,
    commands: mpsc::Receiver<Command>,
    sender: mpsc::Sender<Command>,
}

impl Simulation {
    pub fn new(
        def: SystemDefinition,
        config: SimulationConfig,
        kind: BackendKind,
    ) -> Result<Self, EngineError> {
        let state = init_particles(&def, &config)?;
        let backend = create_backend(kind, &def, config.layout, state.particles)?;
        Simulation::with_backend(def, config, state, backend)
    }

    /// Assemble a simulation from an existing state and backend. The state's
    /// positions are uploaded.
    pub fn with_backend(
        def: SystemDefinition,
        config: SimulationConfig,
        state: ParticleState,
        mut backend: Box<dyn Backend>,
    ) -> Result<Self, EngineError> {
        def.ensure_valid()?;
        config.validate(state.particles)?;
        if state.particles != def.particle_count() || state.dims != def.dims() {
            return Err(EngineError::Config(
                "particle state does not match the system definition".into(),
            ));
        }
        if state.layout != config.layout {
            return Err(EngineError::Config("state and config layouts differ".into()));
        }
        backend.upload(&state.positions)?;
        let params = def.default_params();
        backend.set_params(&params.iter().map(|v| *v as f32).collect::<Vec<_>>())?;

        let mut group_ranges = Vec::new();
        let mut start = 0;
        for g in &def.groups {
            group_ranges.push(start..start + g.count);
            start += g.count;
        }
        let (sender, commands) = mpsc::channel();
        Ok(Simulation {
            group_signs: def.groups.iter().map(|g| g.direction.sign()).collect(),
            ic: ic_boxes(&def),
            bounds: def.state_variables.iter().map(|v| v.bounds).collect(),
            max_age: def.groups.iter().map(|g| g.max_age).collect(),
            group_ranges,
            params,
            group_ids: state.group_ids,
            born_at: state.born_at,
            epochs: state.epochs,
            clock: state.clock,
            steps: 0,
            cursor: 0,
            time_reversed: false,
            commands,
            sender,
            def,
            config,
            backend,
        })
    }

    pub fn definition(&self) -> &SystemDefinition {
        &self.def
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn device_name(&self) -> String {
        self.backend.device_name()
    }

    pub fn particle_count(&self) -> usize {
        self.group_ids.len()
    }

    pub fn group_ids(&self) -> &[u32] {
        &self.group_ids
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Simulated time elapsed, summing step magnitudes.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn age(&self, particle: usize) -> f64 {
        self.clock - self.born_at[particle]
    }

    /// Pretend `particle` was last reset `age` time units ago.
    pub fn set_age(&mut self, particle: usize, age: f64) {
        self.born_at[particle] = self.clock - age;
    }

    pub fn epoch(&self, particle: usize) -> u32 {
        self.epochs[particle]
    }

    pub fn time_reversed(&self) -> bool {
        self.time_reversed
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.def.param_index(name).map(|i| self.params[i])
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn command_sender(&self) -> CommandSender {
        CommandSender(self.sender.clone())
    }

    fn push_params(&mut self) -> Result<(), EngineError> {
        let values: Vec<f32> = self.params.iter().map(|v| *v as f32).collect();
        self.backend.set_params(&values)
    }

    /// Set a parameter, rejecting values outside its declared range. The
    /// value reaches the backend immediately; nothing is recompiled.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<(), EngineError> {
        let i = self
            .def
            .param_index(name)
            .ok_or_else(|| EngineError::UnknownParameter(name.to_string()))?;
        let p = &self.def.parameters[i];
        if !(p.min..=p.max).contains(&value) {
            return Err(EngineError::ParameterOutOfRange {
                name: name.to_string(),
                value,
                min: p.min,
                max: p.max,
            });
        }
        self.params[i] = value;
        self.push_params()
    }

    /// Slider semantics: clamp into range, then set. Returns the value used.
    pub fn set_parameter_clamped(&mut self, name: &str, value: f64) -> Result<f64, EngineError> {
        let p = self
            .def
            .parameter(name)
            .ok_or_else(|| EngineError::UnknownParameter(name.to_string()))?;
        if value.is_nan() {
            return Err(EngineError::ParameterOutOfRange {
                name: name.to_string(),
                value,
                min: p.min,
                max: p.max,
            });
        }
        let v = p.clamp(value);
        self.set_parameter(name, v)?;
        Ok(v)
    }

    pub fn set_step_size(&mut self, h: f64) -> Result<(), EngineError> {
        let mut c = self.config.clone();
        c.step_size = h;
        c.validate(self.particle_count())?;
        self.config = c;
        Ok(())
    }

    pub fn set_reset_batch(&mut self, n: usize) -> Result<(), EngineError> {
        let mut c = self.config.clone();
        c.reset_batch = n;
        c.validate(self.particle_count())?;
        self.config = c;
        Ok(())
    }

    pub fn set_time_reversed(&mut self, reversed: bool) {
        self.time_reversed = reversed;
    }

    /// Apply every queued command in arrival order. Commands that fail are
    /// skipped and their errors returned.
    pub fn drain_commands(&mut self) -> Vec<EngineError> {
        let mut errors = Vec::new();
        while let Ok(cmd) = self.commands.try_recv() {
            let r = match cmd {
                Command::SetParameter { name, value } => {
                    self.set_parameter_clamped(&name, value).map(|_| ())
                }
                Command::SetStepSize(h) => self.set_step_size(h),
                Command::SetResetBatch(n) => self.set_reset_batch(n),
                Command::SetTimeReversed(r) => {
                    self.set_time_reversed(r);
                    Ok(())
                }
            };
            if let Err(e) = r {
                errors.push(e);
            }
        }
        errors
    }

    /// Drain queued commands, then advance every particle by one RK4 step.
    pub fn step(&mut self) -> Result<(), EngineError> {
        for e in self.drain_commands() {
            log::warn!("ignored command: {e}");
        }
        let h = self.config.step_size * if self.time_reversed { -1.0 } else { 1.0 };
        let dispatches: Vec<Dispatch> = self
            .group_ranges
            .iter()
            .zip(&self.group_signs)
            .map(|(r, sign)| Dispatch {
                first: r.start,
                count: r.len(),
                h: (h * sign) as f32,
            })
            .collect();
        self.backend.step(&dispatches)?;
        self.clock += self.config.step_size;
        self.steps += 1;
        Ok(())
    }

    /// `steps` frames of step followed by one reset scan.
    pub fn advance(&mut self, steps: usize) -> Result<(), EngineError> {
        for _ in 0..steps {
            self.step()?;
            self.scan_and_reset()?;
        }
        Ok(())
    }

    /// `steps` steps with no reset scans.
    pub fn integrate(&mut self, steps: usize) -> Result<(), EngineError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Block until submitted work has finished.
    pub fn synchronize(&mut self) -> Result<(), EngineError> {
        self.backend.synchronize()
    }

    fn needs_reset(&self, p: usize, row: &[f32]) -> bool {
        let escaped = row
            .iter()
            .zip(&self.bounds)
            .any(|(v, b)| !(b.lo..=b.hi).contains(&(*v as f64)));
        let expired = match self.max_age[self.group_ids[p] as usize] {
            Some(max) => self.age(p) > max,
            None => false,
        };
        escaped || expired
    }

    /// Examine the next `reset_batch` particles from the cursor (wrapping).
    /// Escaped, non-finite and expired particles get fresh initial
    /// conditions; only those are written back.
    pub fn scan_and_reset(&mut self) -> Result<ScanOutcome, EngineError> {
        let p = self.particle_count();
        let n = self.def.dims();
        let batch = self.config.reset_batch;
        let start = self.cursor;
        let head = batch.min(p - start);
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (first, count) in [(start, head), (0, batch - head)] {
            if count == 0 {
                continue;
            }
            let data = self.backend.read(first, count)?;
            for (i, row) in data.chunks_exact(n).enumerate() {
                let id = first + i;
                if self.needs_reset(id, row) {
                    self.epochs[id] += 1;
                    self.born_at[id] = self.clock;
                    let g = self.group_ids[id] as usize;
                    let mut fresh = vec![0.0f32; n];
                    sampler::sample_point(
                        self.config.seed,
                        id as u64,
                        self.epochs[id],
                        &self.ic[g],
                        &mut fresh,
                    );
                    ids.push(id);
                    rows.extend_from_slice(&fresh);
                }
            }
        }
        if !ids.is_empty() {
            self.backend.write(&ids, &rows)?;
        }
        self.cursor = (start + batch) % p;
        Ok(ScanOutcome {
            cursor: self.cursor,
            reset: ids.len(),
        })
    }

    /// Copy positions back to the host.
    pub fn read_back(&mut self, selection: impl Into<Selection>) -> Result<Snapshot, EngineError> {
        let p = self.particle_count();
        let range = match selection.into() {
            Selection::All => 0..p,
            Selection::Range(r) => r,
        };
        if range.start > range.end || range.end > p {
            return Err(EngineError::Selection {
                start: range.start,
                end: range.end,
                particles: p,
            });
        }
        let values = self.backend.read(range.start, range.len())?;
        Ok(Snapshot {
            names: self.def.state_variables.iter().map(|v| v.name.clone()).collect(),
            first: range.start,
            group_ids: self.group_ids[range.clone()].to_vec(),
            values,
        })
    }
}

