//! Acceptance suite. Prints one PASS / FAIL / SKIP line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- <name-substring>`.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use swarm::engine::{
    BackendKind, EngineError, ReferenceSystem, Selection, Simulation, SimulationConfig, Snapshot,
};
use swarm::expr::codegen::{control_flow_sites, RANGE_GUARD};
use swarm::expr::emit_kernel_source;
use swarm::model::{lift_parameter, Direction, Interval, ParticleGroup, StateVariable};
use swarm::systems;
use swarm::{Layout, SystemDefinition};

// Tolerances and budgets, pinned here.
const RK4_SINGLE_STEP_TOL: f64 = 1e-9;
const RK4_RATIO_RANGE: (f64, f64) = (12.0, 20.0);
const BACKEND_ABS_TOL: f32 = 1e-4;
const ORIGIN_RADIUS: f64 = 1e-2;
const FIXED_POINT_RADIUS: f64 = 1e-2;
const ATTRACTOR_FRACTION: f64 = 0.99;
const HH_STEP: f64 = 0.025;
const SPIKE_THRESHOLD: f32 = 20.0;
const ISI_CV_MAX: f64 = 0.05;
const SYNC_SPREAD_MV: f32 = 5.0;
const SYNC_FRACTION: f64 = 0.5;
const KERNEL_REL_TOL: f64 = 1e-5;
const KERNEL_ABS_TOL: f64 = 1e-6;

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        status: Status::Pass,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        status: Status::Fail,
        detail: detail.into(),
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

type Check = fn() -> Result<Outcome, EngineError>;

fn config(step_size: f64, particles: usize, seed: u64) -> SimulationConfig {
    SimulationConfig {
        step_size,
        layout: Layout::ColumnMajor,
        reset_batch: particles,
        seed,
    }
}

fn gpu_unavailable() -> Option<String> {
    #[cfg(feature = "gpu")]
    {
        swarm::engine::gpu::probe().err().map(|e| e.to_string())
    }
    #[cfg(not(feature = "gpu"))]
    {
        Some("built without the gpu feature".into())
    }
}

// ---------------------------------------------------------------- RK4 order

fn rk4_order() -> Result<Outcome, EngineError> {
    let def = decay_system();
    let sys = ReferenceSystem::new(&def)?;
    let params: [(&str, f64); 0] = [];

    // Independent oracle: for x' = -x one RK4 step multiplies by the
    // degree-4 Taylor polynomial of e^-h.
    let h = 0.1f64;
    let factor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
    let one = sys.rk4_step(&[1.0], &params, h)?[0];
    let single_ok = (one - factor).abs() < RK4_SINGLE_STEP_TOL
        && (one - 0.9048375).abs() < RK4_SINGLE_STEP_TOL;

    let global_error = |h: f64| -> Result<f64, EngineError> {
        let steps = (1.0 / h).round() as usize;
        let mut x = vec![1.0];
        for _ in 0..steps {
            x = sys.rk4_step(&x, &params, h)?;
        }
        Ok((x[0] - (-1.0f64).exp()).abs())
    };
    let errors = [global_error(0.1)?, global_error(0.05)?, global_error(0.025)?];
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let ratios_ok = ratios
        .iter()
        .all(|r| (RK4_RATIO_RANGE.0..=RK4_RATIO_RANGE.1).contains(r));
    Ok(verdict(
        single_ok && ratios_ok,
        format!(
            "step(1, h=0.1) = {one:.10}; error ratios {:.3}, {:.3}",
            ratios[0], ratios[1]
        ),
    ))
}

fn decay_system() -> SystemDefinition {
    SystemDefinition {
        name: "decay".into(),
        state_variables: vec![StateVariable::new("x", "-x", Interval::new(-10.0, 10.0))],
        parameters: vec![],
        techniques: vec![],
        groups: vec![],
    }
}

// ------------------------------------------------------- backend equivalence

fn backend_equivalence() -> Result<Outcome, EngineError> {
    if let Some(reason) = gpu_unavailable() {
        return Ok(Outcome {
            status: Status::Skip,
            detail: format!("no GPU: {reason}"),
        });
    }
    let def = systems::lorenz()
        .with_particle_count(1024)
        .with_default("r", 0.5)?;
    let run = |kind| -> Result<Snapshot, EngineError> {
        let mut sim = Simulation::new(def.clone(), config(0.01, 1024, 11), kind)?;
        sim.integrate(1000)?;
        sim.read_back(Selection::All)
    };
    let cpu = run(BackendKind::Cpu)?;
    let gpu = run(BackendKind::Gpu)?;
    let worst = cpu
        .values
        .iter()
        .zip(&gpu.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    Ok(verdict(
        worst <= BACKEND_ABS_TOL,
        format!("max |cpu - gpu| = {worst:.2e} over 1024 particles x 1000 steps"),
    ))
}

// ------------------------------------------------------------ Lorenz shapes

fn lorenz_run(r: f64, steps: usize) -> Result<Simulation, EngineError> {
    let def = systems::lorenz()
        .with_particle_count(10_000)
        .with_default("r", r)?;
    let mut sim = Simulation::new(def, config(0.01, 10_000, 5), BackendKind::Cpu)?;
    sim.integrate(steps)?;
    Ok(sim)
}

fn dist(p: &[f32], q: [f64; 3]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (*a as f64 - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn lorenz_landmarks() -> Result<Outcome, EngineError> {
    // r = 0.5: the origin attracts everything
    let snap = lorenz_run(0.5, 5000)?.read_back(Selection::All)?;
    let near = snap
        .particles()
        .filter(|p| dist(p, [0.0; 3]) < ORIGIN_RADIUS)
        .count();
    let frac_origin = near as f64 / snap.len() as f64;

    // r = 5: the two symmetric fixed points attract every survivor
    let beta = 8.0 / 3.0;
    let c = (beta * (5.0 - 1.0f64)).sqrt();
    let targets = [[c, c, 4.0], [-c, -c, 4.0]];
    let snap = lorenz_run(5.0, 10_000)?.read_back(Selection::All)?;
    let bounds = [(-60.0, 60.0), (-60.0, 60.0), (-10.0, 110.0)];
    let survivors: Vec<&[f32]> = snap
        .particles()
        .filter(|p| {
            p.iter()
                .zip(bounds)
                .all(|(v, (lo, hi))| (lo..=hi).contains(&(*v as f64)))
        })
        .collect();
    let off = survivors
        .iter()
        .filter(|p| targets.iter().all(|t| dist(p, *t) >= FIXED_POINT_RADIUS))
        .count();

    // r = 28: bounded chaos between t = 20 and t = 40
    let mut sim = lorenz_run(28.0, 2000)?;
    let mut inside = vec![true; sim.particle_count()];
    for step in 0..=2000 {
        if step > 0 {
            sim.step()?;
        }
        let snap = sim.read_back(Selection::All)?;
        for (ok, p) in inside.iter_mut().zip(snap.particles()) {
            *ok &= p[0].abs() < 30.0 && p[1].abs() < 30.0 && p[2] > 0.0 && p[2] < 60.0;
        }
    }
    let frac_bounded = inside.iter().filter(|b| **b).count() as f64 / inside.len() as f64;

    Ok(verdict(
        frac_origin >= ATTRACTOR_FRACTION && off == 0 && frac_bounded >= ATTRACTOR_FRACTION,
        format!(
            "r=0.5: {:.2}% at origin; r=5: {off} of {} survivors off the fixed points; r=28: {:.2}% bounded on [20,40]",
            100.0 * frac_origin,
            survivors.len(),
            100.0 * frac_bounded
        ),
    ))
}

// ------------------------------------------------------------- lift exactness

fn lift_exactness() -> Result<Outcome, EngineError> {
    let def = lift_parameter(
        &systems::lorenz().with_particle_count(2000),
        "r",
        Interval::new(0.0, 30.0),
        Interval::new(0.0, 350.0),
    )?;
    let r = def.state_index("r").expect("lifted variable");
    let mut sim = Simulation::new(def, config(0.01, 2000, 3), BackendKind::Cpu)?;
    let before = sim.read_back(Selection::All)?.column(r);
    sim.integrate(10_000)?;
    let after = sim.read_back(Selection::All)?.column(r);
    let changed = before
        .iter()
        .zip(&after)
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    Ok(verdict(
        changed == 0,
        format!("{changed} of {} lifted values changed over 10000 steps", before.len()),
    ))
}

// -------------------------------------------------------------------- HH

fn upward_crossings(trace: &[f32], threshold: f32) -> Vec<usize> {
    trace
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < threshold && w[1] >= threshold)
        .map(|(i, _)| i + 1)
        .collect()
}

/// V traces of every particle, one sample per step.
fn hh_traces(
    def: SystemDefinition,
    particles: usize,
    steps: usize,
    v_index: usize,
) -> Result<Vec<Vec<f32>>, EngineError> {
    let mut sim = Simulation::new(def, config(HH_STEP, particles, 21), BackendKind::Cpu)?;
    let mut traces = vec![Vec::with_capacity(steps + 1); particles];
    for step in 0..=steps {
        if step > 0 {
            sim.step()?;
        }
        let snap = sim.read_back(Selection::All)?;
        for (t, p) in traces.iter_mut().zip(snap.particles()) {
            t.push(p[v_index]);
        }
    }
    Ok(traces)
}

/// Steady state of the uncoupled neuron at V = 0 and I = 0: every gate at
/// alpha / (alpha + beta) of the squid-axon rates.
fn resting_state() -> [(&'static str, f64); 5] {
    let (am, bm) = (2.5 / (2.5f64.exp() - 1.0), 4.0);
    let (ah, bh) = (0.07, 1.0 / (3.0f64.exp() + 1.0));
    let (an, bn) = (0.1 / (1.0f64.exp() - 1.0), 0.125);
    [
        ("V1", 0.0),
        ("h1", ah / (ah + bh)),
        ("m1", am / (am + bm)),
        ("n1", an / (an + bn)),
        ("s1", 0.0),
    ]
}

fn hh_dynamics() -> Result<Outcome, EngineError> {
    const PARTICLES: usize = 32;
    let base = systems::hh_ring(1).map_err(|e| EngineError::Config(e.to_string()))?;
    let v = base.state_index("V1").expect("V1");
    let steps_200ms = (200.0 / HH_STEP).round() as usize;

    // I = 10: regular spiking after a current step applied at rest. Random
    // starts are avoided here because I = 10 sits just past the Hopf point
    // and particles near the weakly unstable focus take far longer than
    // 200 ms to reach the cycle.
    let mut stepped = base.clone().with_particle_count(PARTICLES).with_default("I1", 10.0)?;
    for (name, value) in resting_state() {
        stepped.groups[0]
            .ic
            .insert(name.to_string(), Interval::new(value, value + 1e-3));
    }
    let spiking = hh_traces(
        stepped,
        PARTICLES,
        steps_200ms,
        v,
    )?;
    let mut min_spikes = usize::MAX;
    let mut max_cv = 0.0f64;
    for trace in &spiking {
        let spikes = upward_crossings(trace, SPIKE_THRESHOLD);
        min_spikes = min_spikes.min(spikes.len());
        let isi: Vec<f64> = spikes.windows(2).map(|w| (w[1] - w[0]) as f64 * HH_STEP).collect();
        if isi.len() >= 2 {
            let mean = isi.iter().sum::<f64>() / isi.len() as f64;
            let sd = (isi.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (isi.len() - 1) as f64)
                .sqrt();
            max_cv = max_cv.max(sd / mean);
        } else {
            max_cv = f64::INFINITY;
        }
    }

    // I = 5: quiescent after the transient
    let quiet = hh_traces(
        base.with_particle_count(PARTICLES).with_default("I1", 5.0)?,
        PARTICLES,
        steps_200ms,
        v,
    )?;
    let transient = (50.0 / HH_STEP).round() as usize;
    let late_spikes: usize = quiet
        .iter()
        .map(|t| upward_crossings(&t[transient..], SPIKE_THRESHOLD).len())
        .sum();

    // N = 3 ring: synchrony
    let (sync_frac, nonfinite) = hh_ring_sync()?;

    Ok(verdict(
        min_spikes >= 5 && max_cv < ISI_CV_MAX && late_spikes == 0 && sync_frac > SYNC_FRACTION,
        format!(
            "I=10 from rest: >= {min_spikes} spikes, max ISI CV {:.2}%; I=5: {late_spikes} spikes after 50 ms; ring: {:.1}% synchronous ({nonfinite} non-finite)",
            100.0 * max_cv,
            100.0 * sync_frac
        ),
    ))
}

fn hh_ring_sync() -> Result<(f64, usize), EngineError> {
    const PARTICLES: usize = 10_000;
    let def = systems::hh_ring(3)
        .map_err(|e| EngineError::Config(e.to_string()))?
        .with_particle_count(PARTICLES);
    let vs: Vec<usize> = ["V1", "V2", "V3"]
        .iter()
        .map(|n| def.state_index(n).expect("voltage"))
        .collect();
    let mut sim = Simulation::new(def, config(HH_STEP, PARTICLES, 8), BackendKind::Cpu)?;
    sim.integrate((500.0 / HH_STEP).round() as usize)?;
    // one full period at I = 10 is under 15 ms; watch 20 ms
    let window = (20.0 / HH_STEP).round() as usize;
    let mut spread = vec![0.0f32; PARTICLES];
    for step in 0..=window {
        if step > 0 {
            sim.step()?;
        }
        let snap = sim.read_back(Selection::All)?;
        for (s, p) in spread.iter_mut().zip(snap.particles()) {
            let v = [p[vs[0]], p[vs[1]], p[vs[2]]];
            let hi = v.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let lo = v.iter().copied().fold(f32::INFINITY, f32::min);
            // NaN compares false, so mark it explicitly
            let d = if v.iter().all(|x| x.is_finite()) { hi - lo } else { f32::INFINITY };
            *s = s.max(d);
        }
    }
    let sync = spread.iter().filter(|s| **s < SYNC_SPREAD_MV).count();
    let nonfinite = spread.iter().filter(|s| s.is_infinite()).count();
    Ok((sync as f64 / PARTICLES as f64, nonfinite))
}

// ----------------------------------------------------------- codegen oracle

fn builtin_systems() -> Vec<SystemDefinition> {
    vec![
        systems::lorenz(),
        systems::stn_gpe(),
        systems::hh_ring(1).unwrap(),
        systems::hh_ring(3).unwrap(),
    ]
}

fn codegen_oracle() -> Result<Outcome, EngineError> {
    let mut kernels = 0;
    for def in builtin_systems() {
        for layout in [Layout::RowMajor, Layout::ColumnMajor] {
            let k = emit_kernel_source(&def, layout)?;
            let sites = control_flow_sites(&k.source);
            let only_guard = sites.len() == 1 && sites[0].text.trim() == RANGE_GUARD;
            if !only_guard {
                let listing: Vec<String> =
                    sites.iter().map(|s| format!("line {}: {}", s.line, s.text.trim())).collect();
                return Ok(fail(format!(
                    "{} ({layout}) has data-dependent control flow: {}",
                    def.name,
                    listing.join("; ")
                )));
            }
            kernels += 1;
        }
    }
    match gpu_unavailable() {
        Some(reason) => Ok(Outcome {
            status: Status::Skip,
            detail: format!(
                "branch scan passed for {kernels} kernels; GPU comparison not run ({reason})"
            ),
        }),
        None => gpu_kernel_vs_reference(kernels),
    }
}

#[cfg(feature = "gpu")]
fn gpu_kernel_vs_reference(kernels: usize) -> Result<Outcome, EngineError> {
    use rand::{Rng, SeedableRng};
    use swarm::engine::{gpu::GpuBackend, Backend, Dispatch};

    const POINTS: usize = 100;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for def in builtin_systems() {
        let n = def.dims();
        let h = if def.name.starts_with("hh") { HH_STEP } else { 0.01 };
        let points: Vec<f32> = (0..POINTS * n)
            .map(|k| {
                let b = def.state_variables[k % n].bounds;
                rng.random_range(b.lo..b.hi) as f32
            })
            .collect();
        let kernel = emit_kernel_source(&def, Layout::RowMajor)?;
        let mut gpu = GpuBackend::new(&kernel, POINTS, n, def.parameters.len())?;
        gpu.upload(&points)?;
        let params = def.default_params();
        gpu.set_params(&params.iter().map(|v| *v as f32).collect::<Vec<_>>())?;
        gpu.step(&[Dispatch {
            first: 0,
            count: POINTS,
            h: h as f32,
        }])?;
        let out = gpu.read(0, POINTS)?;

        let reference = ReferenceSystem::new(&def)?;
        let pmap = reference.param_map(&params);
        for i in 0..POINTS {
            let x: Vec<f64> = points[i * n..(i + 1) * n].iter().map(|v| *v as f64).collect();
            let want = reference.rk4_step(&x, &pmap, h)?;
            for d in 0..n {
                let got = out[i * n + d] as f64;
                let excess = (got - want[d]).abs() - (KERNEL_ABS_TOL + KERNEL_REL_TOL * want[d].abs());
                worst = worst.max(excess);
                if excess > 0.0 {
                    return Ok(fail(format!(
                        "{}: point {i} component {d}: kernel {got} vs reference {}",
                        def.name, want[d]
                    )));
                }
            }
        }
    }
    Ok(pass(format!(
        "branch scan passed for {kernels} kernels; kernel steps match the reference at {POINTS} points per system"
    )))
}

#[cfg(not(feature = "gpu"))]
fn gpu_kernel_vs_reference(_: usize) -> Result<Outcome, EngineError> {
    unreachable!("no GPU without the gpu feature")
}

// ----------------------------------------------------------- reset liveness

fn reset_liveness() -> Result<Outcome, EngineError> {
    const P: usize = 100;
    const BATCH: usize = 10;
    let scans_allowed = P.div_ceil(BATCH);
    let group = |count, drift: Interval| ParticleGroup {
        count,
        technique: "xy".into(),
        direction: Direction::Forward,
        ic: [("x".to_string(), Interval::new(0.0, 0.5)), ("a".to_string(), drift)]
            .into_iter()
            .collect(),
        max_age: None,
    };
    let def = SystemDefinition {
        name: "drift".into(),
        state_variables: vec![
            StateVariable::new("x", "a", Interval::new(0.0, 1.0)),
            StateVariable::new("a", "0", Interval::new(-1.0, 10.0)),
        ],
        parameters: vec![],
        techniques: vec![swarm::model::RenderTechnique {
            id: "xy".into(),
            projection: swarm::model::Projection::Planar2D,
            axes: vec!["x".into(), "a".into()],
            color: swarm::model::ColorMode::Position,
        }],
        // 40 particles that stay put, 60 that leave within one step
        groups: vec![group(40, Interval::new(0.0, 1e-7)), group(60, Interval::new(5.0, 6.0))],
    };
    let cfg = SimulationConfig {
        step_size: 1.0,
        layout: Layout::RowMajor,
        reset_batch: BATCH,
        seed: 1,
    };
    let mut sim = Simulation::new(def, cfg, BackendKind::Cpu)?;

    let mut escaped_since: Vec<Option<usize>> = vec![None; P];
    let mut worst_wait = 0;
    let mut disturbed = 0;
    for scan in 0..60 {
        sim.step()?;
        let before = sim.read_back(Selection::All)?;
        let epochs: Vec<u32> = (0..P).map(|p| sim.epoch(p)).collect();
        sim.scan_and_reset()?;
        let after = sim.read_back(Selection::All)?;
        for p in 0..P {
            let x = before.particle(p)[0];
            let out = !(0.0..=1.0).contains(&x);
            let was_reset = sim.epoch(p) != epochs[p];
            if out && escaped_since[p].is_none() {
                escaped_since[p] = Some(scan);
            }
            if was_reset {
                if let Some(start) = escaped_since[p].take() {
                    worst_wait = worst_wait.max(scan - start + 1);
                }
            } else if !out && before.particle(p) != after.particle(p) {
                disturbed += 1;
            }
        }
    }
    // anything still waiting counts from its escape to the end of the run
    for start in escaped_since.iter().flatten() {
        worst_wait = worst_wait.max(60 - start + 1);
    }
    Ok(verdict(
        worst_wait <= scans_allowed && disturbed == 0,
        format!(
            "longest wait {worst_wait} scans (allowed {scans_allowed}); {disturbed} in-bounds particles disturbed"
        ),
    ))
}

// ------------------------------------------------------------------- CLI

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_swarm"))
}

fn bench_report() -> Result<Outcome, EngineError> {
    let out = Command::new(bin())
        .args(["bench", "builtin:lorenz", "--particles", "3000000", "--steps", "1000"])
        .output()
        .map_err(|e| EngineError::Device(e.to_string()))?;
    if !out.status.success() {
        return Ok(fail(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )));
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    let Some(json_start) = stdout.find("\n{") else {
        return Ok(fail("no JSON document in output"));
    };
    let table = &stdout[..json_start];
    let doc: serde_json::Value = match serde_json::from_str(&stdout[json_start..]) {
        Ok(v) => v,
        Err(e) => return Ok(fail(format!("JSON does not parse: {e}"))),
    };
    let rows = doc["rows"].as_array().cloned().unwrap_or_default();
    let cpu_ok = rows.iter().any(|r| {
        r["backend"] == "cpu"
            && r["particles"] == 3_000_000
            && r["steps"] == 1000
            && r["mean_ms"].as_f64().is_some_and(|m| m > 0.0)
            && r["std_ms"].as_f64().is_some()
    });
    let gpu_row = rows.iter().find(|r| r["backend"] == "gpu");
    let gpu_ok = gpu_row.is_some_and(|r| r["status"] == "ok" || r["status"] == "skipped");
    let env_ok = doc["environment"]["precision"] == "f32" && doc["environment"]["devices"].is_array();
    let table_ok = table.contains("mean ms/step") && table.contains("lorenz") && table.contains("3000000");
    let cpu_mean = rows
        .iter()
        .find(|r| r["backend"] == "cpu")
        .and_then(|r| r["mean_ms"].as_f64())
        .unwrap_or(f64::NAN);
    Ok(verdict(
        cpu_ok && gpu_ok && env_ok && table_ok,
        format!(
            "cpu {cpu_mean:.1} ms/step; gpu row {}",
            gpu_row.map_or("missing".to_string(), |r| r["status"].to_string())
        ),
    ))
}

fn determinism() -> Result<Outcome, EngineError> {
    let dir = tempfile::tempdir().map_err(|e| EngineError::Device(e.to_string()))?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(name);
        let status = Command::new(bin())
            .args(["snapshot", "builtin:lorenz", "--steps", "5000", "--dt", "0.01"])
            .args(["--seed", "7", "--backend", "cpu", "--out"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    match (run("a.csv"), run("b.csv")) {
        (Ok(a), Ok(b)) => Ok(verdict(
            a == b && !a.is_empty(),
            format!("two runs wrote {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
        )),
        (Err(e), _) | (_, Err(e)) => Ok(fail(format!("snapshot failed: {e}"))),
    }
}

// -------------------------------------------------------------------- main

fn main() {
    let criteria: [(&str, Duration, Check); 9] = [
        ("rk4-order", Duration::from_secs(1), rk4_order),
        ("backend-equivalence", Duration::from_secs(10), backend_equivalence),
        ("lorenz-landmarks", Duration::from_secs(60), lorenz_landmarks),
        ("lift-exactness", Duration::MAX, lift_exactness),
        ("hh-dynamics", Duration::from_secs(120), hh_dynamics),
        ("codegen-oracle", Duration::MAX, codegen_oracle),
        ("reset-liveness", Duration::MAX, reset_liveness),
        ("bench-report", Duration::MAX, bench_report),
        ("snapshot-determinism", Duration::MAX, determinism),
    ];
    // `cargo test` passes harness flags; anything else is a name filter
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();

    let mut failed = Vec::new();
    for (name, budget, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = check().unwrap_or_else(|e| fail(format!("error: {e}")));
        let elapsed = start.elapsed();
        if outcome.status == Status::Pass && elapsed > budget {
            outcome = fail(format!("{} (took {elapsed:.1?}, budget {budget:?})", outcome.detail));
        }
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        println!("{tag}  {name:<21} {:>7.1}s  {}", elapsed.as_secs_f64(), outcome.detail);
        if outcome.status == Status::Fail {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        println!("\nfailed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
