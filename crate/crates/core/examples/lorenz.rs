//! Lorenz cloud below and above the onset of chaos.
//!
//! cargo run --release --example lorenz -- [r] [particles]

use swarm::engine::{BackendKind, Selection, Simulation, SimulationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let r: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(28.0);
    let particles: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);

    let def = swarm::systems::lorenz().with_particle_count(particles);
    let config = SimulationConfig {
        step_size: 0.01,
        reset_batch: particles.min(4096),
        ..Default::default()
    };
    let mut sim = Simulation::new(def, config, BackendKind::Cpu)?;
    sim.set_parameter("r", r)?;

    for frame in 0..=10 {
        if frame > 0 {
            sim.advance(200)?;
        }
        let snap = sim.read_back(Selection::All)?;
        let mean = |d: usize| snap.column(d).iter().map(|v| *v as f64).sum::<f64>() / snap.len() as f64;
        let spread = snap
            .particles()
            .map(|p| (p[0] as f64).hypot(p[1] as f64))
            .fold(0.0, f64::max);
        println!(
            "t = {:5.1}  mean = ({:7.3}, {:7.3}, {:7.3})  max |(x, y)| = {spread:.3}",
            sim.clock(),
            mean(0),
            mean(1),
            mean(2)
        );
    }
    Ok(())
}
