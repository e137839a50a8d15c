//! Ring of three Hodgkin-Huxley neurons: how many particles end up on the
//! synchronous orbit.
//!
//! cargo run --release --example hh_ring -- [particles] [ms]

use swarm::engine::{BackendKind, Selection, Simulation, SimulationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let particles: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5000);
    let ms: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(300.0);

    let def = swarm::systems::hh_ring(3)?.with_particle_count(particles);
    let v: Vec<usize> = ["V1", "V2", "V3"].iter().map(|n| def.state_index(n).unwrap()).collect();
    let h = 0.025;
    let config = SimulationConfig {
        step_size: h,
        reset_batch: particles,
        ..Default::default()
    };
    let mut sim = Simulation::new(def, config, BackendKind::Cpu)?;
    let chunk = (50.0 / h) as usize;
    while sim.clock() < ms {
        sim.integrate(chunk)?;
        let snap = sim.read_back(Selection::All)?;
        let synced = snap
            .particles()
            .filter(|p| {
                let (a, b, c) = (p[v[0]], p[v[1]], p[v[2]]);
                (a - b).abs().max((b - c).abs()).max((a - c).abs()) < 5.0
            })
            .count();
        println!(
            "t = {:6.1} ms  {:5.1}% within 5 mV of the diagonal",
            sim.clock(),
            100.0 * synced as f64 / particles as f64
        );
    }
    Ok(())
}
