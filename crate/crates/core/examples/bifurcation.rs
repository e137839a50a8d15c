//! Sweep a parameter across the particle cloud by lifting it into the state.
//! Each particle then carries its own `w_ss` and the cloud traces the
//! system's attractors over the whole range at once.
//!
//! cargo run --release --example bifurcation

use swarm::engine::{BackendKind, Selection, Simulation, SimulationConfig};
use swarm::model::{lift_parameter, Interval};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = swarm::systems::stn_gpe().with_particle_count(200_000);
    let def = lift_parameter(&base, "w_ss", Interval::new(0.0, 15.0), Interval::new(0.0, 15.0))?;
    let w = def.state_index("w_ss").expect("lifted");
    let config = SimulationConfig {
        step_size: 0.01,
        reset_batch: 8192,
        ..Default::default()
    };
    let mut sim = Simulation::new(def, config, BackendKind::Cpu)?;
    sim.advance(3000)?;

    // forward particles only: they sit on attractors
    let snap = sim.read_back(Selection::All)?;
    let bins = 15;
    let mut lo = vec![f32::INFINITY; bins];
    let mut hi = vec![f32::NEG_INFINITY; bins];
    for (p, g) in snap.particles().zip(&snap.group_ids) {
        if *g != 0 {
            continue;
        }
        let b = ((p[w] / 15.0 * bins as f32) as usize).min(bins - 1);
        lo[b] = lo[b].min(p[0]);
        hi[b] = hi[b].max(p[0]);
    }
    println!("w_ss bin      x range of the forward cloud");
    for b in 0..bins {
        println!("[{:4.1}, {:4.1})  {:.3} .. {:.3}", b as f64, (b + 1) as f64, lo[b], hi[b]);
    }
    Ok(())
}
