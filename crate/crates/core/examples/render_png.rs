//! Render a Lorenz snapshot with additive sprites to a PNG.
//!
//! cargo run --release --example render_png -- [out.png]

use swarm::engine::{BackendKind, Selection, Simulation, SimulationConfig};
use swarm::render::{render_snapshot, RenderSettings};
use swarm::view::Camera;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "lorenz.png".into());
    let def = swarm::systems::lorenz().with_particle_count(200_000);
    let config = SimulationConfig {
        reset_batch: 4096,
        ..Default::default()
    };
    let mut sim = Simulation::new(def.clone(), config, BackendKind::Cpu)?;
    sim.advance(1500)?;
    let snap = sim.read_back(Selection::All)?;

    let camera = Camera::looking_at([0.0, -90.0, 25.0], [0.0, 0.0, 25.0]);
    let settings = RenderSettings {
        width: 960,
        height: 720,
        sprite_radius_px: 1.5,
        gain: 0.15,
    };
    let frame = render_snapshot(&def, &snap, &camera, &settings);
    image::save_buffer(&out, &frame.to_rgb8(), frame.width, frame.height, image::ColorType::Rgb8)?;
    println!("wrote {out} ({} particles)", snap.len());
    Ok(())
}
