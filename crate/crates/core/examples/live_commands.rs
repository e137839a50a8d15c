//! Drive parameter changes from another thread while the owner steps, the
//! way an interactive front end would.
//!
//! cargo run --release --example live_commands

use std::sync::mpsc;
use std::thread;

use swarm::engine::{BackendKind, Command, Selection, Simulation, SimulationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let def = swarm::systems::lorenz().with_particle_count(20_000);
    let config = SimulationConfig {
        reset_batch: 2048,
        ..Default::default()
    };
    let mut sim = Simulation::new(def, config, BackendKind::Cpu)?;
    let commands = sim.command_sender();
    let (tick_tx, tick_rx) = mpsc::channel::<usize>();

    // a "slider" that sweeps r upward every 100 frames
    let ui = thread::spawn(move || {
        for frame in tick_rx {
            if frame % 100 == 0 {
                let r = 0.5 + frame as f64 / 20.0;
                if commands.send(Command::SetParameter { name: "r".into(), value: r }).is_err() {
                    break;
                }
            }
        }
    });

    for frame in 0..=600 {
        tick_tx.send(frame)?;
        sim.step()?;
        sim.scan_and_reset()?;
        if frame % 100 == 50 {
            let snap = sim.read_back(Selection::All)?;
            let mean_z = snap.column(2).iter().map(|v| *v as f64).sum::<f64>() / snap.len() as f64;
            println!("frame {frame:3}  r = {:5.2}  mean z = {mean_z:.3}", sim.parameter("r").unwrap());
        }
    }
    drop(tick_tx);
    ui.join().expect("ui thread");
    Ok(())
}
