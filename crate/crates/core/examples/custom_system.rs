//! Define a system in a TOML document, validate it and integrate it.
//!
//! cargo run --release --example custom_system -- [path.toml]

use swarm::engine::{BackendKind, Simulation, SimulationConfig};
use swarm::model::{load_system, validate_system};

const VAN_DER_POL: &str = r#"
name = "van_der_pol"

[[state_variables]]
name = "x"
rhs = "y"
bounds = [-6.0, 6.0]

[[state_variables]]
name = "y"
rhs = "mu*(1 - x^2)*y - x"
bounds = [-10.0, 10.0]

[[parameters]]
name = "mu"
default = 1.5
min = 0.0
max = 5.0

[[techniques]]
id = "plane"
projection = "2d"
axes = ["x", "y"]
color = { mode = "position" }

[[groups]]
count = 20000
technique = "plane"
direction = "forward"
ic = { x = [-4.0, 4.0], y = [-4.0, 4.0] }
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => VAN_DER_POL.to_string(),
    };
    let def = match load_system(&text) {
        Ok(def) => def,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let report = validate_system(&def);
    println!("{}: valid = {}", def.name, report.is_valid());

    let config = SimulationConfig {
        reset_batch: def.particle_count().min(1024),
        ..Default::default()
    };
    let mut sim = Simulation::new(def, config, BackendKind::Cpu)?;
    sim.advance(2000)?;
    let snap = sim.read_back(0..5)?;
    println!("{}", snap.names.join("\t"));
    for p in snap.particles() {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.4}")).collect();
        println!("{}", row.join("\t"));
    }
    Ok(())
}
