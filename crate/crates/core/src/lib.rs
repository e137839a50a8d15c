//! Massively parallel integration of ODE trajectories.
//!
//! A [`SystemDefinition`] describes state variables, parameters, particle
//! groups and how to draw them. The [`engine`] seeds many particles in each
//! group's initial-condition box and advances them with fixed-step RK4 on
//! the CPU or, with the `gpu` feature, in a generated compute kernel.
//! [`view`] and [`render`] turn particle positions into images.
//!
//! ```
//! use swarm::engine::{BackendKind, Selection, Simulation, SimulationConfig};
//!
//! let def = swarm::systems::lorenz().with_particle_count(256);
//! let config = SimulationConfig { reset_batch: 64, ..Default::default() };
//! let mut sim = Simulation::new(def, config, BackendKind::Cpu).unwrap();
//! sim.advance(10).unwrap();
//! assert_eq!(sim.read_back(Selection::All).unwrap().len(), 256);
//! ```

pub mod bench;
pub mod cli;
pub mod engine;
pub mod expr;
pub mod layout;
pub mod model;
pub mod render;
pub mod systems;
pub mod view;

pub use layout::Layout;
pub use model::SystemDefinition;
