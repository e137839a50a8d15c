//! Step timings per backend and memory layout, printed as a table.
//!
//! cargo run --release --example benchmark -- [builtin] [particles] [steps]

use swarm::bench::{bench, BenchOptions};
use swarm::engine::BackendKind;
use swarm::Layout;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "stn_gpe".into());
    let particles = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let steps = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);

    let def = swarm::systems::builtin(&name).expect("known builtin");
    let opts = BenchOptions {
        particles,
        steps,
        backends: vec![BackendKind::Cpu, BackendKind::CpuSingle, BackendKind::Gpu],
        layouts: vec![Layout::ColumnMajor, Layout::RowMajor],
        ..Default::default()
    };
    let report = bench(&def, &opts).expect("benchmark runs");
    print!("{}", report.to_table());
}
