//! Print the compute kernel generated for a system and check it with the
//! shader front end.
//!
//! cargo run --example kernel_source -- [builtin] [row|column]

use swarm::expr::codegen::control_flow_sites;
use swarm::expr::emit_kernel_source;
use swarm::Layout;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "lorenz".into());
    let layout: Layout = args.next().as_deref().unwrap_or("column").parse()?;

    let def = swarm::systems::builtin(&name)?;
    let kernel = emit_kernel_source(&def, layout)?;
    println!("{}", kernel.source);
    kernel.validate()?;
    eprintln!(
        "{}: {} lines, entry point {}, workgroup size {}, control flow at {:?}",
        def.name,
        kernel.source.lines().count(),
        kernel.entry_point,
        kernel.workgroup_size,
        control_flow_sites(&kernel.source).iter().map(|s| s.line).collect::<Vec<_>>()
    );
    Ok(())
}
