//! Drive scattered robots into a desired communication graph with the
//! finite-time barrier controller.

use oho_resilience::controller::{run_assembly, BarrierSpec, DesiredEdges};
use oho_resilience::graph::{build_delta_disk_graph, Positions};

fn main() -> oho_resilience::Result<()> {
    let spec = BarrierSpec {
        delta: 1.0,
        u_max: 0.2,
        dt: 0.02,
        ..Default::default()
    };
    let start = Positions::from_rows(&[
        vec![0.0, 0.0],
        vec![4.0, 0.5],
        vec![2.0, 3.0],
        vec![6.0, 4.0],
        vec![0.5, 5.0],
    ])?;
    let desired = DesiredEdges::new([(0, 1), (1, 2), (1, 3), (2, 4)])?;

    let run = run_assembly(&start, &desired, &spec, 100_000)?;
    println!(
        "complete: {} after {} steps ({:.1} s)",
        run.complete,
        run.steps,
        run.steps as f64 * spec.dt
    );
    println!("steps with relaxed attraction: {}", run.relaxed_steps);
    println!(
        "smallest barrier on established links: {:.3e}",
        run.min_established_barrier
    );
    for (i, j) in desired.iter() {
        println!("    ({i},{j}) at {:.3} Δ", run.positions.distance(i, j) / spec.delta);
    }
    let g = build_delta_disk_graph(&run.positions, spec.delta)?;
    println!("final Δ-disk edges: {:?}", g.edges());
    Ok(())
}
