//! Build a Δ-disk graph from positions and check connectivity through the
//! Fiedler value, then shrink Δ until the team splits.

use oho_resilience::graph::{
    algebraic_connectivity, build_delta_disk_graph, is_connected, Positions, CONNECTIVITY_TOL,
};

fn main() -> oho_resilience::Result<()> {
    let positions = Positions::from_rows(&[
        vec![0.0, 0.0],
        vec![0.5, 0.0],
        vec![1.0, 0.1],
        vec![1.4, 0.5],
        vec![0.4, 0.6],
    ])?;

    for delta in [0.8, 0.6, 0.5, 0.4] {
        let g = build_delta_disk_graph(&positions, delta)?;
        println!(
            "Δ = {delta:.2}: {} edges, λ₂ = {:.4}, connected = {}",
            g.edge_count(),
            algebraic_connectivity(&g),
            is_connected(&g, CONNECTIVITY_TOL)
        );
        println!("    {:?}", g.edges());
    }
    Ok(())
}
