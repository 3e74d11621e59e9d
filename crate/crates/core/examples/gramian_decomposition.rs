//! Sensor Gramians of the drone-tracking process: the sum over sensors equals
//! the Gramian of the stacked sensor, and one-hop Gramians are weighted sums.

use oho_resilience::gramian::{one_hop_gramians, sensor_gramian, GramianSet};
use oho_resilience::graph::Graph;
use oho_resilience::linalg::{frobenius_rel_err, min_sym_eigenvalue};
use oho_resilience::process::ProcessModel;
use oho_resilience::sensing::{ResourceMatrix, SensorLibrary};

fn main() -> oho_resilience::Result<()> {
    let model = ProcessModel::application();
    let lib = SensorLibrary::application(model.drones);

    for horizon in [0.5, 1.0, 3.0] {
        let set = GramianSet::compute(&model.a_e, &lib, horizon)?;
        let stacked = sensor_gramian(&model.a_e, &lib.stacked(), horizon)?;
        println!(
            "T = {horizon}: ‖ΣΘ_k − Θ‖/‖Θ‖ = {:.2e}",
            frobenius_rel_err(&set.total(), &stacked)
        );
    }

    // three robots in a line, each with one position sensor
    let set = GramianSet::compute(&model.a_e, &lib, 1.0)?;
    println!("λ_min(ΣΘ_k) = {:.3e}", min_sym_eigenvalue(&set.total()));
    let gamma = ResourceMatrix::from_rows(&[vec![1, 0, 0, 0, 0], vec![0, 1, 0, 0, 0], vec![0, 0, 1, 0, 0]])?;
    let line = Graph::from_edges(3, &[(0, 1), (1, 2)])?;
    let grams = one_hop_gramians(&line, &gamma, &set)?;
    for (i, l) in grams.min_eigenvalues().iter().enumerate() {
        println!("robot {i}: λ_min(O_i) = {l:.3e}");
    }
    Ok(())
}
