//! A resource failure leaves one robot without a full view of the drones;
//! the budgeted search adds the fewest links that restore it.

use oho_resilience::gramian::{non_oho_robots, GramianSet};
use oho_resilience::graph::Graph;
use oho_resilience::process::ProcessModel;
use oho_resilience::reconfig::{comm_graph_gen, verify_solution, ReconfigProblem};
use oho_resilience::sensing::{apply_failure, classify_failure, FailureEvent, ResourceMatrix, SensorLibrary};

fn main() -> oho_resilience::Result<()> {
    let model = ProcessModel::application();
    let lib = SensorLibrary::application(model.drones);
    let grams = GramianSet::compute(&model.a_e, &lib, 1.0)?;

    // only robot 0 carries the x-heavy sensor; robot 2's tilted sensor covers x for 2 and 3
    let gamma = ResourceMatrix::from_rows(&[
        vec![1, 0, 0, 0, 0],
        vec![0, 1, 1, 0, 0],
        vec![0, 1, 0, 0, 1],
        vec![0, 0, 1, 0, 0],
    ])?;
    let graph = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)])?;
    println!(
        "before: non-OHO robots {:?}",
        non_oho_robots(&model.a_e, &graph, &gamma, &lib)
    );

    let event = FailureEvent {
        iteration: 0,
        robot: 2,
        resource: 4,
    };
    let gamma = apply_failure(&gamma, &event)?;
    println!("failure class: {:?}", classify_failure(&gamma, &model.a_e, &lib, 1e-8));
    println!(
        "after:  non-OHO robots {:?}",
        non_oho_robots(&model.a_e, &graph, &gamma, &lib)
    );

    let problem = ReconfigProblem::new(graph, gamma, model.a_e.clone(), lib, grams, 1)?;
    let solution = comm_graph_gen(&problem)?;
    let flips: Vec<String> = solution.flips.iter().map(|f| f.to_string()).collect();
    println!("flips: {}", flips.join(" "));
    println!("new edges: {:?}", solution.new_graph.edges());
    println!(
        "cost: {:.6e} after {} outer iterations",
        solution.cost, solution.outer_iters
    );
    println!("verified: {}", verify_solution(&problem, &solution).ok);
    Ok(())
}
