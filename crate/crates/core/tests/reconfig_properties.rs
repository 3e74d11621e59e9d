mod support;

use oho_resilience::gramian::GramianSet;
use oho_resilience::graph::{edge_flip_distance, is_connected, Graph, CONNECTIVITY_TOL};
use oho_resilience::process::ProcessModel;
use oho_resilience::reconfig::{comm_graph_gen, solve_budgeted_step, verify_solution, FlipKind, ReconfigProblem};
use oho_resilience::sensing::{is_collectively_observable, ResourceMatrix, SensorLibrary};
use oho_resilience::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(graph: Graph, gamma: ResourceMatrix, budget: usize) -> ReconfigProblem {
    let model = ProcessModel::application();
    let lib = SensorLibrary::application(model.drones);
    let set = GramianSet::compute(&model.a_e, &lib, 1.0).unwrap();
    ReconfigProblem::new(graph, gamma, model.a_e, lib, set, budget).unwrap()
}

fn observable_instance(rng: &mut ChaCha8Rng, n: usize) -> ReconfigProblem {
    loop {
        let g = support::random_connected_graph(rng, n, 0.15);
        let gamma = support::random_gamma(rng, n, 5);
        let p = problem(g, gamma, 1);
        if is_collectively_observable(&p.a_e, &p.gamma, &p.lib) {
            return p;
        }
    }
}

#[test]
fn solutions_are_deterministic_and_verified() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..15 {
        let n = rng.random_range(3..8);
        let p = observable_instance(&mut rng, n);
        let a = comm_graph_gen(&p).unwrap();
        let b = comm_graph_gen(&p).unwrap();
        assert_eq!(a, b);
        assert!(verify_solution(&p, &a).ok);
        assert!(is_connected(&a.new_graph, CONNECTIVITY_TOL));
        assert!(p.team_oho(&a.new_graph).unwrap());
        assert_eq!(edge_flip_distance(&p.prev_graph, &a.new_graph).unwrap(), a.flips.len());
    }
}

#[test]
fn relabelling_the_team_relabels_the_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let n = rng.random_range(3..7);
        let p = observable_instance(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut rows = vec![Vec::new(); n];
        for (i, row) in p.gamma.to_rows().into_iter().enumerate() {
            rows[perm[i]] = row;
        }
        let q = problem(
            p.prev_graph.relabel(&perm),
            ResourceMatrix::from_rows(&rows).unwrap(),
            1,
        );
        let base_p = p.breakdown(&p.prev_graph).unwrap();
        let base_q = q.breakdown(&q.prev_graph).unwrap();
        assert_eq!(base_p.null_dims, base_q.null_dims);
        assert!((base_p.finite - base_q.finite).abs() <= 1e-9 * base_p.finite.abs().max(1.0));

        let sp = solve_budgeted_step(&p, &p.prev_graph).unwrap();
        let sq = solve_budgeted_step(&q, &q.prev_graph).unwrap();
        assert_eq!(sp.breakdown.null_dims, sq.breakdown.null_dims);
        assert!((sp.breakdown.finite - sq.breakdown.finite).abs() <= 1e-9 * sp.breakdown.finite.abs().max(1.0));
    }
}

#[test]
fn budgeted_step_never_increases_the_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let n = rng.random_range(3..7);
        let p = observable_instance(&mut rng, n);
        let base = p.breakdown(&p.prev_graph).unwrap();
        let step = solve_budgeted_step(&p, &p.prev_graph).unwrap();
        assert!(step.flips.len() <= 1);
        assert_ne!(step.breakdown.compare(&base, 1e-9), std::cmp::Ordering::Greater);
    }
}

#[test]
fn already_oho_input_is_returned_unchanged() {
    let gamma = ResourceMatrix::from_rows(&[vec![1, 1, 1, 0, 0], vec![0, 0, 0, 1, 1], vec![1, 0, 0, 0, 0]]).unwrap();
    let p = problem(Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap(), gamma, 1);
    let s = comm_graph_gen(&p).unwrap();
    assert!(s.flips.is_empty());
    assert_eq!(s.new_graph, p.prev_graph);
}

#[test]
fn unobservable_team_is_infeasible() {
    let gamma = ResourceMatrix::from_rows(&[vec![0, 1, 0, 0, 0], vec![0, 0, 1, 1, 0]]).unwrap();
    let p = problem(Graph::from_edges(2, &[(0, 1)]).unwrap(), gamma, 1);
    assert!(matches!(comm_graph_gen(&p), Err(Error::Infeasible)));
}

#[test]
fn isolated_sensor_is_reached_by_an_added_edge() {
    // robot 2 alone holds the x-heavy sensor; robot 0 needs a link to it
    let gamma = ResourceMatrix::from_rows(&[vec![0, 1, 0, 0, 0], vec![0, 0, 1, 0, 0], vec![1, 0, 0, 0, 0]]).unwrap();
    let p = problem(Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap(), gamma, 1);
    let s = comm_graph_gen(&p).unwrap();
    assert_eq!(s.flips.len(), 1);
    assert_eq!((s.flips[0].i, s.flips[0].j, s.flips[0].kind), (0, 2, FlipKind::Add));
}
