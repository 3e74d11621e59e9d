//! Closed-loop experiment driver: monitor, inject failures, reconfigure,
//! assemble, resume.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::controller::{assembly_complete, step_assembly, DesiredEdges};
use crate::error::{Error, Result};
use crate::estimator::{kf_step, robot_estimate_error, EstimateError, KalmanState};
use crate::gramian::{non_oho_robots, one_hop_gramians, GramianSet};
use crate::graph::{build_delta_disk_graph, Graph};
use crate::linalg::{vstack, RANK_RTOL};
use crate::process::{initial_circle, ProcessSimulator};
use crate::reconfig::{comm_graph_gen, verify_solution, Flip, ReconfigProblem};
use crate::sensing::{apply_failure, classify_failure, robot_measurement_matrix, FailureClass, FailureEvent};

use super::config::ScenarioConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Monitoring,
    Reconfiguring,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Monitoring => "monitoring",
            Phase::Reconfiguring => "reconfiguring",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub t: f64,
    pub phase: Phase,
    pub errors: Vec<EstimateError>,
    /// `λ_min(O_i)` under the current Δ-disk graph and resources.
    pub min_eig: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    pub cumulative_flips: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailureRecord {
    pub event: FailureEvent,
    pub class: FailureClass,
    /// Robots that were one-hop observable before the failure and are not after it.
    pub stricken: Vec<usize>,
    pub base_edges: Vec<(usize, usize)>,
    pub flips: Vec<Flip>,
    pub target_edges: Vec<(usize, usize)>,
    /// Cost of the target graph; absent when the run stopped at this event.
    pub cost: Option<f64>,
    pub target_team_oho: bool,
    /// `λ_min(O_i)` of every robot under the target graph.
    pub target_min_eig: Vec<f64>,
    /// Iteration at which assembly finished, if the event needed it and it finished.
    pub assembled_at: Option<usize>,
}

impl FailureRecord {
    pub fn needs_reconfiguration(&self) -> bool {
        !self.flips.is_empty()
    }

    /// Iterations between the failure and the end of assembly.
    pub fn assembly_iters(&self) -> Option<usize> {
        self.assembled_at.map(|a| a - self.event.iteration)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// A failure broke collective observability; the team returns to base.
    Catastrophic {
        iteration: usize,
    },
    /// The reconfiguration solver reported an error.
    ReconfigFailed {
        iteration: usize,
        reason: String,
    },
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Completed => "completed".into(),
            RunStatus::Catastrophic { iteration } => format!("catastrophic at iteration {iteration}"),
            RunStatus::ReconfigFailed { iteration, reason } => {
                format!("reconfiguration failed at iteration {iteration}: {reason}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsLog {
    pub robots: usize,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub failures: Vec<FailureRecord>,
    /// Iteration and edge list whenever the Δ-disk graph changes, starting at iteration 0.
    pub topology: Vec<(usize, Vec<(usize, usize)>)>,
    pub status: RunStatus,
}

impl MetricsLog {
    pub fn total_flips(&self) -> usize {
        self.failures.iter().map(|f| f.flips.len()).sum()
    }

    /// Cost of the last reconfiguration target, if any event occurred.
    pub fn final_cost(&self) -> Option<f64> {
        self.failures.iter().rev().find_map(|f| f.cost)
    }

    /// Record for iteration `iter`, if it was logged.
    pub fn record(&self, iter: usize) -> Option<&IterationRecord> {
        let first = self.records.first()?.iter;
        self.records.get(iter.checked_sub(first)?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Re-check every solver output independently and fail on disagreement.
    pub verify: bool,
}

fn min_eigs(graph: &Graph, gamma: &crate::sensing::ResourceMatrix, grams: &GramianSet) -> Result<Vec<f64>> {
    Ok(one_hop_gramians(graph, gamma, grams)?.min_eigenvalues())
}

pub fn run_experiment(config: &ScenarioConfig) -> Result<MetricsLog> {
    run_experiment_with(config, RunOptions::default())
}

pub fn run_experiment_with(config: &ScenarioConfig, opts: RunOptions) -> Result<MetricsLog> {
    config.validate()?;
    let n = config.team.robots;
    let delta = config.team.delta;
    let dt = config.estimator.dt;
    let lib = config.sensor_library()?;
    let model = config.process_model()?;
    let a_e = model.a_e.clone();
    let grams = GramianSet::compute(&a_e, &lib, config.horizon)?;
    let sim = ProcessSimulator::new(model, dt)?;
    let disc = sim.discretized().clone();
    let spec = config.barrier_spec();
    let n_e = lib.state_dim();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut truth = initial_circle(config.process.drones, config.process.radius, config.process.z0)?;
    let mut filters = vec![KalmanState::diffuse(n_e, config.estimator.p0); n];
    let mut positions = config.initial_positions()?;
    let mut gamma = config.initial_gamma()?;
    let mut graph = build_delta_disk_graph(&positions, delta)?;
    let mut robot_h: Vec<DMatrix<f64>> = (0..n).map(|i| robot_measurement_matrix(&gamma, &lib, i)).collect();
    let mut eigs = min_eigs(&graph, &gamma, &grams)?;
    let mut stale_eigs = false;

    let mut phase = Phase::Monitoring;
    let mut target: Option<Graph> = None;
    let mut pending: Vec<usize> = Vec::new();
    let mut cumulative_flips = 0;
    let mut failures: Vec<FailureRecord> = Vec::new();
    let mut topology = vec![(0, graph.edges())];
    let mut records = Vec::with_capacity(config.iterations);
    let mut status = RunStatus::Completed;
    let mut next_event = 0;

    'outer: for iter in 1..=config.iterations {
        while next_event < config.failures.len() && config.failures[next_event].iteration == iter {
            let ev = config.failures[next_event];
            next_event += 1;
            let before = gamma.clone();
            gamma = apply_failure(&gamma, &ev)?;
            robot_h[ev.robot] = robot_measurement_matrix(&gamma, &lib, ev.robot);
            let base = target.clone().unwrap_or_else(|| graph.clone());
            let was_bad = non_oho_robots(&a_e, &base, &before, &lib);
            let stricken: Vec<usize> = non_oho_robots(&a_e, &base, &gamma, &lib)
                .into_iter()
                .filter(|i| !was_bad.contains(i))
                .collect();
            let class = classify_failure(&gamma, &a_e, &lib, RANK_RTOL);
            let mut rec = FailureRecord {
                event: ev,
                class,
                stricken,
                base_edges: base.edges(),
                flips: Vec::new(),
                target_edges: base.edges(),
                cost: None,
                target_team_oho: false,
                target_min_eig: Vec::new(),
                assembled_at: None,
            };
            if class == FailureClass::Catastrophic {
                failures.push(rec);
                status = RunStatus::Catastrophic { iteration: iter };
                break 'outer;
            }

            let mut problem = ReconfigProblem::new(
                base.clone(),
                gamma.clone(),
                a_e.clone(),
                lib.clone(),
                grams.clone(),
                config.reconfig.budget,
            )?;
            if let Some(cap) = config.reconfig.max_outer_iters {
                problem.max_outer_iters = cap;
            }
            let solution = match comm_graph_gen(&problem) {
                Ok(s) => s,
                Err(e @ (Error::Infeasible | Error::InfeasibleStep { .. } | Error::IterationCapExceeded { .. })) => {
                    failures.push(rec);
                    status = RunStatus::ReconfigFailed {
                        iteration: iter,
                        reason: e.to_string(),
                    };
                    break 'outer;
                }
                Err(e) => return Err(e),
            };
            if opts.verify {
                let check = verify_solution(&problem, &solution);
                if !check.ok {
                    return Err(Error::Numeric(format!(
                        "solution for failure at iteration {iter} failed verification: {}",
                        check.issues.join("; ")
                    )));
                }
            }

            rec.flips = solution.flips.clone();
            rec.target_edges = solution.new_graph.edges();
            rec.cost = Some(solution.cost);
            rec.target_team_oho = problem.team_oho(&solution.new_graph)?;
            rec.target_min_eig = min_eigs(&solution.new_graph, &gamma, &grams)?;
            cumulative_flips += solution.flips.len();
            let idx = failures.len();
            failures.push(rec);
            if !solution.flips.is_empty() {
                target = Some(solution.new_graph);
                phase = Phase::Reconfiguring;
                pending.push(idx);
            } else if phase == Phase::Reconfiguring {
                pending.push(idx);
            }
            stale_eigs = true;
        }

        if let Some(tg) = &target {
            let desired = DesiredEdges::from_graph(tg);
            if assembly_complete(&positions, &desired, delta) {
                for &k in &pending {
                    failures[k].assembled_at = Some(iter);
                }
                pending.clear();
                target = None;
                phase = Phase::Monitoring;
            } else {
                positions = step_assembly(&positions, &desired, &spec)?;
            }
        }

        let new_graph = build_delta_disk_graph(&positions, delta)?;
        if new_graph != graph {
            graph = new_graph;
            topology.push((iter, graph.edges()));
            stale_eigs = true;
        }
        if stale_eigs {
            eigs = min_eigs(&graph, &gamma, &grams)?;
            stale_eigs = false;
        }

        let u_prev = config.process.leader_input.at(truth.t);
        truth = sim.step(&truth, &mut rng);

        let measurements: Vec<DVector<f64>> = robot_h
            .iter()
            .map(|h| {
                let noise = DVector::from_iterator(
                    h.nrows(),
                    (0..h.nrows()).map(|_| rng.sample::<f64, _>(StandardNormal) * config.estimator.r_scale.sqrt()),
                );
                h * &truth.e + noise
            })
            .collect();

        filters = filters
            .par_iter()
            .enumerate()
            .map(|(i, state)| {
                let nbhd = graph.closed_neighborhood(i);
                let hs: Vec<&DMatrix<f64>> = nbhd.iter().map(|&j| &robot_h[j]).collect();
                let h = vstack(&hs, n_e);
                let y = DVector::from_iterator(h.nrows(), nbhd.iter().flat_map(|&j| measurements[j].iter().copied()));
                kf_step(state, &disc, u_prev, &y, &h, &config.measurement_cov(h.nrows()))
            })
            .collect::<Result<Vec<_>>>()?;

        records.push(IterationRecord {
            iter,
            t: truth.t,
            phase,
            errors: filters.iter().map(|f| robot_estimate_error(f, &truth.e)).collect(),
            min_eig: eigs.clone(),
            edges: graph.edges(),
            cumulative_flips,
        });
    }

    Ok(MetricsLog {
        robots: n,
        seed: config.seed,
        records,
        failures,
        topology,
        status,
    })
}
