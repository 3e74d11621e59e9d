//! Communication-graph reconfiguration after a sensor failure.
//!
//! Each step searches every graph within `budget` edge flips of the current
//! one, keeps the connected candidates and picks the one with the lowest
//! one-hop cost. For a fixed topology the remaining semidefinite variables
//! (weighted Laplacian, connectivity margin, trace bound) are certificates
//! whose feasibility reduces to a connectivity test and a Gramian inversion,
//! so exhaustive enumeration over flips solves the step exactly.
//!
//! Ties are resolved by: lower cost, then fewer flips, then the
//! lexicographically smallest flip list (pairs ascending, additions before
//! removals).

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{
    is_team_oho, oho_cost, one_hop_gramians, CostBreakdown, GramianSet, OneHopGramians, NULL_RTOL, SOLVER_EPSILON,
};
use crate::graph::{edge_flip_distance, is_connected, Graph, CONNECTIVITY_TOL};
use crate::linalg::{min_sym_eigenvalue, RANK_RTOL};
use crate::sensing::{is_collectively_observable, ResourceMatrix, SensorLibrary};

/// Relative tolerance under which two finite costs count as tied.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FlipKind {
    Add,
    Remove,
}

/// Toggle of the unordered pair `(i, j)`, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Flip {
    pub i: usize,
    pub j: usize,
    pub kind: FlipKind,
}

impl Flip {
    fn on(graph: &Graph, i: usize, j: usize) -> Flip {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let kind = if graph.has_edge(i, j) {
            FlipKind::Remove
        } else {
            FlipKind::Add
        };
        Flip { i, j, kind }
    }

    pub fn apply(&self, graph: &mut Graph) {
        match self.kind {
            FlipKind::Add => graph.add_edge(self.i, self.j),
            FlipKind::Remove => graph.remove_edge(self.i, self.j),
        }
    }
}

impl std::fmt::Display for Flip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = match self.kind {
            FlipKind::Add => '+',
            FlipKind::Remove => '-',
        };
        write!(f, "{sign}{}-{}", self.i, self.j)
    }
}

#[derive(Clone, Debug)]
pub struct ReconfigProblem {
    pub prev_graph: Graph,
    pub gamma: ResourceMatrix,
    pub a_e: DMatrix<f64>,
    pub lib: SensorLibrary,
    pub grams: GramianSet,
    pub budget: usize,
    pub max_outer_iters: usize,
}

impl ReconfigProblem {
    /// Problem with the default outer-iteration cap `n(n−1)/2`.
    pub fn new(
        prev_graph: Graph,
        gamma: ResourceMatrix,
        a_e: DMatrix<f64>,
        lib: SensorLibrary,
        grams: GramianSet,
        budget: usize,
    ) -> Result<Self> {
        let n = prev_graph.n();
        let p = ReconfigProblem {
            max_outer_iters: (n * (n - 1) / 2).max(1),
            prev_graph,
            gamma,
            a_e,
            lib,
            grams,
            budget,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidInput("edge-flip budget must be at least 1".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidInput("outer iteration cap must be at least 1".into()));
        }
        let n_e = self.lib.state_dim();
        if self.prev_graph.n() != self.gamma.robots()
            || self.gamma.resources() != self.lib.len()
            || self.grams.len() != self.lib.len()
            || self.a_e.shape() != (n_e, n_e)
            || self.grams.state_dim() != n_e
        {
            return Err(Error::InvalidInput(
                "reconfiguration problem has inconsistent dimensions".into(),
            ));
        }
        Ok(())
    }

    pub fn one_hop(&self, graph: &Graph) -> Result<OneHopGramians> {
        one_hop_gramians(graph, &self.gamma, &self.grams)
    }

    pub fn breakdown(&self, graph: &Graph) -> Result<CostBreakdown> {
        Ok(CostBreakdown::of(&self.one_hop(graph)?))
    }

    pub fn team_oho(&self, graph: &Graph) -> Result<bool> {
        is_team_oho(&self.a_e, graph, &self.gamma, &self.lib, RANK_RTOL, Some(&self.grams))
    }
}

/// Result of one exact budgeted step.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetedStep {
    pub graph: Graph,
    pub flips: Vec<Flip>,
    pub breakdown: CostBreakdown,
    /// Regularized cost (`ε = SOLVER_EPSILON`).
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconfigSolution {
    pub new_graph: Graph,
    /// Flips in the order they were applied.
    pub flips: Vec<Flip>,
    /// Unregularized cost of `new_graph`.
    pub cost: f64,
    pub outer_iters: usize,
    /// Regularized cost after each outer iteration, starting with the input graph.
    pub cost_history: Vec<f64>,
    /// Outer iterations that needed the plateau escape.
    pub escapes: usize,
}

/// All index combinations of size `k` from `0..m`, lexicographic.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] < m - k + pos {
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        idx[pos] += 1;
        for q in (pos + 1)..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

struct Candidate {
    graph: Graph,
    flips: Vec<Flip>,
    breakdown: CostBreakdown,
}

/// Picks the winner among candidates using the documented tie-break order.
fn select_best(cands: &[Candidate]) -> Option<&Candidate> {
    let best_null = cands.iter().map(|c| c.breakdown.null_dims).min()?;
    let pool: Vec<&Candidate> = cands.iter().filter(|c| c.breakdown.null_dims == best_null).collect();
    let best_finite = pool.iter().map(|c| c.breakdown.finite).fold(f64::INFINITY, f64::min);
    let limit = best_finite + TIE_RTOL * best_finite.abs();
    pool.into_iter()
        .filter(|c| c.breakdown.finite <= limit)
        .min_by(|a, b| a.flips.len().cmp(&b.flips.len()).then_with(|| a.flips.cmp(&b.flips)))
}

fn evaluate(problem: &ReconfigProblem, base: &Graph, flips: Vec<Flip>) -> Option<Result<Candidate>> {
    let mut graph = base.clone();
    for f in &flips {
        f.apply(&mut graph);
    }
    if !is_connected(&graph, CONNECTIVITY_TOL) {
        return None;
    }
    Some(problem.breakdown(&graph).map(|breakdown| Candidate {
        graph,
        flips,
        breakdown,
    }))
}

/// Exact minimiser of the regularized one-hop cost over connected graphs
/// within `problem.budget` flips of `base` (the no-flip candidate included).
pub fn solve_budgeted_step(problem: &ReconfigProblem, base: &Graph) -> Result<BudgetedStep> {
    problem.validate()?;
    let pairs = all_pairs(base.n());
    let flip_sets: Vec<Vec<Flip>> = (0..=problem.budget.min(pairs.len()))
        .flat_map(|k| combinations(pairs.len(), k))
        .map(|combo| {
            combo
                .into_iter()
                .map(|p| Flip::on(base, pairs[p].0, pairs[p].1))
                .collect()
        })
        .collect();

    let cands: Vec<Candidate> = flip_sets
        .into_par_iter()
        .filter_map(|flips| evaluate(problem, base, flips))
        .collect::<Result<Vec<_>>>()?;

    let best = select_best(&cands).ok_or(Error::InfeasibleStep { budget: problem.budget })?;
    Ok(BudgetedStep {
        graph: best.graph.clone(),
        flips: best.flips.clone(),
        breakdown: best.breakdown,
        cost: best.breakdown.regularized(SOLVER_EPSILON),
    })
}

/// Used when a budgeted step keeps the graph unchanged although some robot is still not OHO.
fn plateau_escape(problem: &ReconfigProblem, base: &Graph) -> Result<BudgetedStep> {
    let base_cost = problem.breakdown(base)?;
    let pairs = all_pairs(base.n());

    let singles: Vec<Candidate> = pairs
        .par_iter()
        .filter_map(|&(i, j)| evaluate(problem, base, vec![Flip::on(base, i, j)]))
        .collect::<Result<Vec<_>>>()?;
    let improving: Vec<Candidate> = singles
        .into_iter()
        .filter(|c| c.breakdown.compare(&base_cost, TIE_RTOL) == Ordering::Less)
        .collect();
    if let Some(best) = select_best(&improving) {
        return Ok(BudgetedStep {
            graph: best.graph.clone(),
            flips: best.flips.clone(),
            breakdown: best.breakdown,
            cost: best.breakdown.regularized(SOLVER_EPSILON),
        });
    }

    // no flip improves the cost: add the edge that most lifts the weakest singular robot
    let base_grams = problem.one_hop(base)?;
    let singular: Vec<usize> = base_grams
        .grams
        .iter()
        .enumerate()
        .filter(|(_, o)| {
            let lam = crate::linalg::sym_eigenvalues(o);
            let max = lam.last().copied().unwrap_or(0.0);
            lam.first().copied().unwrap_or(0.0) <= NULL_RTOL * max
        })
        .map(|(i, _)| i)
        .collect();
    let mut best: Option<((usize, usize), f64)> = None;
    for &(i, j) in pairs.iter().filter(|&&(i, j)| !base.has_edge(i, j)) {
        let mut g = base.clone();
        g.add_edge(i, j);
        let grams = problem.one_hop(&g)?;
        let score = singular
            .iter()
            .map(|&r| min_sym_eigenvalue(&grams.grams[r]))
            .fold(f64::INFINITY, f64::min);
        let better = match best {
            None => true,
            Some((_, s)) => score > s + 1e-12 * s.abs().max(1.0),
        };
        if better {
            best = Some(((i, j), score));
        }
    }
    let ((i, j), _) = best.ok_or_else(|| {
        Error::Numeric("plateau on the complete graph: one-hop observability cannot be reached".into())
    })?;
    let flip = Flip {
        i,
        j,
        kind: FlipKind::Add,
    };
    let mut graph = base.clone();
    flip.apply(&mut graph);
    let breakdown = problem.breakdown(&graph)?;
    Ok(BudgetedStep {
        graph,
        flips: vec![flip],
        breakdown,
        cost: breakdown.regularized(SOLVER_EPSILON),
    })
}

/// Generates a communication graph under which every robot is one-hop observable.
///
/// Returns [`Error::Infeasible`] when the team is not collectively observable,
/// the input graph unchanged when it is already one-hop observable, and
/// otherwise iterates budgeted steps until it is.
pub fn comm_graph_gen(problem: &ReconfigProblem) -> Result<ReconfigSolution> {
    problem.validate()?;
    if !is_collectively_observable(&problem.a_e, &problem.gamma, &problem.lib) {
        return Err(Error::Infeasible);
    }
    let mut base = problem.prev_graph.clone();
    let mut history = vec![problem.breakdown(&base)?.regularized(SOLVER_EPSILON)];
    if problem.team_oho(&base)? {
        return Ok(ReconfigSolution {
            cost: oho_cost(&problem.one_hop(&base)?, 0.0),
            new_graph: base,
            flips: Vec::new(),
            outer_iters: 0,
            cost_history: history,
            escapes: 0,
        });
    }

    let mut flips = Vec::new();
    let mut escapes = 0;
    for iter in 1..=problem.max_outer_iters {
        let mut step = solve_budgeted_step(problem, &base)?;
        if step.flips.is_empty() {
            escapes += 1;
            step = plateau_escape(problem, &base)?;
        }
        flips.extend(step.flips.iter().copied());
        history.push(step.cost);
        base = step.graph;
        if problem.team_oho(&base)? {
            return Ok(ReconfigSolution {
                cost: oho_cost(&problem.one_hop(&base)?, 0.0),
                new_graph: base,
                flips,
                outer_iters: iter,
                cost_history: history,
                escapes,
            });
        }
    }
    Err(Error::IterationCapExceeded {
        cap: problem.max_outer_iters,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub ok: bool,
    pub issues: Vec<String>,
}

/// Independent recheck of a solution against its problem.
///
/// Connectivity is required whenever the solver changed the graph; an
/// unchanged graph only has to be one-hop observable.
pub fn verify_solution(problem: &ReconfigProblem, solution: &ReconfigSolution) -> Verification {
    let mut issues = Vec::new();
    let g = &solution.new_graph;

    if g.n() != problem.prev_graph.n() {
        issues.push("solution graph has the wrong number of robots".to_string());
        return Verification { ok: false, issues };
    }

    let mut replay = problem.prev_graph.clone();
    for f in &solution.flips {
        let expected = Flip::on(&replay, f.i, f.j).kind;
        if f.i >= f.j || f.kind != expected {
            issues.push(format!("flip {f} does not match the graph it was applied to"));
        }
        f.apply(&mut replay);
    }
    if &replay != g {
        issues.push("replaying the flips does not reproduce the solution graph".to_string());
    }
    if solution.flips.len() > problem.budget * solution.outer_iters {
        issues.push(format!(
            "{} flips exceed budget {} x {} outer iterations",
            solution.flips.len(),
            problem.budget,
            solution.outer_iters
        ));
    }
    match edge_flip_distance(&problem.prev_graph, g) {
        Ok(d) if d > solution.flips.len() => issues.push(format!(
            "graph is {d} flips away but only {} were reported",
            solution.flips.len()
        )),
        Ok(_) => {}
        Err(e) => issues.push(e.to_string()),
    }
    if solution.outer_iters > 0 && !is_connected(g, CONNECTIVITY_TOL) {
        issues.push("solution graph is not connected".to_string());
    }
    match is_team_oho(&problem.a_e, g, &problem.gamma, &problem.lib, RANK_RTOL, None) {
        Ok(true) => {}
        Ok(false) => issues.push("solution graph is not one-hop observable".to_string()),
        Err(e) => issues.push(e.to_string()),
    }
    match one_hop_gramians(g, &problem.gamma, &problem.grams) {
        Ok(grams) => {
            let fresh = oho_cost(&grams, 0.0);
            let same = if fresh.is_finite() && solution.cost.is_finite() {
                (fresh - solution.cost).abs() <= 1e-9 * fresh.abs().max(1e-300)
            } else {
                fresh == solution.cost
            };
            if !same {
                issues.push(format!(
                    "reported cost {} differs from recomputed {fresh}",
                    solution.cost
                ));
            }
        }
        Err(e) => issues.push(e.to_string()),
    }

    Verification {
        ok: issues.is_empty(),
        issues,
    }
}
