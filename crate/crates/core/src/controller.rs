//! Finite-time barrier controller that drives single-integrator robots until
//! every desired communication edge exists in the Δ-disk graph.
//!
//! For a desired edge `(i, j)` the barrier is `h_ij = r² − ‖x_i − x_j‖²` and
//! each endpoint enforces half of the finite-time condition,
//! `−2(x_i − x_j)ᵀu_i + ᾱ(h_ij)/2 ≥ 0` with `ᾱ(h) = γ·sign(h)·|h|^ρ`.
//! The controller radius `r` sits inside the completion radius, which sits
//! inside the interaction radius Δ, so edges neither chatter at the
//! Δ-disk boundary nor at the completion check.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Positions};

/// Desired edges count as established within this fraction of Δ.
pub const ASSEMBLE_RATIO: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    /// Interaction radius Δ (m).
    pub delta: f64,
    pub rho: f64,
    pub gamma_gain: f64,
    /// Speed cap per robot (m/s).
    pub u_max: f64,
    pub dt: f64,
    /// Controller barrier radius as a fraction of Δ; below [`ASSEMBLE_RATIO`].
    pub target_ratio: f64,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        BarrierSpec {
            delta: 1.0,
            rho: 0.5,
            gamma_gain: 1.0,
            u_max: 0.2,
            dt: 0.01,
            target_ratio: 0.9,
        }
    }
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidInput(format!("barrier spec: {what} = {v}")));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta", self.delta);
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho", self.rho);
        }
        if !(self.gamma_gain > 0.0) {
            return bad("gamma_gain", self.gamma_gain);
        }
        if !(self.u_max > 0.0) {
            return bad("u_max", self.u_max);
        }
        if !(self.dt > 0.0) {
            return bad("dt", self.dt);
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= ASSEMBLE_RATIO) {
            return bad("target_ratio", self.target_ratio);
        }
        Ok(())
    }

    pub fn target_radius(&self) -> f64 {
        self.target_ratio * self.delta
    }
}

/// Edge set of the communication graph to be assembled.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DesiredEdges {
    edges: BTreeSet<(usize, usize)>,
}

impl DesiredEdges {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = BTreeSet::new();
        for (i, j) in pairs {
            if i == j {
                return Err(Error::InvalidInput(format!("desired edge ({i}, {i}) is a self pair")));
            }
            edges.insert((i.min(j), i.max(j)));
        }
        Ok(DesiredEdges { edges })
    }

    pub fn from_graph(g: &Graph) -> Self {
        DesiredEdges {
            edges: g.edges().into_iter().collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn neighbors_of(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// `Δ² − ‖x_i − x_j‖²`.
pub fn barrier_value(x_i: &DVector<f64>, x_j: &DVector<f64>, delta: f64) -> f64 {
    delta * delta - (x_i - x_j).norm_squared()
}

/// `γ·sign(h)·|h|^ρ`.
pub fn class_k_alpha(spec: &BarrierSpec, h: f64) -> f64 {
    if h == 0.0 {
        0.0
    } else {
        spec.gamma_gain * h.signum() * h.abs().powf(spec.rho)
    }
}

/// Solve the `k×k` system `M x = b` for small dense `M`; `None` if singular.
fn solve_small(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = m.amax().max(1e-300);
    let lu = m.clone().full_piv_lu();
    let det = lu.determinant();
    if det.abs() <= 1e-12 * scale.powi(m.nrows() as i32) {
        return None;
    }
    lu.solve(b)
}

fn index_subsets(m: usize, max_size: usize) -> Vec<Vec<usize>> {
    fn extend(from: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for k in from..m {
            cur.push(k);
            extend(k + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, m, max_size, &mut Vec::new(), &mut out);
    out
}

/// Minimum-norm `u` with `a_kᵀu ≥ b_k` for every `k`, by active-set enumeration.
///
/// The optimum is the projection of the origin onto a face spanned by at most
/// `d` linearly independent constraints, so it is the smallest feasible
/// candidate among those projections. Returns `None` when infeasible.
pub fn min_norm_qp(a: &[DVector<f64>], b: &[f64]) -> Option<DVector<f64>> {
    assert_eq!(a.len(), b.len());
    let d = a.first().map(|v| v.len())?;
    let m = a.len();
    let scale = a.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).max(1.0)
        * b.iter().map(|v| v.abs()).fold(0.0_f64, f64::max).max(1.0);
    let feasible = |u: &DVector<f64>| (0..m).all(|k| a[k].dot(u) >= b[k] - 1e-12 * scale);

    let mut best: Option<DVector<f64>> = None;
    for set in index_subsets(m, d.min(m)) {
        let u = if set.is_empty() {
            DVector::zeros(d)
        } else {
            let rows = DMatrix::from_fn(set.len(), d, |r, c| a[set[r]][c]);
            let gram = &rows * rows.transpose();
            let rhs = DVector::from_iterator(set.len(), set.iter().map(|&k| b[k]));
            match solve_small(&gram, &rhs) {
                Some(lambda) => rows.transpose() * lambda,
                None => continue,
            }
        };
        if feasible(&u) && best.as_ref().is_none_or(|bu| u.norm_squared() < bu.norm_squared()) {
            best = Some(u);
        }
    }
    best
}

/// Penalty weight on squared constraint violation in [`soft_min_norm`].
pub const SOFT_WEIGHT: f64 = 100.0;

/// Minimiser of `‖u‖² + w Σ max(0, b_k − a_kᵀu)²`.
///
/// The optimum is the closed-form minimiser for its own violated set, so the
/// best objective over all candidate sets is exact.
pub fn soft_min_norm(a: &[DVector<f64>], b: &[f64], w: f64) -> DVector<f64> {
    assert_eq!(a.len(), b.len());
    let d = a.first().map(|v| v.len()).unwrap_or(0);
    let objective = |u: &DVector<f64>| {
        u.norm_squared()
            + w * a
                .iter()
                .zip(b)
                .map(|(ak, bk)| (bk - ak.dot(u)).max(0.0).powi(2))
                .sum::<f64>()
    };
    let mut best = DVector::zeros(d);
    let mut best_obj = objective(&best);
    for set in index_subsets(a.len(), a.len()).into_iter().skip(1) {
        let mut m = DMatrix::identity(d, d);
        let mut rhs = DVector::zeros(d);
        for &k in &set {
            m += &a[k] * a[k].transpose() * w;
            rhs += &a[k] * (w * b[k]);
        }
        let Some(u) = m.cholesky().map(|c| c.solve(&rhs)) else {
            continue;
        };
        let obj = objective(&u);
        if obj < best_obj {
            best = u;
            best_obj = obj;
        }
    }
    best
}

/// Control decision for one robot.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlAction {
    pub u: DVector<f64>,
    /// The constraint set was infeasible; attraction is soft and only links
    /// already within Δ are enforced.
    pub relaxed: bool,
}

/// Constraint `aᵀu ≥ b` for robot `i` that keeps a link already within Δ
/// inside Δ after one Euler step of both endpoints at speed at most `u_max`.
///
/// The decay is capped at `h / dt` and the margin `4 dt u_max²` absorbs the
/// second-order term of the step. With `margin = false` the margin is dropped
/// and `u = 0` is always feasible.
fn hold_constraint(
    spec: &BarrierSpec,
    xi: &DVector<f64>,
    xj: &DVector<f64>,
    margin: bool,
) -> Option<(DVector<f64>, f64)> {
    let h = barrier_value(xi, xj, spec.delta);
    let normal = (xi - xj) * -2.0;
    if h < 0.0 || normal.norm() == 0.0 {
        return None;
    }
    let decay = class_k_alpha(spec, h).min(h / spec.dt);
    let extra = if margin {
        4.0 * spec.dt * spec.u_max * spec.u_max
    } else {
        0.0
    };
    Some((normal, (extra - decay) / 2.0))
}

/// Minimum-effort velocity for robot `i` toward its desired neighbours, at most `u_max`.
///
/// Attraction uses the barrier at the target radius. Desired links already
/// within Δ are also held by a discrete-time barrier at Δ, which is never
/// given up: when attraction is infeasible it becomes a soft penalty, and the
/// speed limit moves the command toward the smallest holding velocity.
pub fn min_norm_control(
    i: usize,
    positions: &Positions,
    desired_neighbors: &[usize],
    spec: &BarrierSpec,
) -> Result<ControlAction> {
    let d = positions.dim();
    let r = spec.target_radius();
    let xi = positions.point(i);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut hold = Vec::new();
    let mut hold_loose = Vec::new();
    for &j in desired_neighbors {
        if j == i || j >= positions.len() {
            return Err(Error::InvalidInput(format!(
                "robot {i} cannot have desired neighbour {j}"
            )));
        }
        let xj = positions.point(j);
        let normal = (xi - xj) * -2.0;
        if normal.norm() == 0.0 {
            // coincident robots: h = r² > 0, the constraint holds for every u
            continue;
        }
        a.push(normal);
        b.push(-class_k_alpha(spec, barrier_value(xi, xj, r)) / 2.0);
        hold.extend(hold_constraint(spec, xi, xj, true));
        hold_loose.extend(hold_constraint(spec, xi, xj, false));
    }
    if b.iter().all(|&v| v <= 0.0) && hold.iter().all(|(_, v)| *v <= 0.0) {
        return Ok(ControlAction {
            u: DVector::zeros(d),
            relaxed: false,
        });
    }

    let (hold_a, hold_b): (Vec<_>, Vec<_>) = hold.into_iter().unzip();
    let (hold_a, hold_b, base) = match min_norm_qp(&hold_a, &hold_b) {
        Some(u) if u.norm() <= spec.u_max => (hold_a, hold_b, u),
        _ if hold_a.is_empty() => (hold_a, hold_b, DVector::zeros(d)),
        _ => {
            let (la, lb): (Vec<_>, Vec<_>) = hold_loose.into_iter().unzip();
            (la, lb, DVector::zeros(d))
        }
    };

    let mut all_a = a.clone();
    all_a.extend(hold_a.iter().cloned());
    let mut all_b = b.clone();
    all_b.extend(hold_b.iter().copied());
    let (u, relaxed) = match min_norm_qp(&all_a, &all_b) {
        Some(u) => (u, false),
        None => (
            project_onto(&soft_min_norm(&a, &b, SOFT_WEIGHT), &hold_a, &hold_b),
            true,
        ),
    };
    Ok(ControlAction {
        u: limit_speed(&u, &base, spec.u_max),
        relaxed,
    })
}

/// Closest point to `u` in `{v : a_kᵀv ≥ b_k}`, a set known to be non-empty.
fn project_onto(u: &DVector<f64>, a: &[DVector<f64>], b: &[f64]) -> DVector<f64> {
    if a.is_empty() {
        return u.clone();
    }
    let shifted: Vec<f64> = a.iter().zip(b).map(|(ak, bk)| bk - ak.dot(u)).collect();
    min_norm_qp(a, &shifted).map_or_else(|| u.clone(), |w| u + w)
}

/// Furthest point from `base` toward `u` with norm at most `u_max`;
/// `base` itself is assumed to satisfy the bound.
fn limit_speed(u: &DVector<f64>, base: &DVector<f64>, u_max: f64) -> DVector<f64> {
    if u.norm() <= u_max {
        return u.clone();
    }
    let dir = u - base;
    // ‖base + t·dir‖ = u_max, positive root
    let qa = dir.norm_squared();
    let qb = 2.0 * base.dot(&dir);
    let qc = base.norm_squared() - u_max * u_max;
    let t = ((-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
    base + dir * t
}

/// One synchronous Euler step of every robot under its min-norm control.
pub fn step_assembly(positions: &Positions, desired: &DesiredEdges, spec: &BarrierSpec) -> Result<Positions> {
    let moves = (0..positions.len())
        .map(|i| {
            let nbrs = desired.neighbors_of(i);
            min_norm_control(i, positions, &nbrs, spec).map(|c| c.u * spec.dt)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(positions.displaced(&moves))
}

/// Every desired pair is within `ASSEMBLE_RATIO · Δ`.
pub fn assembly_complete(positions: &Positions, desired: &DesiredEdges, delta: f64) -> bool {
    desired
        .iter()
        .all(|(i, j)| positions.distance(i, j) <= ASSEMBLE_RATIO * delta)
}

/// Outcome of running the controller to completion.
#[derive(Clone, Debug)]
pub struct AssemblyRun {
    pub positions: Positions,
    pub steps: usize,
    pub complete: bool,
    /// Smallest `Δ² − ‖x_i − x_j‖²` seen on a desired edge after it first became nonnegative.
    pub min_established_barrier: f64,
    pub relaxed_steps: usize,
}

/// Steps the controller until assembly completes or `max_steps` is reached.
pub fn run_assembly(
    start: &Positions,
    desired: &DesiredEdges,
    spec: &BarrierSpec,
    max_steps: usize,
) -> Result<AssemblyRun> {
    spec.validate()?;
    let edges: Vec<(usize, usize)> = desired.iter().collect();
    let mut established: Vec<bool> = edges
        .iter()
        .map(|&(i, j)| barrier_value(start.point(i), start.point(j), spec.delta) >= 0.0)
        .collect();
    let mut min_est = f64::INFINITY;
    let mut pos = start.clone();
    let mut steps = 0;
    let mut relaxed_steps = 0;
    while !assembly_complete(&pos, desired, spec.delta) && steps < max_steps {
        let mut any_relaxed = false;
        let moves = (0..pos.len())
            .map(|i| {
                let c = min_norm_control(i, &pos, &desired.neighbors_of(i), spec)?;
                any_relaxed |= c.relaxed;
                Ok(c.u * spec.dt)
            })
            .collect::<Result<Vec<_>>>()?;
        pos = pos.displaced(&moves);
        steps += 1;
        relaxed_steps += any_relaxed as usize;
        for (k, &(i, j)) in edges.iter().enumerate() {
            let h = barrier_value(pos.point(i), pos.point(j), spec.delta);
            if established[k] {
                min_est = min_est.min(h);
            } else if h >= 0.0 {
                established[k] = true;
            }
        }
    }
    Ok(AssemblyRun {
        complete: assembly_complete(&pos, desired, spec.delta),
        positions: pos,
        steps,
        min_established_barrier: min_est,
        relaxed_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn barrier_examples() {
        assert_eq!(barrier_value(&v(&[1.0, 1.0]), &v(&[1.0, 1.0]), 1.0), 1.0);
        assert!(barrier_value(&v(&[0.0, 0.0]), &v(&[0.6, 0.8]), 1.0).abs() < 1e-15);
        assert_eq!(barrier_value(&v(&[0.0, 0.0]), &v(&[3.0, 0.0]), 2.0), -5.0);
    }

    #[test]
    fn alpha_examples() {
        let spec = BarrierSpec {
            gamma_gain: 2.0,
            rho: 0.5,
            ..Default::default()
        };
        assert_eq!(class_k_alpha(&spec, 0.0), 0.0);
        assert!((class_k_alpha(&spec, 4.0) - 4.0).abs() < 1e-15);
        let unit = BarrierSpec {
            gamma_gain: 1.0,
            rho: 0.5,
            ..Default::default()
        };
        assert!((class_k_alpha(&unit, -9.0) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn satisfied_neighbor_needs_no_input() {
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let c = min_norm_control(0, &p, &[1], &BarrierSpec::default()).unwrap();
        assert_eq!(c.u, DVector::zeros(2));
    }

    #[test]
    fn single_violated_constraint_closed_form() {
        let spec = BarrierSpec {
            u_max: 100.0,
            ..Default::default()
        };
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![3.0, 1.0]]).unwrap();
        let a = (p.point(0) - p.point(1)) * -2.0;
        let h = barrier_value(p.point(0), p.point(1), spec.target_radius());
        let b = -class_k_alpha(&spec, h) / 2.0;
        let expected = &a * (b / a.norm_squared());
        let c = min_norm_control(0, &p, &[1], &spec).unwrap();
        assert!((c.u - expected).norm() < 1e-14);
        assert!(!c.relaxed);
    }

    #[test]
    fn speed_is_clipped() {
        let spec = BarrierSpec {
            u_max: 0.05,
            ..Default::default()
        };
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        let c = min_norm_control(0, &p, &[1], &spec).unwrap();
        assert!((c.u.norm() - 0.05).abs() < 1e-15);
        assert!(c.u[0] > 0.0);
    }

    #[test]
    fn conflicting_pulls_keep_links_within_range() {
        let spec = BarrierSpec {
            u_max: 1.0,
            ..Default::default()
        };
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![-0.95, 0.0], vec![3.0, 0.0]]).unwrap();
        let c = min_norm_control(0, &p, &[1, 2], &spec).unwrap();
        assert!(c.relaxed);
        // the far pull wins as much ground as the hold on robot 1 allows
        let h: f64 = 1.0 - 0.95 * 0.95;
        let margin = 4.0 * spec.dt * spec.u_max * spec.u_max;
        let limit = (h.sqrt() - margin) / 2.0 / 1.9;
        assert!((c.u[0] - limit).abs() < 1e-12, "{}", c.u[0]);
        assert!(c.u[1].abs() < 1e-15);
    }

    #[test]
    fn speed_limit_keeps_holding_velocity() {
        let spec = BarrierSpec {
            u_max: 0.05,
            ..Default::default()
        };
        // robot 1 sits just inside Δ on one side, robot 2 far away on the other
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![-0.999, 0.0], vec![0.0, 5.0]]).unwrap();
        let c = min_norm_control(0, &p, &[1, 2], &spec).unwrap();
        assert!(c.u.norm() <= spec.u_max * (1.0 + 1e-12));
        let next = p.displaced(&[c.u.clone() * spec.dt, DVector::zeros(2), DVector::zeros(2)]);
        assert!(next.distance(0, 1) <= 1.0);
    }

    #[test]
    fn soft_solution_matches_closed_form() {
        let a = [DVector::from_vec(vec![2.0, 0.0])];
        let u = soft_min_norm(&a, &[1.0], 3.0);
        // minimise u² + 3(1 − 2u)² on the violated branch: u = 6 / 13
        assert!((u[0] - 6.0 / 13.0).abs() < 1e-14);
        let none = soft_min_norm(&a, &[-1.0], 3.0);
        assert_eq!(none.norm(), 0.0);
    }

    #[test]
    fn step_examples() {
        let spec = BarrierSpec::default();
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![0.3, 0.0]]).unwrap();
        let desired = DesiredEdges::new([(0, 1)]).unwrap();
        assert_eq!(step_assembly(&p, &desired, &spec).unwrap(), p);

        let far = Positions::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let next = step_assembly(&far, &desired, &spec).unwrap();
        assert!(next.distance(0, 1) < 3.0);
        assert!(next.point(0)[1].abs() < 1e-15 && next.point(1)[1].abs() < 1e-15);
    }

    #[test]
    fn completion_examples() {
        let desired = DesiredEdges::new([(0, 1)]).unwrap();
        let same = Positions::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(assembly_complete(&same, &desired, 1.0));
        let just_out = Positions::from_rows(&[vec![0.0, 0.0], vec![0.96, 0.0]]).unwrap();
        assert!(!assembly_complete(&just_out, &desired, 1.0));
        assert!(assembly_complete(&just_out, &DesiredEdges::default(), 1.0));
    }

    #[test]
    fn two_robots_assemble_in_finite_time() {
        let spec = BarrierSpec::default();
        let p = Positions::from_rows(&[vec![0.0, 0.0], vec![4.0, 1.0]]).unwrap();
        let desired = DesiredEdges::new([(0, 1)]).unwrap();
        let run = run_assembly(&p, &desired, &spec, 100_000).unwrap();
        assert!(run.complete);
        assert!(run.steps > 0);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(BarrierSpec {
            rho: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BarrierSpec {
            gamma_gain: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BarrierSpec {
            target_ratio: 0.99,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DesiredEdges::new([(2, 2)]).is_err());
    }
}
