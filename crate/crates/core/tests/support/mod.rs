//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical routines: exponentials,
//! Gramians, ranks, connectivity and QP solutions are recomputed from first
//! principles.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use oho_resilience::graph::Graph;
use oho_resilience::sensing::ResourceMatrix;
use rand::Rng;

/// Truncated Taylor series with scaling and squaring.
pub fn taylor_expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
    let scaled = m / 2f64.powi(squarings);
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn simpson(a: &DMatrix<f64>, hth: &DMatrix<f64>, horizon: f64, panels: usize) -> DMatrix<f64> {
    let h = horizon / panels as f64;
    let step = taylor_expm(&(a * h));
    let mut phi = DMatrix::identity(a.nrows(), a.nrows());
    let mut acc = DMatrix::zeros(a.nrows(), a.nrows());
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += phi.transpose() * hth * &phi * w;
        phi = &phi * &step;
    }
    acc * (h / 3.0)
}

/// `∫₀ᵀ e^{Aᵀs} HᵀH e^{As} ds` by composite Simpson, doubling panels until
/// successive estimates agree to `rtol` (relative Frobenius).
pub fn simpson_gramian(a: &DMatrix<f64>, h: &DMatrix<f64>, horizon: f64, rtol: f64) -> DMatrix<f64> {
    let hth = h.transpose() * h;
    let mut panels = 16;
    let mut prev = simpson(a, &hth, horizon, panels);
    loop {
        panels *= 2;
        let next = simpson(a, &hth, horizon, panels);
        let scale = next.norm().max(1e-300);
        if (&next - &prev).norm() <= rtol * scale || panels >= 1 << 14 {
            return next;
        }
        prev = next;
    }
}

pub fn rel_frobenius(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let scale = reference.norm();
    if scale == 0.0 {
        a.norm()
    } else {
        (a - reference).norm() / scale
    }
}

/// Rank by Gaussian elimination with full pivoting; pivots below
/// `rtol · max|entry|` count as zero.
pub fn gauss_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let tol = rtol * a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        let mut best = (step, step, 0.0);
        for r in step..rows {
            for c in step..cols {
                if a[(r, c)].abs() > best.2 {
                    best = (r, c, a[(r, c)].abs());
                }
            }
        }
        if best.2 <= tol || best.2 == 0.0 {
            break;
        }
        a.swap_rows(step, best.0);
        a.swap_columns(step, best.1);
        for r in (step + 1)..rows {
            let f = a[(r, step)] / a[(step, step)];
            for c in step..cols {
                a[(r, c)] -= f * a[(step, c)];
            }
        }
        rank += 1;
    }
    rank
}

/// Kalman observability rank of `(A, H)` by the elimination oracle.
pub fn observable_by_elimination(a: &DMatrix<f64>, h: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    if h.nrows() == 0 {
        return n == 0;
    }
    let mut blocks = Vec::new();
    let mut cur = h.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = &cur * a;
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut o = DMatrix::zeros(rows, n);
    let mut r = 0;
    for b in &blocks {
        o.view_mut((r, 0), (b.nrows(), n)).copy_from(b);
        r += b.nrows();
    }
    gauss_rank(&o, 1e-9) == n
}

pub fn bfs_connected(g: &Graph) -> bool {
    let n = g.n();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if i != j && g.has_edge(i, j) && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// `O_i = Σ_{j ∈ N̄(i)} Σ_{k ∈ Γ_j} Θ_k`, assembled by explicit loops.
pub fn naive_one_hop(g: &Graph, gamma: &ResourceMatrix, thetas: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n_e = thetas[0].nrows();
    (0..g.n())
        .map(|i| {
            let mut o = DMatrix::zeros(n_e, n_e);
            for j in 0..g.n() {
                if j == i || g.has_edge(i, j) {
                    for (k, t) in thetas.iter().enumerate() {
                        if gamma.get(j, k) {
                            o += t;
                        }
                    }
                }
            }
            o
        })
        .collect()
}

/// `(null directions, (1/n) Σ 1/λ over the rest)` with relative null threshold `null_rtol`.
pub fn cost_pair(grams: &[DMatrix<f64>], null_rtol: f64) -> (usize, f64) {
    let mut null = 0;
    let mut finite = 0.0;
    for o in grams {
        let sym = (o + o.transpose()) * 0.5;
        let vals = SymmetricEigen::new(sym).eigenvalues;
        let max = vals.iter().copied().fold(0.0_f64, f64::max);
        for &l in vals.iter() {
            if l <= null_rtol * max {
                null += 1;
            } else {
                finite += 1.0 / l;
            }
        }
    }
    (null, finite / grams.len() as f64)
}

/// Outcome of the brute-force single-flip search: `None` means keep the base.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteChoice {
    pub flip: Option<(usize, usize)>,
    pub null: usize,
    pub finite: f64,
}

/// Exhaustive search over the base graph and every connected single-flip
/// neighbour, ordered by null count, then finite cost (ties within
/// `tie_rtol`), then fewer flips, then lexicographic pair.
pub fn brute_force_single_flip(
    base: &Graph,
    gamma: &ResourceMatrix,
    thetas: &[DMatrix<f64>],
    null_rtol: f64,
    tie_rtol: f64,
) -> Option<BruteChoice> {
    let n = base.n();
    let mut cands: Vec<BruteChoice> = Vec::new();
    let mut consider = |g: &Graph, flip: Option<(usize, usize)>| {
        if bfs_connected(g) {
            let (null, finite) = cost_pair(&naive_one_hop(g, gamma, thetas), null_rtol);
            cands.push(BruteChoice { flip, null, finite });
        }
    };
    consider(base, None);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut g = base.clone();
            g.toggle_edge(i, j);
            consider(&g, Some((i, j)));
        }
    }
    let best_null = cands.iter().map(|c| c.null).min()?;
    let pool: Vec<BruteChoice> = cands.into_iter().filter(|c| c.null == best_null).collect();
    let best_finite = pool.iter().map(|c| c.finite).fold(f64::INFINITY, f64::min);
    let limit = best_finite + tie_rtol * best_finite.abs();
    pool.into_iter()
        .filter(|c| c.finite <= limit)
        .min_by_key(|c| match c.flip {
            None => (0, 0, 0),
            Some((i, j)) => (1, i, j),
        })
}

/// Minimum-norm point of `{u : a_kᵀu ≥ b_k}` by a log-barrier interior-point
/// method started from the strictly feasible point `start`.
pub fn barrier_min_norm(a: &[DVector<f64>], b: &[f64], start: &DVector<f64>) -> DVector<f64> {
    let d = start.len();
    let slacks = |u: &DVector<f64>| -> Vec<f64> { a.iter().zip(b).map(|(ak, bk)| ak.dot(u) - bk).collect() };
    assert!(
        slacks(start).iter().all(|&s| s > 0.0),
        "start must be strictly feasible"
    );
    let objective = |u: &DVector<f64>, t: f64| -> f64 {
        let s = slacks(u);
        if s.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        t * u.norm_squared() - s.iter().map(|v| v.ln()).sum::<f64>()
    };
    let mut u = start.clone();
    let mut t = 1.0;
    // duality gap is m / t
    while t <= 1e12 {
        for _ in 0..100 {
            let s = slacks(&u);
            let mut grad = &u * (2.0 * t);
            let mut hess = DMatrix::identity(d, d) * (2.0 * t);
            for (ak, sk) in a.iter().zip(&s) {
                grad -= ak / *sk;
                hess += ak * ak.transpose() / (sk * sk);
            }
            let Some(chol) = hess.cholesky() else { break };
            let step = chol.solve(&(-&grad));
            let decrement = -grad.dot(&step);
            if decrement < 1e-18 {
                break;
            }
            let f0 = objective(&u, t);
            let mut alpha = 1.0;
            while alpha > 1e-20 {
                let cand = &u + &step * alpha;
                if objective(&cand, t) <= f0 - 0.25 * alpha * decrement {
                    u = cand;
                    break;
                }
                alpha *= 0.5;
            }
            if alpha <= 1e-20 {
                break;
            }
        }
        t *= 10.0;
    }
    u
}

/// Random 0/1 resource matrix with every robot carrying at least one resource.
pub fn random_gamma<R: Rng>(rng: &mut R, robots: usize, resources: usize) -> ResourceMatrix {
    let mut rows = vec![vec![0u8; resources]; robots];
    for row in rows.iter_mut() {
        row[rng.random_range(0..resources)] = 1;
        for v in row.iter_mut() {
            if rng.random_bool(0.25) {
                *v = 1;
            }
        }
    }
    ResourceMatrix::from_rows(&rows).unwrap()
}

/// Random connected graph: a random spanning tree plus extra edges with probability `p`.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut g = Graph::empty(n);
    for i in 1..n {
        let j = rng.random_range(0..i);
        g.add_edge(i, j);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Reduced per-drone sensor rows with entries drawn from `{0, 0.5, 1}`, none all-zero.
pub fn random_reduced<R: Rng>(rng: &mut R, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let row: Vec<f64> = (0..3).map(|_| [0.0, 0.5, 1.0][rng.random_range(0..3)]).collect();
            if row.iter().any(|&v| v != 0.0) {
                break row;
            }
        })
        .collect()
}
