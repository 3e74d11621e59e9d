//! Undirected communication graphs over a robot team.
//!
//! A [`Graph`] stores a symmetric adjacency relation without self loops. The
//! closed adjacency `Ā = A + I` is exposed as a derived view because every
//! one-hop quantity (neighbourhood stacks, one-hop Gramians, the flip budget)
//! is phrased in terms of it.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;

/// Eigenvalue threshold for the connectivity tests.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

impl Graph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        assert!(n >= 1, "a graph needs at least one vertex");
        Graph {
            n,
            adj: vec![false; n * n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({i}, {j}) references a vertex outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self loop at vertex {i}")));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "self loops are not allowed");
        self.adj[i * self.n + j] = true;
        self.adj[j * self.n + i] = true;
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.adj[i * self.n + j] = false;
        self.adj[j * self.n + i] = false;
    }

    pub fn toggle_edge(&mut self, i: usize, j: usize) {
        if self.has_edge(i, j) {
            self.remove_edge(i, j);
        } else {
            self.add_edge(i, j);
        }
    }

    /// Edges as ordered pairs `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    /// Closed neighbourhood `N̄(i)` in ascending order (includes `i`).
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| j == i || self.has_edge(i, j)).collect()
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// `Ā = A + I`.
    pub fn closed_adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.n,
            self.n,
            |i, j| {
                if i == j || self.has_edge(i, j) {
                    1.0
                } else {
                    0.0
                }
            },
        )
    }

    /// Whether every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges().iter().all(|&(i, j)| other.has_edge(i, j))
    }

    /// Graph with the given vertex relabelling: vertex `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        let mut g = Graph::empty(self.n);
        for (i, j) in self.edges() {
            g.add_edge(perm[i], perm[j]);
        }
        g
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges())
    }
}

/// Robot positions, one `d`-dimensional point per robot (metres).
#[derive(Clone, Debug, PartialEq)]
pub struct Positions {
    dim: usize,
    points: Vec<DVector<f64>>,
}

impl Positions {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidInput(
                "positions need at least one point of dimension >= 1".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point {i} has dimension {} but point 0 has {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(Positions { dim, points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Positions::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (&self.points[i] - &self.points[j]).norm()
    }

    /// Shift every point by the matching displacement. Lengths and dimensions must agree.
    pub fn displaced(&self, moves: &[DVector<f64>]) -> Positions {
        assert_eq!(moves.len(), self.points.len());
        let points = self.points.iter().zip(moves).map(|(p, m)| p + m).collect();
        Positions { dim: self.dim, points }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.iter().copied().collect()).collect()
    }
}

/// Δ-disk proximity graph: `i ~ j` iff `‖x_i − x_j‖ ≤ Δ` (boundary inclusive).
pub fn build_delta_disk_graph(positions: &Positions, delta: f64) -> Result<Graph> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let n = positions.len();
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if positions.distance(i, j) <= delta {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// `L = Diag(A·1) − A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if g.has_edge(i, j) {
                l[(i, j)] = -1.0;
                l[(i, i)] += 1.0;
            }
        }
    }
    l
}

/// Second-smallest Laplacian eigenvalue (0 for a single vertex).
pub fn algebraic_connectivity(g: &Graph) -> f64 {
    if g.n() < 2 {
        return 0.0;
    }
    sym_eigenvalues(&laplacian(g))[1]
}

/// Fiedler test: `λ₂(L) > tol`. A single vertex is connected.
pub fn is_connected(g: &Graph, tol: f64) -> bool {
    g.n() == 1 || algebraic_connectivity(g) > tol
}

/// Shifted-Laplacian test: smallest eigenvalue of `(1/n)·11ᵀ + L` exceeds `tol`.
pub fn is_connected_shifted(g: &Graph, tol: f64) -> bool {
    let n = g.n();
    let shift = DMatrix::from_element(n, n, 1.0 / n as f64);
    sym_eigenvalues(&(shift + laplacian(g)))[0] > tol
}

/// Number of unordered pairs whose edge status differs; `‖Ā_a − Ā_b‖²_F / 2`.
pub fn edge_flip_distance(a: &Graph, b: &Graph) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::InvalidInput(format!(
            "graphs have different vertex counts ({} vs {})",
            a.n(),
            b.n()
        )));
    }
    let diff = a.adj.iter().zip(&b.adj).filter(|(x, y)| x != y).count();
    Ok(diff / 2)
}
