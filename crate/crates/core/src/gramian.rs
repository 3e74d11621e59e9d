//! Observability Gramians and the one-hop task metric.
//!
//! Sensor Gramians `Θ_k(0,T) = ∫₀ᵀ exp(A_eᵀτ) h_kᵀh_k exp(A_eτ) dτ` are computed
//! once per `(A_e, library, T)`. A robot's one-hop Gramian is the weighted
//! sum `O_i = Σ_k [ĀΓ]_{ik} Θ_k`, where the weight counts how many robots in
//! the closed neighbourhood of `i` carry sensor `k`. The reconfiguration
//! objective is the average trace of `O_i⁻¹`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{ensure_finite, expm, min_sym_eigenvalue, symmetrize, RANK_RTOL};
use crate::sensing::{is_observable, one_hop_measurement_matrix, ResourceMatrix, SensorLibrary};

/// Default Gramian horizon in seconds.
pub const DEFAULT_HORIZON: f64 = 1.0;

/// A one-hop Gramian counts as nonsingular when its smallest eigenvalue exceeds this.
pub const GRAMIAN_TOL: f64 = 1e-8;

/// Eigenvalues at or below `NULL_RTOL · λ_max` are treated as exact zeros in the cost.
pub const NULL_RTOL: f64 = 1e-10;

/// Regularizer used when ranking candidate graphs.
pub const SOLVER_EPSILON: f64 = 1e-9;

/// `∫₀ᵀ exp(Aᵀτ) HᵀH exp(Aτ) dτ` via the exponential of `[[−Aᵀ, HᵀH], [0, A]]·T`.
pub fn sensor_gramian(a_e: &DMatrix<f64>, h: &DMatrix<f64>, horizon: f64) -> Result<DMatrix<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let n = a_e.nrows();
    if a_e.ncols() != n || h.ncols() != n {
        return Err(Error::InvalidInput("sensor_gramian: inconsistent dimensions".into()));
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a_e.transpose() * horizon));
    block.view_mut((0, n), (n, n)).copy_from(&(h.transpose() * h * horizon));
    block.view_mut((n, n), (n, n)).copy_from(&(a_e * horizon));
    let f = expm(&block)?;
    // F12 = exp(−AᵀT)·W and F22 = exp(AT), so W = F22ᵀ F12
    let g = f.view((n, n), (n, n)).transpose() * f.view((0, n), (n, n));
    ensure_finite(&g, "sensor Gramian")?;
    Ok(symmetrize(&g))
}

/// Precomputed `Θ_1 … Θ_r` for one process and library.
#[derive(Clone, Debug, PartialEq)]
pub struct GramianSet {
    pub horizon: f64,
    pub thetas: Vec<DMatrix<f64>>,
}

impl GramianSet {
    pub fn compute(a_e: &DMatrix<f64>, lib: &SensorLibrary, horizon: f64) -> Result<Self> {
        let thetas = lib
            .entries()
            .iter()
            .map(|h| sensor_gramian(a_e, h, horizon))
            .collect::<Result<Vec<_>>>()?;
        Ok(GramianSet { horizon, thetas })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.thetas.first().map(|t| t.nrows()).unwrap_or(0)
    }

    /// `Σ_k Θ_k`, the Gramian of the full library.
    pub fn total(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        self.thetas.iter().fold(DMatrix::zeros(n, n), |acc, t| acc + t)
    }
}

/// `O_1 … O_n` for one graph and resource matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OneHopGramians {
    pub grams: Vec<DMatrix<f64>>,
}

impl OneHopGramians {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn min_eigenvalues(&self) -> Vec<f64> {
        self.grams.iter().map(min_sym_eigenvalue).collect()
    }
}

/// Integer one-hop sensor counts `[ĀΓ]_{ik}`.
pub fn one_hop_sensor_counts(graph: &Graph, gamma: &ResourceMatrix) -> Vec<Vec<u32>> {
    (0..graph.n())
        .map(|i| {
            let hood = graph.closed_neighborhood(i);
            (0..gamma.resources())
                .map(|k| hood.iter().filter(|&&j| gamma.get(j, k)).count() as u32)
                .collect()
        })
        .collect()
}

pub fn one_hop_gramians(graph: &Graph, gamma: &ResourceMatrix, set: &GramianSet) -> Result<OneHopGramians> {
    if graph.n() != gamma.robots() || gamma.resources() != set.len() {
        return Err(Error::InvalidInput(format!(
            "one_hop_gramians: graph has {} robots, resource matrix is {}x{}, {} sensor Gramians",
            graph.n(),
            gamma.robots(),
            gamma.resources(),
            set.len()
        )));
    }
    let n_e = set.state_dim();
    let grams = one_hop_sensor_counts(graph, gamma)
        .into_iter()
        .map(|counts| {
            counts
                .iter()
                .zip(&set.thetas)
                .filter(|(&c, _)| c > 0)
                .fold(DMatrix::zeros(n_e, n_e), |acc, (&c, theta)| acc + theta * c as f64)
        })
        .collect();
    Ok(OneHopGramians { grams })
}

/// One-hop observability of robot `i` by the rank test.
///
/// When `grams` is supplied the Gramian test (`λ_min(O_i) > GRAMIAN_TOL`) is
/// evaluated too, and a disagreement between the two is reported as an error.
pub fn is_robot_oho(
    a_e: &DMatrix<f64>,
    graph: &Graph,
    gamma: &ResourceMatrix,
    lib: &SensorLibrary,
    robot: usize,
    rtol: f64,
    grams: Option<&GramianSet>,
) -> Result<bool> {
    let by_rank = is_observable(a_e, &one_hop_measurement_matrix(graph, gamma, lib, robot), rtol);
    if let Some(set) = grams {
        let counts = &one_hop_sensor_counts(graph, gamma)[robot];
        let n_e = set.state_dim();
        let o = counts
            .iter()
            .zip(&set.thetas)
            .fold(DMatrix::zeros(n_e, n_e), |acc, (&c, t)| acc + t * c as f64);
        let lam = min_sym_eigenvalue(&o);
        let by_gramian = lam > GRAMIAN_TOL;
        if by_gramian != by_rank {
            return Err(Error::Numeric(format!(
                "robot {robot}: rank test says {by_rank} but λ_min(O_i) = {lam:e}; \
                 the Gramian horizon is probably ill-conditioned"
            )));
        }
    }
    Ok(by_rank)
}

/// Every robot one-hop observable; stops at the first robot that is not.
pub fn is_team_oho(
    a_e: &DMatrix<f64>,
    graph: &Graph,
    gamma: &ResourceMatrix,
    lib: &SensorLibrary,
    rtol: f64,
    grams: Option<&GramianSet>,
) -> Result<bool> {
    for i in 0..graph.n() {
        if !is_robot_oho(a_e, graph, gamma, lib, i, rtol, grams)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Robots that are not one-hop observable (rank test), ascending.
pub fn non_oho_robots(a_e: &DMatrix<f64>, graph: &Graph, gamma: &ResourceMatrix, lib: &SensorLibrary) -> Vec<usize> {
    (0..graph.n())
        .filter(|&i| !is_observable(a_e, &one_hop_measurement_matrix(graph, gamma, lib, i), RANK_RTOL))
        .collect()
}

/// Eigenvalues of a Gramian with numerically-null ones snapped to exactly zero.
fn clamped_eigenvalues(o: &DMatrix<f64>) -> Vec<f64> {
    let vals = SymmetricEigen::new(symmetrize(o)).eigenvalues;
    let max = vals.iter().copied().fold(0.0_f64, f64::max);
    vals.iter()
        .map(|&l| if l <= NULL_RTOL * max { 0.0 } else { l })
        .collect()
}

/// `(1/n) Σ_i trace((O_i + εI)⁻¹)`; `+∞` when `ε = 0` and some `O_i` is singular.
pub fn oho_cost(grams: &OneHopGramians, epsilon: f64) -> f64 {
    assert!(epsilon >= 0.0, "epsilon must be nonnegative");
    if grams.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for o in &grams.grams {
        for l in clamped_eigenvalues(o) {
            let d = l + epsilon;
            if d == 0.0 {
                return f64::INFINITY;
            }
            total += 1.0 / d;
        }
    }
    total / grams.len() as f64
}

/// Cost split into its singular and finite parts.
///
/// Ordering by `(null_dims, finite)` is the small-ε limit of ordering by the
/// regularized cost, and stays reproducible when the Gramians come from
/// different numerical routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostBreakdown {
    /// Total number of null eigen-directions over all `O_i`.
    pub null_dims: usize,
    /// `(1/n) Σ_i Σ_{λ>0} 1/λ`.
    pub finite: f64,
    pub robots: usize,
}

impl CostBreakdown {
    pub fn of(grams: &OneHopGramians) -> Self {
        let mut null_dims = 0;
        let mut finite = 0.0;
        for o in &grams.grams {
            for l in clamped_eigenvalues(o) {
                if l == 0.0 {
                    null_dims += 1;
                } else {
                    finite += 1.0 / l;
                }
            }
        }
        let robots = grams.len().max(1);
        CostBreakdown {
            null_dims,
            finite: finite / robots as f64,
            robots,
        }
    }

    /// Scalar value of the cost with regularizer `epsilon` applied to the null directions.
    pub fn regularized(&self, epsilon: f64) -> f64 {
        if self.null_dims == 0 {
            self.finite
        } else if epsilon == 0.0 {
            f64::INFINITY
        } else {
            self.null_dims as f64 / (epsilon * self.robots as f64) + self.finite
        }
    }

    /// Three-way comparison with relative tolerance `rtol` on the finite part.
    pub fn compare(&self, other: &CostBreakdown, rtol: f64) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.null_dims.cmp(&other.null_dims) {
            Ordering::Equal => {
                let scale = self.finite.abs().max(other.finite.abs());
                if (self.finite - other.finite).abs() <= rtol * scale {
                    Ordering::Equal
                } else {
                    self.finite.total_cmp(&other.finite)
                }
            }
            o => o,
        }
    }
}
