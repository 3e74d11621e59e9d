//! Sensor bookkeeping: which robot carries which resource, how measurement
//! matrices are assembled from that, and whether a stack of measurements
//! makes the exogenous process observable.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Positions};
use crate::linalg::{numerical_rank, vstack, RANK_RTOL};

/// Reduced per-drone measurement rows used by the drone-monitoring application.
pub const APPLICATION_REDUCED_SENSORS: [[f64; 3]; 5] = [
    [1.0, 0.5, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.5, 1.0],
    [0.5, 0.0, 1.0],
];

/// The set of sensor-wise output matrices `h_1 … h_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorLibrary {
    entries: Vec<DMatrix<f64>>,
    state_dim: usize,
}

impl SensorLibrary {
    pub fn new(entries: Vec<DMatrix<f64>>) -> Result<Self> {
        let state_dim = entries
            .first()
            .map(|e| e.ncols())
            .ok_or_else(|| Error::InvalidInput("sensor library needs at least one entry".into()))?;
        for (k, e) in entries.iter().enumerate() {
            if e.ncols() != state_dim {
                return Err(Error::InvalidInput(format!(
                    "sensor {k} has {} columns, expected {state_dim}",
                    e.ncols()
                )));
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("sensor {k} has non-finite entries")));
            }
        }
        Ok(SensorLibrary { entries, state_dim })
    }

    /// Expand reduced rows `ĥ_k` into `r_k = I_{n_d} ⊗ ĥ_k`.
    pub fn from_reduced(reduced: &[Vec<f64>], drones: usize) -> Result<Self> {
        if drones == 0 {
            return Err(Error::InvalidInput("drone count must be positive".into()));
        }
        let eye = DMatrix::<f64>::identity(drones, drones);
        let entries = reduced
            .iter()
            .map(|h| eye.kronecker(&DMatrix::from_row_slice(1, h.len(), h)))
            .collect();
        SensorLibrary::new(entries)
    }

    /// The five application sensors for `drones` quadrotors.
    pub fn application(drones: usize) -> Self {
        let reduced: Vec<Vec<f64>> = APPLICATION_REDUCED_SENSORS.iter().map(|h| h.to_vec()).collect();
        SensorLibrary::from_reduced(&reduced, drones).expect("application library is well formed")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn entry(&self, k: usize) -> &DMatrix<f64> {
        &self.entries[k]
    }

    pub fn entries(&self) -> &[DMatrix<f64>] {
        &self.entries
    }

    /// All entries stacked in index order.
    pub fn stacked(&self) -> DMatrix<f64> {
        let refs: Vec<&DMatrix<f64>> = self.entries.iter().collect();
        vstack(&refs, self.state_dim)
    }
}

/// Binary robots × resources matrix `Γ`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceMatrix {
    robots: usize,
    resources: usize,
    bits: Vec<bool>,
}

impl ResourceMatrix {
    pub fn zeros(robots: usize, resources: usize) -> Self {
        ResourceMatrix {
            robots,
            resources,
            bits: vec![false; robots * resources],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let robots = rows.len();
        let resources = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = ResourceMatrix::zeros(robots, resources);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != resources {
                return Err(Error::InvalidInput(format!(
                    "resource row {i} has {} entries, expected {resources}",
                    row.len()
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(i, k, true),
                    other => {
                        return Err(Error::InvalidInput(format!(
                            "resource entry ({i}, {k}) must be 0 or 1, got {other}"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn robots(&self) -> usize {
        self.robots
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn get(&self, robot: usize, resource: usize) -> bool {
        self.bits[robot * self.resources + resource]
    }

    pub fn set(&mut self, robot: usize, resource: usize, value: bool) {
        self.bits[robot * self.resources + resource] = value;
    }

    /// Resource indices carried by `robot`, ascending.
    pub fn resources_of(&self, robot: usize) -> Vec<usize> {
        (0..self.resources).filter(|&k| self.get(robot, k)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.robots)
            .map(|i| (0..self.resources).map(|k| self.get(i, k) as u8).collect())
            .collect()
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.robots,
            self.resources,
            |i, k| if self.get(i, k) { 1.0 } else { 0.0 },
        )
    }

    /// Rows permuted so that robot `i` becomes robot `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> ResourceMatrix {
        let mut out = ResourceMatrix::zeros(self.robots, self.resources);
        for i in 0..self.robots {
            for k in 0..self.resources {
                out.set(perm[i], k, self.get(i, k));
            }
        }
        out
    }
}

impl std::fmt::Debug for ResourceMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ResourceMatrix{:?}", self.to_rows())
    }
}

/// A scheduled loss of one resource on one robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub iteration: usize,
    pub robot: usize,
    pub resource: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub graph: Graph,
    pub positions: Positions,
    pub gamma: ResourceMatrix,
}

impl Configuration {
    pub fn new(graph: Graph, positions: Positions, gamma: ResourceMatrix) -> Result<Self> {
        if graph.n() != positions.len() || graph.n() != gamma.robots() {
            return Err(Error::InvalidInput(format!(
                "configuration dimensions disagree: graph {} robots, positions {}, resource rows {}",
                graph.n(),
                positions.len(),
                gamma.robots()
            )));
        }
        Ok(Configuration {
            graph,
            positions,
            gamma,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureClass {
    Tolerable,
    Catastrophic,
}

/// `H_i`: library entries for the robot's resources, stacked in ascending resource order.
pub fn robot_measurement_matrix(gamma: &ResourceMatrix, lib: &SensorLibrary, robot: usize) -> DMatrix<f64> {
    let blocks: Vec<&DMatrix<f64>> = gamma.resources_of(robot).into_iter().map(|k| lib.entry(k)).collect();
    vstack(&blocks, lib.state_dim())
}

/// `H_{N̄(i)}`: robot matrices over the closed neighbourhood, ascending robot order.
pub fn one_hop_measurement_matrix(
    graph: &Graph,
    gamma: &ResourceMatrix,
    lib: &SensorLibrary,
    robot: usize,
) -> DMatrix<f64> {
    let per_robot: Vec<DMatrix<f64>> = graph
        .closed_neighborhood(robot)
        .into_iter()
        .map(|j| robot_measurement_matrix(gamma, lib, j))
        .collect();
    let refs: Vec<&DMatrix<f64>> = per_robot.iter().collect();
    vstack(&refs, lib.state_dim())
}

/// Stack of every robot's `H_i`.
pub fn team_measurement_matrix(gamma: &ResourceMatrix, lib: &SensorLibrary) -> DMatrix<f64> {
    let per_robot: Vec<DMatrix<f64>> = (0..gamma.robots())
        .map(|i| robot_measurement_matrix(gamma, lib, i))
        .collect();
    let refs: Vec<&DMatrix<f64>> = per_robot.iter().collect();
    vstack(&refs, lib.state_dim())
}

pub fn apply_failure(gamma: &ResourceMatrix, ev: &FailureEvent) -> Result<ResourceMatrix> {
    if ev.robot >= gamma.robots() || ev.resource >= gamma.resources() {
        return Err(Error::InvalidInput(format!(
            "failure ({}, {}) outside the {}x{} resource matrix",
            ev.robot,
            ev.resource,
            gamma.robots(),
            gamma.resources()
        )));
    }
    if !gamma.get(ev.robot, ev.resource) {
        return Err(Error::Precondition(format!(
            "failure of absent resource {} on robot {}",
            ev.resource, ev.robot
        )));
    }
    let mut out = gamma.clone();
    out.set(ev.robot, ev.resource, false);
    Ok(out)
}

/// `[h; hA; …; hA^{n−1}]`.
pub fn observability_matrix(a_e: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a_e.nrows();
    let m = h.nrows();
    let mut out = DMatrix::zeros(m * n, n);
    let mut block = h.clone();
    for k in 0..n {
        out.view_mut((k * m, 0), (m, n)).copy_from(&block);
        block = &block * a_e;
    }
    out
}

/// Rank test on the observability matrix with relative singular-value tolerance `rtol`.
pub fn is_observable(a_e: &DMatrix<f64>, h: &DMatrix<f64>, rtol: f64) -> bool {
    let n = a_e.nrows();
    if n == 0 {
        return true;
    }
    if h.nrows() == 0 {
        return false;
    }
    numerical_rank(&observability_matrix(a_e, h), rtol) == n
}

pub fn is_collectively_observable(a_e: &DMatrix<f64>, gamma: &ResourceMatrix, lib: &SensorLibrary) -> bool {
    is_observable(a_e, &team_measurement_matrix(gamma, lib), RANK_RTOL)
}

/// Feasibility is collective observability of the remaining sensors.
pub fn classify_failure(
    gamma_after: &ResourceMatrix,
    a_e: &DMatrix<f64>,
    lib: &SensorLibrary,
    rtol: f64,
) -> FailureClass {
    if is_observable(a_e, &team_measurement_matrix(gamma_after, lib), rtol) {
        FailureClass::Tolerable
    } else {
        FailureClass::Catastrophic
    }
}
