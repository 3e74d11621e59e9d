//! Scenario file schema, defaults and validation.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::controller::BarrierSpec;
use crate::error::{Error, Result};
use crate::gramian::DEFAULT_HORIZON;
use crate::graph::Positions;
use crate::process::{LeaderInput, ProcessModel};
use crate::sensing::{apply_failure, FailureEvent, ResourceMatrix, SensorLibrary, APPLICATION_REDUCED_SENSORS};

/// Environment variable that overrides the seed stored in a scenario file.
pub const SEED_ENV: &str = "RESILIENCE_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamConfig {
    pub robots: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Interaction radius Δ (m).
    pub delta: f64,
    pub positions: Vec<Vec<f64>>,
    /// Resource matrix rows, one per robot, entries 0 or 1.
    pub gamma: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// Per-drone measurement rows `ĥ_k`, each of length 3.
    #[serde(default = "default_reduced")]
    pub reduced: Vec<Vec<f64>>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            reduced: default_reduced(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    #[serde(default = "default_drones")]
    pub drones: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Pursuit rotation; `π / drones` when absent.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_z0")]
    pub z0: f64,
    #[serde(default)]
    pub leader_input: LeaderInput,
    /// Process noise intensity, `Q = q_scale · I`.
    #[serde(default = "default_q")]
    pub q_scale: f64,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig {
            drones: default_drones(),
            radius: default_radius(),
            theta: None,
            z0: default_z0(),
            leader_input: LeaderInput::default(),
            q_scale: default_q(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Measurement noise variance per row, `R = r_scale · I`.
    #[serde(default = "default_r")]
    pub r_scale: f64,
    #[serde(default = "default_p0")]
    pub p0: f64,
    /// Loop period (s), shared by the process, the filters and the controller.
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            r_scale: default_r(),
            p0: default_p0(),
            dt: default_dt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_gain")]
    pub gamma_gain: f64,
    #[serde(default = "default_umax")]
    pub u_max: f64,
    #[serde(default = "default_target_ratio")]
    pub target_ratio: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            rho: default_rho(),
            gamma_gain: default_gain(),
            u_max: default_umax(),
            target_ratio: default_target_ratio(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconfigConfig {
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Outer-iteration cap; `n(n−1)/2` when absent.
    #[serde(default)]
    pub max_outer_iters: Option<usize>,
}

impl Default for ReconfigConfig {
    fn default() -> Self {
        ReconfigConfig {
            budget: default_budget(),
            max_outer_iters: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    /// Free-form remarks; ignored by the driver.
    #[serde(default)]
    pub notes: Vec<String>,
    pub team: TeamConfig,
    #[serde(default)]
    pub sensors: SensorConfig,
    #[serde(default)]
    pub process: ProcessConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    /// Gramian horizon T (s).
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub reconfig: ReconfigConfig,
    #[serde(default)]
    pub failures: Vec<FailureEvent>,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    2
}
fn default_reduced() -> Vec<Vec<f64>> {
    APPLICATION_REDUCED_SENSORS.iter().map(|r| r.to_vec()).collect()
}
fn default_drones() -> usize {
    5
}
fn default_radius() -> f64 {
    0.85
}
fn default_z0() -> f64 {
    1.0
}
fn default_q() -> f64 {
    1e-3
}
fn default_r() -> f64 {
    1e-2
}
fn default_p0() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    0.033
}
fn default_rho() -> f64 {
    0.5
}
fn default_gain() -> f64 {
    1.0
}
fn default_umax() -> f64 {
    0.2
}
fn default_target_ratio() -> f64 {
    0.9
}
fn default_budget() -> usize {
    1
}
fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config serializes")
    }

    /// Checks every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        let t = &self.team;
        if t.robots < 2 {
            return Err(Error::validation(
                "team.robots",
                format!("need at least 2 robots, got {}", t.robots),
            ));
        }
        if t.dim == 0 {
            return Err(Error::validation("team.dim", "must be at least 1"));
        }
        positive("team.delta", t.delta)?;
        if t.positions.len() != t.robots {
            return Err(Error::validation(
                "team.positions",
                format!("expected {} rows, got {}", t.robots, t.positions.len()),
            ));
        }
        for (i, p) in t.positions.iter().enumerate() {
            if p.len() != t.dim {
                return Err(Error::validation(
                    format!("team.positions[{i}]"),
                    format!("expected {} coordinates, got {}", t.dim, p.len()),
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(
                    format!("team.positions[{i}]"),
                    "coordinates must be finite",
                ));
            }
        }

        let sensors = &self.sensors.reduced;
        if sensors.is_empty() {
            return Err(Error::validation("sensors.reduced", "sensor library is empty"));
        }
        for (k, row) in sensors.iter().enumerate() {
            if row.len() != 3 || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(
                    format!("sensors.reduced[{k}]"),
                    "expected 3 finite per-drone coefficients",
                ));
            }
        }

        if t.gamma.len() != t.robots {
            return Err(Error::validation(
                "team.gamma",
                format!("expected {} rows, got {}", t.robots, t.gamma.len()),
            ));
        }
        for (i, row) in t.gamma.iter().enumerate() {
            if row.len() != sensors.len() {
                return Err(Error::validation(
                    format!("team.gamma[{i}]"),
                    format!("expected {} entries, got {}", sensors.len(), row.len()),
                ));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(Error::validation(format!("team.gamma[{i}]"), "entries must be 0 or 1"));
            }
        }

        let p = &self.process;
        if p.drones < 2 {
            return Err(Error::validation(
                "process.drones",
                format!("need at least 2, got {}", p.drones),
            ));
        }
        positive("process.radius", p.radius)?;
        if let Some(theta) = p.theta {
            if !(0.0..2.0 * PI).contains(&theta) {
                return Err(Error::validation(
                    "process.theta",
                    format!("must lie in [0, 2π), got {theta}"),
                ));
            }
        }
        if !p.z0.is_finite() {
            return Err(Error::validation("process.z0", "must be finite"));
        }
        let li = &p.leader_input;
        if !(li.amplitude.is_finite() && li.omega.is_finite() && li.phase.is_finite()) {
            return Err(Error::validation("process.leader_input", "parameters must be finite"));
        }
        if !(p.q_scale >= 0.0 && p.q_scale.is_finite()) {
            return Err(Error::validation(
                "process.q_scale",
                format!("must be nonnegative, got {}", p.q_scale),
            ));
        }

        positive("estimator.r_scale", self.estimator.r_scale)?;
        positive("estimator.p0", self.estimator.p0)?;
        positive("estimator.dt", self.estimator.dt)?;
        self.barrier_spec()
            .validate()
            .map_err(|e| Error::validation("controller", e.to_string()))?;
        positive("horizon", self.horizon)?;
        if self.reconfig.budget == 0 {
            return Err(Error::validation("reconfig.budget", "must be at least 1"));
        }
        if self.reconfig.max_outer_iters == Some(0) {
            return Err(Error::validation("reconfig.max_outer_iters", "must be at least 1"));
        }

        let mut gamma = self.initial_gamma()?;
        let mut last = 0;
        for (k, ev) in self.failures.iter().enumerate() {
            let field = format!("failures[{k}]");
            if ev.iteration < 1 || ev.iteration > self.iterations {
                return Err(Error::validation(
                    format!("{field}.iteration"),
                    format!("must lie in 1..={}, got {}", self.iterations, ev.iteration),
                ));
            }
            if ev.iteration < last {
                return Err(Error::validation(
                    format!("{field}.iteration"),
                    format!("schedule is not sorted: {} follows {last}", ev.iteration),
                ));
            }
            last = ev.iteration;
            if ev.robot >= t.robots {
                return Err(Error::validation(
                    format!("{field}.robot"),
                    format!("robot {} out of range for {} robots", ev.robot, t.robots),
                ));
            }
            if ev.resource >= sensors.len() {
                return Err(Error::validation(
                    format!("{field}.resource"),
                    format!("resource {} out of range for {} resources", ev.resource, sensors.len()),
                ));
            }
            gamma = apply_failure(&gamma, ev).map_err(|e| Error::validation(field.clone(), e.to_string()))?;
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        self.process.theta.unwrap_or(PI / self.process.drones as f64)
    }

    pub fn sensor_library(&self) -> Result<SensorLibrary> {
        SensorLibrary::from_reduced(&self.sensors.reduced, self.process.drones)
    }

    pub fn process_model(&self) -> Result<ProcessModel> {
        ProcessModel::new(
            self.process.drones,
            self.theta(),
            self.process.q_scale,
            self.process.leader_input,
        )
    }

    pub fn initial_positions(&self) -> Result<Positions> {
        Positions::from_rows(&self.team.positions)
    }

    pub fn initial_gamma(&self) -> Result<ResourceMatrix> {
        ResourceMatrix::from_rows(&self.team.gamma)
    }

    pub fn barrier_spec(&self) -> BarrierSpec {
        BarrierSpec {
            delta: self.team.delta,
            rho: self.controller.rho,
            gamma_gain: self.controller.gamma_gain,
            u_max: self.controller.u_max,
            dt: self.estimator.dt,
            target_ratio: self.controller.target_ratio,
        }
    }

    /// Measurement noise covariance for `rows` stacked measurement rows.
    pub fn measurement_cov(&self, rows: usize) -> DMatrix<f64> {
        DMatrix::identity(rows, rows) * self.estimator.r_scale
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}

/// Seed precedence: explicit flag, then [`SEED_ENV`], then the file.
pub fn resolve_seed(cli: Option<u64>, env: Option<&str>, file: u64) -> Result<u64> {
    if let Some(s) = cli {
        return Ok(s);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(s) => s
            .parse()
            .map_err(|_| Error::validation(SEED_ENV, format!("not an unsigned integer: {s:?}"))),
        None => Ok(file),
    }
}
