//! The exogenous process: a team of quadrotors moving under cyclic pursuit in
//! the horizontal plane and leader-follower coupling along the vertical axis.
//!
//! State layout is `e = [e_1; …; e_{n_d}]` with `e_i = (x, y, z)`; drone 0 is
//! the leader.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{discretize, DiscretizedModel};
use crate::linalg::psd_sqrt;

/// Sinusoidal vertical velocity command for the leader, `a·sin(ω t + φ)` (m/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderInput {
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Default for LeaderInput {
    fn default() -> Self {
        LeaderInput {
            amplitude: 0.1,
            omega: 0.5,
            phase: 0.0,
        }
    }
}

impl LeaderInput {
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).sin()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessModel {
    pub drones: usize,
    pub a_e: DMatrix<f64>,
    pub b_e: DVector<f64>,
    pub q: DMatrix<f64>,
    pub leader_input: LeaderInput,
}

impl ProcessModel {
    /// Cyclic-pursuit model with isotropic process noise `q_scale · I`.
    pub fn new(drones: usize, theta: f64, q_scale: f64, leader_input: LeaderInput) -> Result<Self> {
        if !(q_scale >= 0.0 && q_scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "process noise must be nonnegative, got {q_scale}"
            )));
        }
        let (a_e, b_e) = build_process_matrices(drones, theta)?;
        let n = a_e.nrows();
        Ok(ProcessModel {
            drones,
            a_e,
            b_e,
            q: DMatrix::identity(n, n) * q_scale,
            leader_input,
        })
    }

    /// Five drones, `θ = π/5`, `Q = 0.001·I`, default sinusoid.
    pub fn application() -> Self {
        ProcessModel::new(5, PI / 5.0, 1e-3, LeaderInput::default()).expect("application process is valid")
    }

    pub fn state_dim(&self) -> usize {
        3 * self.drones
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessState {
    pub e: DVector<f64>,
    pub t: f64,
}

fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

/// Builds `(A_e, B_e)` for `drones` quadrotors with pursuit rotation `theta`.
pub fn build_process_matrices(drones: usize, theta: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if drones < 2 {
        return Err(Error::InvalidInput(format!(
            "cyclic pursuit needs at least 2 drones, got {drones}"
        )));
    }
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, 2π), got {theta}")));
    }
    let n = 3 * drones;
    let r = rotation(theta);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..drones {
        // the leader chases the last drone, everyone else chases its predecessor
        let pred = if i == 0 { drones - 1 } else { i - 1 };
        for row in 0..2 {
            for col in 0..2 {
                a[(3 * i + row, 3 * pred + col)] += r[row][col];
                a[(3 * i + row, 3 * i + col)] -= r[row][col];
            }
        }
        if i > 0 {
            a[(3 * i + 2, 3 * pred + 2)] = 1.0;
            a[(3 * i + 2, 3 * i + 2)] = -1.0;
        }
    }
    let mut b = DVector::zeros(n);
    b[2] = 1.0;
    Ok((a, b))
}

/// Drones equally spaced on a horizontal circle centred at the origin.
pub fn initial_circle(drones: usize, radius: f64, z0: f64) -> Result<ProcessState> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let mut e = DVector::zeros(3 * drones);
    for k in 0..drones {
        let ang = 2.0 * PI * k as f64 / drones as f64;
        e[3 * k] = radius * ang.cos();
        e[3 * k + 1] = radius * ang.sin();
        e[3 * k + 2] = z0;
    }
    Ok(ProcessState { e, t: 0.0 })
}

/// Steps the process with a cached discretization.
#[derive(Clone, Debug)]
pub struct ProcessSimulator {
    model: ProcessModel,
    disc: DiscretizedModel,
    noise_sqrt: DMatrix<f64>,
    dt: f64,
}

impl ProcessSimulator {
    pub fn new(model: ProcessModel, dt: f64) -> Result<Self> {
        let b = DMatrix::from_column_slice(model.b_e.len(), 1, model.b_e.as_slice());
        let disc = discretize(&model.a_e, &b, &model.q, dt)?;
        let noise_sqrt = psd_sqrt(&disc.q_d);
        Ok(ProcessSimulator {
            model,
            disc,
            noise_sqrt,
            dt,
        })
    }

    pub fn model(&self) -> &ProcessModel {
        &self.model
    }

    pub fn discretized(&self) -> &DiscretizedModel {
        &self.disc
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Draw one sample of the discrete process noise `w ~ N(0, Q_d)`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.noise_sqrt.nrows();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        &self.noise_sqrt * z
    }

    /// `e⁺ = A_d e + B_d u(t) + w`, with `u` held over the step.
    pub fn step<R: Rng + ?Sized>(&self, state: &ProcessState, rng: &mut R) -> ProcessState {
        let u = self.model.leader_input.at(state.t);
        let w = self.sample_noise(rng);
        let e = &self.disc.a_d * &state.e + self.disc.b_d.column(0) * u + w;
        ProcessState {
            e,
            t: state.t + self.dt,
        }
    }
}

/// One exact zero-order-hold step of the process.
pub fn simulate_step<R: Rng + ?Sized>(
    model: &ProcessModel,
    state: &ProcessState,
    dt: f64,
    rng: &mut R,
) -> Result<ProcessState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    Ok(ProcessSimulator::new(model.clone(), dt)?.step(state, rng))
}
