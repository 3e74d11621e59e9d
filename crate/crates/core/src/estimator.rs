//! Per-robot Kalman filtering of the exogenous process plus the exact
//! zero-order-hold discretization it (and the process simulator) rely on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, expm, symmetrize};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedModel {
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub q_d: DMatrix<f64>,
    pub dt: f64,
}

/// Exact ZOH discretization of `ė = A e + B u + w`, `E[w wᵀ] = Q δ`.
///
/// `B_d` and `Q_d` come from exponentials of the augmented block matrices
/// `[[A, B], [0, 0]]·dt` and `[[−A, Q], [0, Aᵀ]]·dt`.
pub fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, dt: f64) -> Result<DiscretizedModel> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) {
        return Err(Error::InvalidInput("discretize: inconsistent matrix dimensions".into()));
    }
    let m = b.ncols();

    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = expm(&aug)?;
    let a_d = e.view((0, 0), (n, n)).into_owned();
    let b_d = e.view((0, n), (n, m)).into_owned();

    let mut vl = DMatrix::zeros(2 * n, 2 * n);
    vl.view_mut((0, 0), (n, n)).copy_from(&(-a * dt));
    vl.view_mut((0, n), (n, n)).copy_from(&(q * dt));
    vl.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * dt));
    let f = expm(&vl)?;
    let f12 = f.view((0, n), (n, n));
    let f22 = f.view((n, n), (n, n));
    let q_d = symmetrize(&(f22.transpose() * f12));
    ensure_finite(&q_d, "process noise discretization")?;

    Ok(DiscretizedModel { a_d, b_d, q_d, dt })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanState {
    pub xhat: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl KalmanState {
    pub fn new(xhat: DVector<f64>, p: DMatrix<f64>) -> Self {
        KalmanState { xhat, p }
    }

    /// Zero mean with `P₀ = p0 · I`.
    pub fn diffuse(n: usize, p0: f64) -> Self {
        KalmanState {
            xhat: DVector::zeros(n),
            p: DMatrix::identity(n, n) * p0,
        }
    }
}

/// Predict with `(A_d, B_d, Q_d)` then, if `h` has rows, a Joseph-form update.
pub fn kf_step(
    state: &KalmanState,
    model: &DiscretizedModel,
    u: f64,
    y: &DVector<f64>,
    h: &DMatrix<f64>,
    r_cov: &DMatrix<f64>,
) -> Result<KalmanState> {
    let n = state.xhat.len();
    if model.a_d.nrows() != n || h.ncols() != n || y.len() != h.nrows() || r_cov.shape() != (h.nrows(), h.nrows()) {
        return Err(Error::InvalidInput("kf_step: inconsistent dimensions".into()));
    }

    let xp = &model.a_d * &state.xhat + model.b_d.column(0) * u;
    let pp = symmetrize(&(&model.a_d * &state.p * model.a_d.transpose() + &model.q_d));
    if h.nrows() == 0 {
        return Ok(KalmanState { xhat: xp, p: pp });
    }

    let pht = &pp * h.transpose();
    let s = symmetrize(&(h * &pht + r_cov));
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Numeric("innovation covariance is not positive definite".into()))?;
    // K = P Hᵀ S⁻¹, via S Kᵀ = H P
    let gain = chol.solve(&pht.transpose()).transpose();
    let innovation = y - h * &xp;
    let xhat = &xp + &gain * innovation;
    let ikh = DMatrix::identity(n, n) - &gain * h;
    let p = symmetrize(&(&ikh * pp * ikh.transpose() + &gain * r_cov * gain.transpose()));
    Ok(KalmanState { xhat, p })
}

/// Mean / min / max absolute error over drones, per axis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxisError {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EstimateError {
    pub axes: [AxisError; 3],
}

impl EstimateError {
    /// Average of the three per-axis means.
    pub fn mean_abs(&self) -> f64 {
        self.axes.iter().map(|a| a.mean).sum::<f64>() / 3.0
    }
}

pub fn robot_estimate_error(state: &KalmanState, true_e: &DVector<f64>) -> EstimateError {
    let drones = true_e.len() / 3;
    let mut out = EstimateError::default();
    for (axis, slot) in out.axes.iter_mut().enumerate() {
        let errs: Vec<f64> = (0..drones)
            .map(|k| (state.xhat[3 * k + axis] - true_e[3 * k + axis]).abs())
            .collect();
        *slot = AxisError {
            mean: errs.iter().sum::<f64>() / drones as f64,
            min: errs.iter().copied().fold(f64::INFINITY, f64::min),
            max: errs.iter().copied().fold(0.0, f64::max),
        };
    }
    out
}
