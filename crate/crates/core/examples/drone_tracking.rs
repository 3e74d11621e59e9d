//! Track the cyclic-pursuit drones with a Kalman filter fed by two sensors,
//! and show the position error on each axis.

use nalgebra::{DMatrix, DVector};
use oho_resilience::estimator::{kf_step, robot_estimate_error, KalmanState};
use oho_resilience::process::{initial_circle, ProcessModel, ProcessSimulator};
use oho_resilience::sensing::{robot_measurement_matrix, ResourceMatrix, SensorLibrary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> oho_resilience::Result<()> {
    let model = ProcessModel::application();
    let lib = SensorLibrary::application(model.drones);
    let sim = ProcessSimulator::new(model.clone(), 0.033)?;
    let gamma = ResourceMatrix::from_rows(&[vec![1, 0, 1, 0, 0]])?;
    let h = robot_measurement_matrix(&gamma, &lib, 0);
    let r = DMatrix::identity(h.nrows(), h.nrows()) * 0.01;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut truth = initial_circle(model.drones, 0.85, 1.0)?;
    let mut kf = KalmanState::diffuse(model.state_dim(), 10.0);
    for k in 1..=600 {
        let u = model.leader_input.at(truth.t);
        truth = sim.step(&truth, &mut rng);
        let noise = DVector::from_fn(h.nrows(), |_, _| {
            0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng)
        });
        let y = &h * &truth.e + noise;
        kf = kf_step(&kf, sim.discretized(), u, &y, &h, &r)?;
        if k % 100 == 0 {
            let err = robot_estimate_error(&kf, &truth.e);
            println!(
                "t = {:5.2} s  |e_x| {:.4}  |e_y| {:.4}  |e_z| {:.4}",
                truth.t, err.axes[0].mean, err.axes[1].mean, err.axes[2].mean
            );
        }
    }
    Ok(())
}
