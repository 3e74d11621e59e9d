use nalgebra::{DMatrix, DVector};
use oho_resilience::estimator::{discretize, kf_step, KalmanState};
use oho_resilience::process::{initial_circle, ProcessModel, ProcessSimulator};
use oho_resilience::sensing::{robot_measurement_matrix, ResourceMatrix, SensorLibrary};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn scalar_filter_follows_the_riccati_recursion(a in -1.0..1.0f64, q in 0.0..1.0f64, r in 0.01..1.0f64, p0 in 0.1..10.0f64, dt in 0.01..0.5f64) {
        let model = discretize(
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, q),
            dt,
        ).unwrap();
        let ad = (a * dt).exp();
        let qd = if a.abs() < 1e-12 { q * dt } else { q * ((2.0 * a * dt).exp() - 1.0) / (2.0 * a) };
        prop_assert!((model.a_d[(0, 0)] - ad).abs() < 1e-12);
        prop_assert!((model.q_d[(0, 0)] - qd).abs() < 1e-10 * qd.max(1.0));

        let h = DMatrix::from_element(1, 1, 1.0);
        let rm = DMatrix::from_element(1, 1, r);
        let mut state = KalmanState::diffuse(1, p0);
        let mut p = p0;
        for _ in 0..20 {
            state = kf_step(&state, &model, 0.0, &DVector::from_element(1, 0.3), &h, &rm).unwrap();
            let pp = ad * p * ad + qd;
            p = pp - pp * pp / (pp + r);
            prop_assert!((state.p[(0, 0)] - p).abs() < 1e-10 * p.max(1.0));
        }
    }
}

#[test]
fn covariance_stays_symmetric_and_positive() {
    let model = ProcessModel::application();
    let lib = SensorLibrary::application(model.drones);
    let sim = ProcessSimulator::new(model.clone(), 0.033).unwrap();
    let gamma = ResourceMatrix::from_rows(&[vec![0, 1, 1, 0, 0]]).unwrap();
    let h = robot_measurement_matrix(&gamma, &lib, 0);
    let r = DMatrix::identity(h.nrows(), h.nrows()) * 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut truth = initial_circle(model.drones, 0.85, 1.0).unwrap();
    let mut kf = KalmanState::diffuse(model.state_dim(), 10.0);
    for _ in 0..300 {
        truth = sim.step(&truth, &mut rng);
        kf = kf_step(&kf, sim.discretized(), 0.0, &(&h * &truth.e), &h, &r).unwrap();
        assert_eq!(kf.p, kf.p.transpose());
        assert!(kf.p.clone().cholesky().is_some());
    }
}

#[test]
fn unobserved_directions_keep_growing_uncertainty() {
    // only y-sensors: the x and z coordinates of the pursuit formation drift
    let model = ProcessModel::application();
    let lib = SensorLibrary::application(model.drones);
    let sim = ProcessSimulator::new(model.clone(), 0.033).unwrap();
    let gamma = ResourceMatrix::from_rows(&[vec![0, 1, 0, 0, 0]]).unwrap();
    let h = robot_measurement_matrix(&gamma, &lib, 0);
    let r = DMatrix::identity(h.nrows(), h.nrows()) * 0.01;
    let mut kf = KalmanState::diffuse(model.state_dim(), 1.0);
    let y = DVector::zeros(h.nrows());
    let trace = |k: &KalmanState, axis: usize| {
        (0..model.drones)
            .map(|d| k.p[(3 * d + axis, 3 * d + axis)])
            .sum::<f64>()
    };
    for _ in 0..200 {
        kf = kf_step(&kf, sim.discretized(), 0.0, &y, &h, &r).unwrap();
    }
    let z_before = trace(&kf, 2);
    for _ in 0..200 {
        kf = kf_step(&kf, sim.discretized(), 0.0, &y, &h, &r).unwrap();
    }
    assert!(trace(&kf, 2) > z_before);
}
