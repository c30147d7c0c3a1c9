use heat_adapt::benchmark;
use heat_adapt::datagen::generate_dataset;
use heat_adapt::gradients::{
    backprop, backprop_delta_chain, backprop_with, chain_errors, dstate_domega, dstate_dphi, GradientMode, StateTape,
};
use heat_adapt::grid::{SpatialGrid, TimeGrid};
use heat_adapt::solver::{
    simulate, Axis, BoundaryConditions, BoundarySchedule, CoefficientProvider, HeatModel, ParamScale,
    ParamTrajectory,
};
use heat_adapt::trainer::{record_to_schedule, sample_loss, HeatingRecord, Setup};
use heat_adapt::Error;

const SCALE: ParamScale = ParamScale {
    phi_ref: 1.0,
    omega_ref: 1e5,
};

fn tape(n_steps: usize) -> StateTape {
    let grid = SpatialGrid::new(0.1, 0.1, 8, 8).unwrap();
    let model = HeatModel::new(grid, TimeGrid::from_step(60.0, n_steps).unwrap(), 300.0).unwrap();
    let bc = BoundaryConditions {
        kappa1: 40.0,
        kappa2: 40.0,
        eps1: 0.8,
        eps2: 0.8,
        ..BoundaryConditions::insulated(1300.0)
    };
    let params = ParamTrajectory::uniform(n_steps, 40.0, 45.0);
    let provider = CoefficientProvider::Trajectory { params: &params, scale: SCALE };
    let sim = simulate(&model, provider, &BoundarySchedule::constant(bc, n_steps), true).unwrap();
    sim.tape.unwrap()
}

#[test]
fn single_step_delta_chain_equals_closure_partials() {
    let t = tape(1);
    let r = 12.5;
    let g = backprop_delta_chain(&t, r).unwrap();
    let s = &t.steps[0];
    assert_eq!(g.d_phi_y[0], -r * dstate_dphi(Axis::Y, &s.y_closure) * SCALE.phi_ref);
    assert_eq!(g.d_omega_y[0], -r * dstate_domega(Axis::Y, &s.y_closure) * SCALE.omega_ref);
}

#[test]
fn zero_residual_gives_zero_gradients() {
    let t = tape(5);
    for mode in [GradientMode::Adjoint, GradientMode::DeltaChain] {
        let g = backprop_with(mode, &t, 0.0).unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.sequences().iter().all(|s| s.iter().all(|v| *v == 0.0)));
    }
}

#[test]
fn chain_errors_decay_geometrically() {
    let t = tape(10);
    let errors = chain_errors(&t, 1.0);
    assert_eq!(errors[9], 1.0);
    for n in 0..9 {
        let s = &t.steps[n + 1];
        let factor = s.delta_x * s.delta_y;
        assert!(factor.abs() < 1.0);
        assert!((errors[n] - errors[n + 1] * factor).abs() <= 1e-15);
    }
}

#[test]
fn incomplete_tape_rejected() {
    let mut t = tape(3);
    t.whole.pop();
    assert!(matches!(backprop(&t, 1.0), Err(Error::InvalidTape(_))));
    assert!(matches!(backprop_delta_chain(&t, 1.0), Err(Error::InvalidTape(_))));
    let t = tape(3);
    assert!(matches!(backprop(&t, f64::NAN), Err(Error::InvalidArgument { .. })));
}

fn record_setup() -> (HeatingRecord, Setup) {
    let setup = benchmark::setup_with(8, 20, 120.0);
    let record = generate_dataset(&benchmark::generator(setup, 1, 0.0, 3)).unwrap()[0];
    (HeatingRecord { target_temp: record.target_temp + 40.0, ..record }, setup)
}

#[test]
fn adjoint_matches_differences_of_the_training_loss() {
    let (record, setup) = record_setup();
    let used = record_to_schedule(&record, &setup).unwrap().len();
    let mut params = ParamTrajectory::uniform(setup.horizon(), 60.0, 40.0);
    params.phi_y[2] = 75.0;
    params.omega_x[used - 1] = 33.0;
    let base = sample_loss(&record, &params, &setup, 0.0).unwrap();
    let grads = backprop(&base.tape, base.residual).unwrap();

    for seq in 0..4 {
        for n in [0, used / 2, used - 1] {
            let h = 1e-4 * params.sequences()[seq][n];
            let loss_at = |d: f64| {
                let mut p = params.clone();
                p.sequences_mut()[seq][n] += d;
                sample_loss(&record, &p, &setup, 0.0).unwrap().loss
            };
            let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            let g = grads.sequences()[seq][n];
            assert!((g - fd).abs() <= 1e-3 * fd.abs().max(1e-3), "seq {seq} step {n}: {g} vs {fd}");
        }
    }
}

#[test]
fn steps_past_the_record_get_no_data_gradient() {
    let (record, setup) = record_setup();
    let used = record_to_schedule(&record, &setup).unwrap().len();
    let params = ParamTrajectory::uniform(setup.horizon(), 60.0, 40.0);
    let s = sample_loss(&record, &params, &setup, 0.0).unwrap();
    let g = backprop(&s.tape, s.residual).unwrap().padded(setup.horizon());
    assert_eq!(g.len(), setup.horizon());
    for seq in g.sequences() {
        assert!(seq[used..].iter().all(|v| *v == 0.0));
        assert!(seq[..used].iter().any(|v| *v != 0.0));
    }
}
