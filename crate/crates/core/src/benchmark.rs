//! Desk-scale synthetic furnace benchmark.
//!
//! A 0.1 m x 0.1 m quarter section of a carbon-steel billet: the `x = 0` and
//! `y = y_max` faces exchange heat with the furnace, the other two faces
//! are symmetry planes. Records cover three zones of 300-700 s each at
//! 1150-1450 K followed by 30-170 s of travel to the pyrometer.

use crate::datagen::GeneratorConfig;
use crate::grid::{SpatialGrid, TimeGrid};
use crate::materials::MaterialModel;
use crate::solver::{BoundaryConditions, HeatModel, ParamScale};
use crate::trainer::{Setup, TrainConfig};

pub const SIZE: f64 = 0.1;
pub const INITIAL_TEMP: f64 = 300.0;
pub const ZONE_TIME_RANGE: (f64, f64) = (300.0, 700.0);
pub const ZONE_TEMP_RANGE: (f64, f64) = (1150.0, 1450.0);
pub const COOLING_TIME_RANGE: (f64, f64) = (30.0, 170.0);

/// Trajectory entries are multiples of these. With entries of order 25-100
/// a learning rate of 1e-3 moves a typical prediction by well under a kelvin
/// per record.
pub const SCALE: ParamScale = ParamScale {
    phi_ref: 0.6,
    omega_ref: 1e5,
};

pub fn exchange() -> BoundaryConditions {
    BoundaryConditions {
        kappa1: 40.0,
        kappa2: 40.0,
        eps1: 0.8,
        eps2: 0.8,
        ..BoundaryConditions::insulated(INITIAL_TEMP)
    }
}

/// `cells x cells` grid over `n_steps` steps of `tau` seconds.
pub fn setup_with(cells: usize, n_steps: usize, tau: f64) -> Setup {
    let spatial = SpatialGrid::new(SIZE, SIZE, cells, cells).expect("benchmark grid");
    let time = TimeGrid::from_step(tau, n_steps).expect("benchmark time grid");
    Setup {
        model: HeatModel::new(spatial, time, INITIAL_TEMP).expect("benchmark model"),
        template: exchange(),
        cooling_ambient: INITIAL_TEMP,
        scale: SCALE,
    }
}

/// 20 x 20 cells, 20 steps of 120 s.
pub fn setup() -> Setup {
    setup_with(20, 20, 120.0)
}

/// 100 x 100 cells, 50 steps of 48 s.
pub fn full_scale_setup() -> Setup {
    setup_with(100, 50, 48.0)
}

pub fn generator(setup: Setup, n_records: usize, noise_sigma: f64, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        n_records,
        material: MaterialModel::carbon_steel(),
        zone_time_range: ZONE_TIME_RANGE,
        zone_temp_range: ZONE_TEMP_RANGE,
        cooling_time_range: COOLING_TIME_RANGE,
        noise_sigma,
        seed,
        setup,
    }
}

pub fn train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        eta: 0.001,
        lambda1: 0.05,
        max_epochs: 500,
        seed,
        ..TrainConfig::default()
    }
}
