//! Forward model: 2D transient conduction advanced by locally one-dimensional
//! implicit half-steps, each solved with a tridiagonal sweep.
//!
//! Boundary layout used throughout:
//!
//! * `x = 0`: convective + radiative exchange with ambient `t1`
//!   (`kappa1`, `eps1`), entering through the sweep start on Ox;
//! * `x = x_max`: prescribed flux `q2`, entering through the Ox closure;
//! * `y = 0`: prescribed flux `q1`, entering through the sweep start on Oy;
//! * `y = y_max`: convective + radiative exchange with ambient `t2`
//!   (`kappa2`, `eps2`), entering through the Oy closure.
//!
//! Radiative terms are evaluated at the previous layer's surface temperature.

mod adi;
mod sweep;

pub use adi::{adi_step, probe_readout, simulate, Simulation};
pub use sweep::{
    back_substitute, closing_temperature, closing_temperature_x, closing_temperature_y,
    forward_sweep, sweep_start_x, sweep_start_y, tridiag_row_coeffs, RowCoefficients,
};
pub(crate) use sweep::{forward_sweep_into, solve_line, sweep_start, LineScratch};

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::materials::MaterialModel;

/// W m^-2 K^-4
pub const STEFAN_BOLTZMANN: f64 = 5.67e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Boundary data for one time step. Temperatures in K, `kappa` in
/// W/(m^2 K), fluxes in W/m^2, emissivities dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub t1: f64,
    pub t2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub q1: f64,
    pub q2: f64,
}

impl BoundaryConditions {
    /// Zero-flux, zero-exchange boundaries; `t1 = t2 = ambient`.
    pub fn insulated(ambient: f64) -> Self {
        Self {
            t1: ambient,
            t2: ambient,
            kappa1: 0.0,
            kappa2: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            q1: 0.0,
            q2: 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        STEFAN_BOLTZMANN
    }

    pub fn with_ambient(self, t1: f64, t2: f64) -> Self {
        Self { t1, t2, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("t1", self.t1), ("t2", self.t2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be > 0 K, got {v}")));
            }
        }
        for (field, v) in [("kappa1", self.kappa1), ("kappa2", self.kappa2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        for (field, v) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(field, format!("must be in [0, 1], got {v}")));
            }
        }
        for (field, v) in [("q1", self.q1), ("q2", self.q2)] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Per-step boundary data. Its length is the number of steps simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySchedule(pub Vec<BoundaryConditions>);

impl BoundarySchedule {
    pub fn constant(bc: BoundaryConditions, n_steps: usize) -> Self {
        Self(vec![bc; n_steps])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Time level of a field: whole layer `n` or half layer `n + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub step: usize,
    pub half: bool,
}

/// Node temperatures (K), stored row by row: `values[q * (nx + 1) + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    pub layer: Layer,
}

impl TemperatureField {
    pub fn uniform(grid: &SpatialGrid, t: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![t; grid.node_count()],
            layer: Layer { step: 0, half: false },
        }
    }

    /// Builds a field from row-major values (`q` outer, `k` inner).
    pub fn from_values(grid: &SpatialGrid, values: Vec<f64>, layer: Layer) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(
                "values",
                format!("expected {} nodes, got {}", grid.node_count(), values.len()),
            ));
        }
        Ok(Self {
            nx: grid.nx,
            ny: grid.ny,
            values,
            layer,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn index(&self, k: usize, q: usize) -> usize {
        q * (self.nx + 1) + k
    }

    #[inline]
    pub fn get(&self, k: usize, q: usize) -> f64 {
        self.values[self.index(k, q)]
    }

    pub fn set(&mut self, k: usize, q: usize, t: f64) {
        let i = self.index(k, q);
        self.values[i] = t;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, q: usize) -> &[f64] {
        let n = self.nx + 1;
        &self.values[q * n..(q + 1) * n]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &TemperatureField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Conductivity-role (`phi`, W/(m K)) and capacity-role (`omega`,
/// J/(m^3 K)) coefficients for both half-steps of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficients {
    pub phi_x: f64,
    pub omega_x: f64,
    pub phi_y: f64,
    pub omega_y: f64,
}

impl StepCoefficients {
    pub fn isotropic(phi: f64, omega: f64) -> Self {
        Self {
            phi_x: phi,
            omega_x: omega,
            phi_y: phi,
            omega_y: omega,
        }
    }

    pub fn get(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => (self.phi_x, self.omega_x),
            Axis::Y => (self.phi_y, self.omega_y),
        }
    }
}

/// Reference magnitudes that turn the free trajectory entries into physical
/// coefficients: `phi = phi_ref * entry`, `omega = omega_ref * entry`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamScale {
    pub phi_ref: f64,
    pub omega_ref: f64,
}

impl Default for ParamScale {
    fn default() -> Self {
        Self {
            phi_ref: 1.0,
            omega_ref: 1.0,
        }
    }
}

impl ParamScale {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("phi_ref", self.phi_ref), ("omega_ref", self.omega_ref)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Trainable per-step control sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTrajectory {
    pub phi_x: Vec<f64>,
    pub omega_x: Vec<f64>,
    pub phi_y: Vec<f64>,
    pub omega_y: Vec<f64>,
}

impl ParamTrajectory {
    pub fn uniform(n_steps: usize, phi: f64, omega: f64) -> Self {
        Self {
            phi_x: vec![phi; n_steps],
            omega_x: vec![omega; n_steps],
            phi_y: vec![phi; n_steps],
            omega_y: vec![omega; n_steps],
        }
    }

    pub fn from_steps(steps: &[StepCoefficients]) -> Self {
        Self {
            phi_x: steps.iter().map(|s| s.phi_x).collect(),
            omega_x: steps.iter().map(|s| s.omega_x).collect(),
            phi_y: steps.iter().map(|s| s.phi_y).collect(),
            omega_y: steps.iter().map(|s| s.omega_y).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.phi_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_x.is_empty()
    }

    /// Physical coefficients of step `n`.
    pub fn step(&self, n: usize, scale: ParamScale) -> StepCoefficients {
        StepCoefficients {
            phi_x: self.phi_x[n] * scale.phi_ref,
            omega_x: self.omega_x[n] * scale.omega_ref,
            phi_y: self.phi_y[n] * scale.phi_ref,
            omega_y: self.omega_y[n] * scale.omega_ref,
        }
    }

    /// Sum of absolute values over all four sequences.
    pub fn l1_norm(&self) -> f64 {
        self.sequences().iter().flat_map(|s| s.iter()).map(|v| v.abs()).sum()
    }

    pub fn sequences(&self) -> [&Vec<f64>; 4] {
        [&self.phi_x, &self.omega_x, &self.phi_y, &self.omega_y]
    }

    pub fn sequences_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.phi_x,
            &mut self.omega_x,
            &mut self.phi_y,
            &mut self.omega_y,
        ]
    }

    pub fn validate(&self, omega_min: f64) -> Result<()> {
        let n = self.len();
        let names = ["phi_x", "omega_x", "phi_y", "omega_y"];
        for (name, seq) in names.iter().zip(self.sequences()) {
            if seq.len() != n {
                return Err(Error::invalid("params", format!("{name} has length {} != {n}", seq.len())));
            }
        }
        // entries clamped to the floor are admissible; zero never is
        for (name, seq) in names.iter().zip(self.sequences()) {
            let ok = |v: f64| v.is_finite() && v > 0.0 && (!name.starts_with("omega") || v >= omega_min);
            if let Some((i, v)) = seq.iter().enumerate().find(|(_, v)| !ok(**v)) {
                return Err(Error::invalid(
                    "params",
                    format!("{name}[{i}] = {v} must be positive and omega >= {omega_min}"),
                ));
            }
        }
        Ok(())
    }
}

/// Where the per-step coefficients come from.
#[derive(Debug, Clone, Copy)]
pub enum CoefficientProvider<'a> {
    /// lambda, rho*c from tables at the field's mean temperature of layer n.
    Physical(&'a MaterialModel),
    /// Trajectory entry `n`, scaled to physical units.
    Trajectory {
        params: &'a ParamTrajectory,
        scale: ParamScale,
    },
}

impl CoefficientProvider<'_> {
    pub fn coefficients(&self, step: usize, field: &TemperatureField) -> StepCoefficients {
        match self {
            CoefficientProvider::Physical(material) => {
                let (phi, omega) = crate::materials::physical_coefficients(material, field.mean());
                StepCoefficients::isotropic(phi, omega)
            }
            CoefficientProvider::Trajectory { params, scale } => params.step(step, *scale),
        }
    }

    pub fn scale(&self) -> ParamScale {
        match self {
            CoefficientProvider::Physical(_) => ParamScale::default(),
            CoefficientProvider::Trajectory { scale, .. } => *scale,
        }
    }
}

/// Forward-sweep coefficients of one line, `T_l = alpha_l T_{l+1} + beta_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SweepCoefficients {
    /// Coefficients of the node next to the closing boundary.
    pub fn last(&self) -> (f64, f64) {
        let n = self.alpha.len();
        (self.alpha[n - 1], self.beta[n - 1])
    }

    /// First index whose `alpha` falls outside `(0, 1)`, if any.
    pub fn dominance_violation(&self) -> Option<usize> {
        self.alpha.iter().position(|a| !(*a > 0.0 && *a < 1.0))
    }
}

/// Inputs of a closing (boundary) node update, i.e. of the state equation
/// of one axis: the node's previous value, the sweep coefficients of its
/// neighbour, the step coefficients and geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureState {
    pub t_prev: f64,
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub omega: f64,
    pub h: f64,
    pub tau: f64,
    pub bc: BoundaryConditions,
}

/// Readout node `(k, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub k: usize,
    pub q: usize,
}

impl Probe {
    /// Centre of the `y = y_max` face.
    pub fn surface_center(grid: &SpatialGrid) -> Self {
        Self {
            k: grid.nx / 2,
            q: grid.ny,
        }
    }

    pub fn check(&self, grid: &SpatialGrid) -> Result<()> {
        if self.k > grid.nx || self.q > grid.ny {
            return Err(Error::invalid(
                "probe",
                format!("({}, {}) outside a {}x{} grid", self.k, self.q, grid.nx, grid.ny),
            ));
        }
        Ok(())
    }
}

/// Everything fixed across simulations of one setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatModel {
    pub spatial: SpatialGrid,
    pub time: TimeGrid,
    pub initial_temp: f64,
    pub probe: Probe,
}

impl HeatModel {
    pub fn new(spatial: SpatialGrid, time: TimeGrid, initial_temp: f64) -> Result<Self> {
        if !(initial_temp.is_finite() && initial_temp > 0.0) {
            return Err(Error::invalid("initial_temp", format!("must be > 0 K, got {initial_temp}")));
        }
        Ok(Self {
            spatial,
            time,
            initial_temp,
            probe: Probe::surface_center(&spatial),
        })
    }

    pub fn with_probe(mut self, probe: Probe) -> Result<Self> {
        probe.check(&self.spatial)?;
        self.probe = probe;
        Ok(self)
    }
}
