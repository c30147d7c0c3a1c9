//! Finite-difference verification of the analytic derivatives.
//!
//! Central differences use a relative step of `1e-4` with one Richardson
//! extrapolation, which keeps truncation error near `1e-12` relative while
//! staying clear of cancellation in states of order `1e3` K.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backprop::backprop;
use super::partials::{dstate_domega, dstate_dphi, dstate_dt};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::solver::{
    closing_temperature, simulate, Axis, BoundaryConditions, BoundarySchedule, ClosureState,
    CoefficientProvider, HeatModel, ParamScale, ParamTrajectory,
};

/// Reference magnitudes used when sampling coefficients: `phi` and `omega`
/// are drawn from `[0.1, 100]` times these.
pub const CHECK_SCALE: ParamScale = ParamScale {
    phi_ref: 1.0,
    omega_ref: 1e5,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckTarget {
    DstateDt,
    DstatePhi,
    DstateOmega,
    Backprop,
}

impl CheckTarget {
    pub const ALL: [CheckTarget; 4] = [
        CheckTarget::DstateDt,
        CheckTarget::DstatePhi,
        CheckTarget::DstateOmega,
        CheckTarget::Backprop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckTarget::DstateDt => "dstate_dT",
            CheckTarget::DstatePhi => "dstate_dphi",
            CheckTarget::DstateOmega => "dstate_domega",
            CheckTarget::Backprop => "backprop",
        }
    }

    /// Maximum accepted relative error.
    pub fn tolerance(self) -> f64 {
        match self {
            CheckTarget::Backprop => 1e-3,
            _ => 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub target: CheckTarget,
    pub trials: usize,
    pub max_rel_err: f64,
    /// Description of the sample with the largest error.
    pub worst_point: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.target.tolerance()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<14} {:>6} {:>12.4e} {}",
            self.target.name(),
            self.trials,
            self.max_rel_err,
            self.worst_point
        )
    }
}

/// Central difference with one Richardson step.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, rel_step: f64) -> f64 {
    let h = rel_step * x.abs().max(1e-12);
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let (d1, d2) = (d(h), d(h / 2.0));
    (4.0 * d2 - d1) / 3.0
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn random_bc(rng: &mut ChaCha8Rng) -> BoundaryConditions {
    BoundaryConditions {
        t1: rng.random_range(300.0..1600.0),
        t2: rng.random_range(300.0..1600.0),
        kappa1: rng.random_range(0.0..100.0),
        kappa2: rng.random_range(0.0..100.0),
        eps1: rng.random_range(0.0..1.0),
        eps2: rng.random_range(0.0..1.0),
        q1: rng.random_range(-1e3..1e3),
        q2: rng.random_range(-1e3..1e3),
    }
}

fn random_closure(rng: &mut ChaCha8Rng) -> ClosureState {
    let alpha = rng.random_range(0.05..0.95);
    ClosureState {
        t_prev: rng.random_range(300.0..1600.0),
        alpha,
        beta: (1.0 - alpha) * rng.random_range(300.0..1600.0),
        phi: rng.random_range(0.1..100.0) * CHECK_SCALE.phi_ref,
        omega: rng.random_range(0.1..100.0) * CHECK_SCALE.omega_ref,
        h: rng.random_range(1e-3..0.05),
        tau: rng.random_range(0.1..60.0),
        bc: random_bc(rng),
    }
}

fn closure_check(target: CheckTarget, trials: usize, rng: &mut ChaCha8Rng) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for trial in 0..trials {
        let s = random_closure(rng);
        let axis = if trial % 2 == 0 { Axis::X } else { Axis::Y };
        let g = |p: ClosureState| closing_temperature(axis, &p).unwrap_or(f64::NAN);
        let (analytic, numeric) = match target {
            CheckTarget::DstateDt => (
                dstate_dt(axis, &s),
                richardson_derivative(|v| g(ClosureState { t_prev: v, ..s }), s.t_prev, 1e-4),
            ),
            CheckTarget::DstatePhi => (
                dstate_dphi(axis, &s),
                richardson_derivative(|v| g(ClosureState { phi: v, ..s }), s.phi, 1e-4),
            ),
            CheckTarget::DstateOmega => (
                dstate_domega(axis, &s),
                richardson_derivative(|v| g(ClosureState { omega: v, ..s }), s.omega, 1e-4),
            ),
            CheckTarget::Backprop => unreachable!(),
        };
        let err = rel_err(analytic, numeric);
        if !(err <= worst.0) {
            worst = (
                err,
                format!(
                    "axis={} T={:.6} alpha={:.6} beta={:.6} phi={:.6} omega={:.6} h={:.6} tau={:.6} analytic={:.6e} numeric={:.6e}",
                    axis.name(), s.t_prev, s.alpha, s.beta, s.phi, s.omega, s.h, s.tau, analytic, numeric
                ),
            );
        }
    }
    worst
}

/// One random end-to-end problem on a 6x6-cell grid over three steps.
pub(crate) struct ToyProblem {
    pub model: HeatModel,
    pub schedule: BoundarySchedule,
    pub params: ParamTrajectory,
}

impl ToyProblem {
    pub fn sample(rng: &mut ChaCha8Rng) -> Self {
        let size = rng.random_range(0.02..0.2);
        let n_steps = 3;
        let spatial = SpatialGrid::new(size, size, 6, 6).expect("valid toy grid");
        let tau = rng.random_range(1.0..30.0);
        let time = TimeGrid::new(tau * n_steps as f64, n_steps).expect("valid toy time grid");
        let model = HeatModel::new(spatial, time, rng.random_range(300.0..1600.0)).expect("valid toy model");
        let schedule = BoundarySchedule((0..n_steps).map(|_| random_bc(rng)).collect());
        let mut draw = || (0..n_steps).map(|_| rng.random_range(0.1..100.0)).collect::<Vec<_>>();
        let params = ParamTrajectory {
            phi_x: draw(),
            omega_x: draw(),
            phi_y: draw(),
            omega_y: draw(),
        };
        Self { model, schedule, params }
    }

    pub fn probe_value(&self, params: &ParamTrajectory) -> f64 {
        let provider = CoefficientProvider::Trajectory {
            params,
            scale: CHECK_SCALE,
        };
        simulate(&self.model, provider, &self.schedule, false)
            .map(|s| s.probe())
            .unwrap_or(f64::NAN)
    }
}

fn backprop_check(trials: usize, rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let mut worst = (0.0, String::new());
    for trial in 0..trials {
        let toy = ToyProblem::sample(rng);
        let provider = CoefficientProvider::Trajectory {
            params: &toy.params,
            scale: CHECK_SCALE,
        };
        let sim = simulate(&toy.model, provider, &toy.schedule, true)?;
        let tape = sim.tape.expect("tape requested");
        // residual -1 turns dE/du into d(prediction)/du
        let grads = backprop(&tape, -1.0)?;
        let names = ["phi_x", "omega_x", "phi_y", "omega_y"];
        for (seq_idx, (name, analytic_seq)) in names.iter().zip(grads.sequences()).enumerate() {
            for n in 0..toy.params.len() {
                let base = toy.params.sequences()[seq_idx][n];
                let f = |v: f64| {
                    let mut p = toy.params.clone();
                    p.sequences_mut()[seq_idx][n] = v;
                    toy.probe_value(&p)
                };
                let numeric = richardson_derivative(f, base, 1e-4);
                let err = rel_err(analytic_seq[n], numeric);
                if !(err <= worst.0) {
                    worst = (
                        err,
                        format!(
                            "trial={trial} param={name}[{n}] value={base:.6} analytic={:.6e} numeric={numeric:.6e}",
                            analytic_seq[n]
                        ),
                    );
                }
            }
        }
    }
    Ok(worst)
}

/// Compares analytic derivatives against finite differences on `trials`
/// random points drawn from `seed`.
pub fn finite_difference_check(target: CheckTarget, trials: usize, seed: u64) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (max_rel_err, worst_point) = match target {
        CheckTarget::Backprop => backprop_check(trials, &mut rng)?,
        _ => closure_check(target, trials, &mut rng),
    };
    Ok(CheckReport {
        target,
        trials,
        max_rel_err,
        worst_point,
    })
}
