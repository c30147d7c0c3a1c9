//! Split-step driver: Ox sweeps over every row produce the half layer, Oy
//! sweeps over every column produce the next whole layer.

use super::{
    solve_line, Axis, BoundaryConditions, BoundarySchedule, ClosureState, CoefficientProvider,
    HeatModel, Layer, LineScratch, Probe, StepCoefficients, TemperatureField,
};
use crate::error::{Error, Result};
use crate::gradients::{delta_coefficient, StateTape, TapeStep};
use crate::grid::SpatialGrid;

#[derive(Debug, Default)]
pub(crate) struct StepScratch {
    x: LineScratch,
    y: LineScratch,
}

impl StepScratch {
    pub fn for_grid(grid: &SpatialGrid) -> Self {
        let mut s = Self::default();
        s.x.resize(grid.row_len());
        s.y.resize(grid.col_len());
        s
    }
}

/// Advances `field` (layer `n`) by one step into `half` and `next`.
/// Returns the closure inputs of the probe's row (Ox) and column (Oy).
#[allow(clippy::too_many_arguments)]
pub(crate) fn adi_step_into(
    field: &TemperatureField,
    coeffs: &StepCoefficients,
    bc: &BoundaryConditions,
    grid: &SpatialGrid,
    tau: f64,
    probe: Probe,
    half: &mut TemperatureField,
    next: &mut TemperatureField,
    scratch: &mut StepScratch,
) -> Result<(ClosureState, ClosureState)> {
    let row_len = grid.row_len();
    let col_len = grid.col_len();
    let mut x_state = None;
    let mut y_state = None;

    for q in 0..col_len {
        scratch.x.line.copy_from_slice(field.row(q));
        let state = solve_line(Axis::X, coeffs.phi_x, coeffs.omega_x, bc, grid.hx, tau, &mut scratch.x)?;
        half.values_mut()[q * row_len..(q + 1) * row_len].copy_from_slice(&scratch.x.out);
        if q == probe.q {
            x_state = Some(state);
        }
    }

    let src = half.values();
    for k in 0..row_len {
        for (q, t) in scratch.y.line.iter_mut().enumerate() {
            *t = src[q * row_len + k];
        }
        let state = solve_line(Axis::Y, coeffs.phi_y, coeffs.omega_y, bc, grid.hy, tau, &mut scratch.y)?;
        let dst = next.values_mut();
        for (q, t) in scratch.y.out.iter().enumerate() {
            dst[q * row_len + k] = *t;
        }
        if k == probe.k {
            y_state = Some(state);
        }
    }

    let step = field.layer.step;
    half.layer = Layer { step, half: true };
    next.layer = Layer { step: step + 1, half: false };
    Ok((x_state.expect("probe row in grid"), y_state.expect("probe column in grid")))
}

/// One full time step `n -> n + 1`.
pub fn adi_step(
    field: &TemperatureField,
    coeffs: &StepCoefficients,
    bc: &BoundaryConditions,
    grid: &SpatialGrid,
    tau: f64,
) -> Result<TemperatureField> {
    if field.nx() != grid.nx || field.ny() != grid.ny {
        return Err(Error::invalid("field", "field shape does not match the grid"));
    }
    if field.layer.half {
        return Err(Error::invalid("field", "expected a whole layer"));
    }
    bc.validate()?;
    let mut half = field.clone();
    let mut next = field.clone();
    let mut scratch = StepScratch::for_grid(grid);
    adi_step_into(
        field,
        coeffs,
        bc,
        grid,
        tau,
        Probe::surface_center(grid),
        &mut half,
        &mut next,
        &mut scratch,
    )?;
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub field: TemperatureField,
    /// Probe temperature at every whole layer `0..=n_steps`.
    pub probe_history: Vec<f64>,
    pub tape: Option<StateTape>,
}

impl Simulation {
    pub fn probe(&self) -> f64 {
        *self.probe_history.last().expect("history holds the initial layer")
    }
}

/// Runs `schedule.len()` steps from the uniform field `model.initial_temp`.
pub fn simulate(
    model: &HeatModel,
    provider: CoefficientProvider<'_>,
    schedule: &BoundarySchedule,
    record_tape: bool,
) -> Result<Simulation> {
    let grid = &model.spatial;
    let tau = model.time.tau;
    let probe = model.probe;
    probe.check(grid)?;
    if let CoefficientProvider::Trajectory { params, scale } = provider {
        scale.validate()?;
        if params.len() < schedule.len() {
            return Err(Error::invalid(
                "params",
                format!("trajectory covers {} steps, schedule needs {}", params.len(), schedule.len()),
            ));
        }
    }
    for bc in &schedule.0 {
        bc.validate()?;
    }

    let mut field = TemperatureField::uniform(grid, model.initial_temp);
    let mut half = field.clone();
    let mut next = field.clone();
    let mut scratch = StepScratch::for_grid(grid);
    let mut probe_history = Vec::with_capacity(schedule.len() + 1);
    probe_history.push(field.get(probe.k, probe.q));
    let mut tape = record_tape.then(|| StateTape::new(*grid, tau, probe, provider.scale(), field.clone()));

    for (n, bc) in schedule.0.iter().enumerate() {
        let coeffs = provider.coefficients(n, &field);
        let (x_closure, y_closure) =
            adi_step_into(&field, &coeffs, bc, grid, tau, probe, &mut half, &mut next, &mut scratch)?;
        if !next.values().iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite { step: n });
        }
        if let Some(tape) = tape.as_mut() {
            tape.push(
                TapeStep {
                    coeffs,
                    bc: *bc,
                    x_closure,
                    y_closure,
                    probe_whole: field.get(probe.k, probe.q),
                    probe_half: half.get(probe.k, probe.q),
                    probe_next: next.get(probe.k, probe.q),
                    delta_x: delta_coefficient(Axis::X, &x_closure),
                    delta_y: delta_coefficient(Axis::Y, &y_closure),
                },
                half.clone(),
                next.clone(),
            );
        }
        std::mem::swap(&mut field, &mut next);
        probe_history.push(field.get(probe.k, probe.q));
    }

    Ok(Simulation {
        field,
        probe_history,
        tape,
    })
}

pub fn probe_readout(field: &TemperatureField, probe: Probe) -> Result<f64> {
    if probe.k > field.nx() || probe.q > field.ny() {
        return Err(Error::invalid(
            "probe",
            format!("({}, {}) outside a {}x{} field", probe.k, probe.q, field.nx(), field.ny()),
        ));
    }
    Ok(field.get(probe.k, probe.q))
}
