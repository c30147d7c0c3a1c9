use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::solver::{BoundaryConditions, ClosureState, ParamScale, Probe, StepCoefficients, TemperatureField};

/// What the forward pass recorded for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TapeStep {
    /// Physical coefficients used by the step.
    pub coeffs: StepCoefficients,
    pub bc: BoundaryConditions,
    /// Closure inputs of the Ox sweep along the probe's row.
    pub x_closure: ClosureState,
    /// Closure inputs of the Oy sweep along the probe's column.
    pub y_closure: ClosureState,
    pub probe_whole: f64,
    pub probe_half: f64,
    pub probe_next: f64,
    pub delta_x: f64,
    pub delta_y: f64,
}

/// Forward-pass record needed to replay gradients: every whole and half
/// layer plus per-step scalars along the probe's lines.
#[derive(Debug, Clone)]
pub struct StateTape {
    pub spatial: SpatialGrid,
    pub tau: f64,
    pub probe: Probe,
    pub scale: ParamScale,
    pub steps: Vec<TapeStep>,
    /// Layers `0..=n`.
    pub whole: Vec<TemperatureField>,
    /// Layers `1/2 .. n - 1/2`.
    pub half: Vec<TemperatureField>,
}

impl StateTape {
    pub(crate) fn new(
        spatial: SpatialGrid,
        tau: f64,
        probe: Probe,
        scale: ParamScale,
        initial: TemperatureField,
    ) -> Self {
        Self {
            spatial,
            tau,
            probe,
            scale,
            steps: Vec::new(),
            whole: vec![initial],
            half: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, step: TapeStep, half: TemperatureField, next: TemperatureField) {
        self.steps.push(step);
        self.half.push(half);
        self.whole.push(next);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.steps.len();
        if self.whole.len() != n + 1 || self.half.len() != n {
            return Err(Error::InvalidTape(format!(
                "{n} steps but {} whole and {} half layers",
                self.whole.len(),
                self.half.len()
            )));
        }
        let nodes = self.spatial.node_count();
        if self.whole.iter().chain(&self.half).any(|f| f.values().len() != nodes) {
            return Err(Error::InvalidTape("layer shape does not match the grid".into()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            let scalars = [s.probe_whole, s.probe_half, s.probe_next, s.delta_x, s.delta_y];
            if !scalars.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidTape(format!("non-finite entry at step {i}")));
            }
        }
        Ok(())
    }
}
