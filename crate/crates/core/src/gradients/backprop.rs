//! Backpropagation of the terminal probe error onto the per-step
//! coefficients.
//!
//! [`backprop`] is the exact adjoint of the forward pass: it replays every
//! line solve of every step in reverse, so its result equals the derivative
//! of the simulated loss. [`backprop_delta_chain`] is the scalar recursion
//! anchored at the probe's lines, which carries the terminal error backward
//! through the per-step delta factors only.

use super::partials::{
    dstate_dalpha, dstate_dbeta, dstate_domega, dstate_dphi, dstate_dt, start_partials,
};
use super::tape::StateTape;
use crate::error::{Error, Result};
use crate::solver::{forward_sweep_into, sweep_start, Axis, BoundaryConditions, ClosureState};

/// Loss gradient per trainable entry (already multiplied by the
/// [`ParamScale`](crate::solver::ParamScale) references).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub d_phi_x: Vec<f64>,
    pub d_omega_x: Vec<f64>,
    pub d_phi_y: Vec<f64>,
    pub d_omega_y: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(n_steps: usize) -> Self {
        Self {
            d_phi_x: vec![0.0; n_steps],
            d_omega_x: vec![0.0; n_steps],
            d_phi_y: vec![0.0; n_steps],
            d_omega_y: vec![0.0; n_steps],
        }
    }

    pub fn len(&self) -> usize {
        self.d_phi_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_phi_x.is_empty()
    }

    /// Extends with zeros up to `n_steps`: steps a record never reaches get
    /// no gradient.
    pub fn padded(mut self, n_steps: usize) -> Self {
        if n_steps > self.len() {
            for s in self.sequences_mut() {
                s.resize(n_steps, 0.0);
            }
        }
        self
    }

    pub fn sequences(&self) -> [&Vec<f64>; 4] {
        [&self.d_phi_x, &self.d_omega_x, &self.d_phi_y, &self.d_omega_y]
    }

    pub fn sequences_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.d_phi_x,
            &mut self.d_omega_x,
            &mut self.d_phi_y,
            &mut self.d_omega_y,
        ]
    }

    /// Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        self.sequences()
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.sequences().iter().flat_map(|s| s.iter()).all(|g| g.is_finite())
    }

    /// Elementwise `self += other`; lengths must match.
    pub fn accumulate(&mut self, other: &GradientSet) {
        for (a, b) in self.sequences_mut().into_iter().zip(other.sequences()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.sequences_mut() {
            s.iter_mut().for_each(|g| *g *= factor);
        }
    }
}

/// How the terminal error is carried back to earlier steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Exact reverse pass through every line solve.
    #[default]
    Adjoint,
    /// Scalar delta-factor recursion along the probe's lines.
    DeltaChain,
}

impl GradientMode {
    pub fn name(self) -> &'static str {
        match self {
            GradientMode::Adjoint => "adjoint",
            GradientMode::DeltaChain => "delta-chain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adjoint" => Some(GradientMode::Adjoint),
            "delta-chain" => Some(GradientMode::DeltaChain),
            _ => None,
        }
    }
}

pub fn backprop_with(mode: GradientMode, tape: &StateTape, residual: f64) -> Result<GradientSet> {
    match mode {
        GradientMode::Adjoint => backprop(tape, residual),
        GradientMode::DeltaChain => backprop_delta_chain(tape, residual),
    }
}

/// Reusable buffers for the reverse pass of one line.
#[derive(Debug, Default)]
struct LineAdjoint {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
    beta_bar: Vec<f64>,
    prev: Vec<f64>,
    out: Vec<f64>,
    out_bar: Vec<f64>,
    prev_bar: Vec<f64>,
}

impl LineAdjoint {
    fn resize(&mut self, nodes: usize) {
        for v in [&mut self.alpha, &mut self.beta, &mut self.alpha_bar, &mut self.beta_bar] {
            v.resize(nodes - 1, 0.0);
        }
        for v in [&mut self.prev, &mut self.out, &mut self.out_bar, &mut self.prev_bar] {
            v.resize(nodes, 0.0);
        }
    }

    /// Reverse pass of one line solve. Inputs: `prev` (line at the previous
    /// layer), `out` (solved line) and `out_bar` (adjoint of `out`, consumed).
    /// Leaves the adjoint of `prev` in `prev_bar` and returns the adjoints of
    /// `(phi, omega)`.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        axis: Axis,
        phi: f64,
        omega: f64,
        bc: &BoundaryConditions,
        h: f64,
        tau: f64,
    ) -> Result<(f64, f64)> {
        let m = self.alpha.len();
        let start = sweep_start(axis, phi, omega, bc, h, tau, self.prev[0]);
        forward_sweep_into(&self.prev, start, phi, omega, h, tau, &mut self.alpha, &mut self.beta)?;

        self.alpha_bar.fill(0.0);
        self.beta_bar.fill(0.0);
        self.prev_bar.fill(0.0);

        // back substitution out[l] = alpha[l] out[l + 1] + beta[l], run top-down
        for l in 0..m {
            let ob = self.out_bar[l];
            if ob != 0.0 {
                self.alpha_bar[l] += ob * self.out[l + 1];
                self.beta_bar[l] += ob;
                self.out_bar[l + 1] += ob * self.alpha[l];
            }
        }

        let mut phi_bar = 0.0;
        let mut omega_bar = 0.0;
        let g_bar = self.out_bar[m];
        if g_bar != 0.0 {
            let s = ClosureState {
                t_prev: self.prev[m],
                alpha: self.alpha[m - 1],
                beta: self.beta[m - 1],
                phi,
                omega,
                h,
                tau,
                bc: *bc,
            };
            self.prev_bar[m] += g_bar * dstate_dt(axis, &s);
            self.alpha_bar[m - 1] += g_bar * dstate_dalpha(axis, &s);
            self.beta_bar[m - 1] += g_bar * dstate_dbeta(axis, &s);
            phi_bar += g_bar * dstate_dphi(axis, &s);
            omega_bar += g_bar * dstate_domega(axis, &s);
        }

        // forward recursion: p = b - off alpha[l-1], alpha[l] = off / p,
        // beta[l] = (off beta[l-1] + cap prev[l]) / p
        let off = phi / (h * h);
        let cap = omega / tau;
        let b = 2.0 * off + cap;
        let mut off_bar = 0.0;
        let mut cap_bar = 0.0;
        for l in (1..m).rev() {
            let ab = self.alpha_bar[l];
            let bb = self.beta_bar[l];
            if ab == 0.0 && bb == 0.0 {
                continue;
            }
            let p = b - off * self.alpha[l - 1];
            let p_bar = -(ab * self.alpha[l] + bb * self.beta[l]) / p;
            off_bar += ab / p + bb * self.beta[l - 1] / p - p_bar * self.alpha[l - 1];
            cap_bar += bb * self.prev[l] / p;
            self.prev_bar[l] += bb * cap / p;
            self.beta_bar[l - 1] += bb * off / p;
            self.alpha_bar[l - 1] -= p_bar * off;
            // p depends on b = 2 off + cap
            off_bar += 2.0 * p_bar;
            cap_bar += p_bar;
        }

        let sp = start_partials(axis, phi, omega, bc, h, tau, self.prev[0]);
        let (ab0, bb0) = (self.alpha_bar[0], self.beta_bar[0]);
        phi_bar += ab0 * sp.dalpha_dphi + bb0 * sp.dbeta_dphi + off_bar / (h * h);
        omega_bar += ab0 * sp.dalpha_domega + bb0 * sp.dbeta_domega + cap_bar / tau;
        self.prev_bar[0] += bb0 * sp.dbeta_dt;
        Ok((phi_bar, omega_bar))
    }
}

fn check_tape(tape: &StateTape, residual: f64) -> Result<()> {
    tape.validate()?;
    if tape.is_empty() {
        return Err(Error::InvalidTape("no steps recorded".into()));
    }
    if !residual.is_finite() {
        return Err(Error::invalid("residual", "must be finite"));
    }
    Ok(())
}

/// Exact gradient of `E = (y - prediction)^2 / 2` with respect to every
/// trajectory entry, given `residual = y - prediction`.
pub fn backprop(tape: &StateTape, residual: f64) -> Result<GradientSet> {
    check_tape(tape, residual)?;
    let n_steps = tape.len();
    let mut grads = GradientSet::zeros(n_steps);
    if residual == 0.0 {
        return Ok(grads);
    }

    let grid = &tape.spatial;
    let row_len = grid.row_len();
    let col_len = grid.col_len();
    let nodes = grid.node_count();
    let mut x_line = LineAdjoint::default();
    x_line.resize(row_len);
    let mut y_line = LineAdjoint::default();
    y_line.resize(col_len);

    // adjoint of the whole layer n + 1, then of the half layer
    let mut whole_bar = vec![0.0; nodes];
    let mut half_bar = vec![0.0; nodes];
    whole_bar[tape.probe.q * row_len + tape.probe.k] = -residual;

    for n in (0..n_steps).rev() {
        let step = &tape.steps[n];
        let c = step.coeffs;
        let half = tape.half[n].values();
        let next = tape.whole[n + 1].values();
        let prev = tape.whole[n].values();

        half_bar.fill(0.0);
        let (mut phi_y, mut omega_y) = (0.0, 0.0);
        for k in 0..row_len {
            let mut any = false;
            for q in 0..col_len {
                let i = q * row_len + k;
                y_line.out_bar[q] = whole_bar[i];
                any |= whole_bar[i] != 0.0;
            }
            if !any {
                continue;
            }
            for q in 0..col_len {
                let i = q * row_len + k;
                y_line.prev[q] = half[i];
                y_line.out[q] = next[i];
            }
            let (pb, wb) = y_line.run(Axis::Y, c.phi_y, c.omega_y, &step.bc, grid.hy, tape.tau)?;
            phi_y += pb;
            omega_y += wb;
            for q in 0..col_len {
                half_bar[q * row_len + k] = y_line.prev_bar[q];
            }
        }

        whole_bar.fill(0.0);
        let (mut phi_x, mut omega_x) = (0.0, 0.0);
        for q in 0..col_len {
            let span = q * row_len..(q + 1) * row_len;
            if half_bar[span.clone()].iter().all(|v| *v == 0.0) {
                continue;
            }
            x_line.out_bar.copy_from_slice(&half_bar[span.clone()]);
            x_line.prev.copy_from_slice(&prev[span.clone()]);
            x_line.out.copy_from_slice(&half[span.clone()]);
            let (pb, wb) = x_line.run(Axis::X, c.phi_x, c.omega_x, &step.bc, grid.hx, tape.tau)?;
            phi_x += pb;
            omega_x += wb;
            whole_bar[span].copy_from_slice(&x_line.prev_bar);
        }

        grads.d_phi_x[n] = phi_x * tape.scale.phi_ref;
        grads.d_omega_x[n] = omega_x * tape.scale.omega_ref;
        grads.d_phi_y[n] = phi_y * tape.scale.phi_ref;
        grads.d_omega_y[n] = omega_y * tape.scale.omega_ref;
    }

    if !grads.is_finite() {
        return Err(Error::InvalidTape("gradient is not finite".into()));
    }
    Ok(grads)
}

/// Scalar error recursion anchored at the probe's lines.
///
/// At the last step the error `e = -(y - prediction)` multiplies the
/// closure partials of the probe column (Oy) and, chained through
/// `dstate_dt` of that closure, of the probe row (Ox). Moving one step back
/// multiplies the carried error by the delta factors of both axes.
pub fn backprop_delta_chain(tape: &StateTape, residual: f64) -> Result<GradientSet> {
    check_tape(tape, residual)?;
    let n_steps = tape.len();
    let mut grads = GradientSet::zeros(n_steps);
    if residual == 0.0 {
        return Ok(grads);
    }
    for (n, e) in chain_errors(tape, -residual).into_iter().enumerate() {
        let step = &tape.steps[n];
        let (xs, ys) = (&step.x_closure, &step.y_closure);
        let through_y = e * dstate_dt(Axis::Y, ys);
        grads.d_phi_y[n] = e * dstate_dphi(Axis::Y, ys) * tape.scale.phi_ref;
        grads.d_omega_y[n] = e * dstate_domega(Axis::Y, ys) * tape.scale.omega_ref;
        grads.d_phi_x[n] = through_y * dstate_dphi(Axis::X, xs) * tape.scale.phi_ref;
        grads.d_omega_x[n] = through_y * dstate_domega(Axis::X, xs) * tape.scale.omega_ref;
    }
    if !grads.is_finite() {
        return Err(Error::InvalidTape("gradient is not finite".into()));
    }
    Ok(grads)
}

/// Carried error at every step for the delta recursion, starting from
/// `terminal` at the last step.
pub fn chain_errors(tape: &StateTape, terminal: f64) -> Vec<f64> {
    let n_steps = tape.len();
    let mut errors = vec![0.0; n_steps];
    let mut e = terminal;
    for n in (0..n_steps).rev() {
        errors[n] = e;
        let step = &tape.steps[n];
        e *= step.delta_x * step.delta_y;
    }
    errors
}
