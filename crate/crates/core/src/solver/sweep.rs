//! One-dimensional implicit line solves: row coefficients, sweep start
//! values from the boundary balances, the forward recursion, the closing
//! node update and back substitution.

use super::{Axis, BoundaryConditions, ClosureState, SweepCoefficients};
use crate::error::{Error, Result};

const MIN_PIVOT: f64 = 1e-300;

/// Row `A T_{l+1} - B T_l + C T_{l-1} = F` of the implicit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: f64,
}

pub fn tridiag_row_coeffs(phi: f64, omega: f64, h: f64, tau: f64, t_prev: f64) -> RowCoefficients {
    let off = phi / (h * h);
    let cap = omega / tau;
    RowCoefficients {
        a: off,
        b: 2.0 * off + cap,
        c: off,
        f: -cap * t_prev,
    }
}

/// Start coefficients on Ox from the convective-radiative balance at `x = 0`.
pub fn sweep_start_x(
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    hx: f64,
    tau: f64,
    t_surface_prev: f64,
) -> (f64, f64) {
    let wh2 = omega * hx * hx;
    let den = wh2 + 2.0 * tau * (phi + bc.kappa1 * hx);
    let alpha = 2.0 * phi * tau / den;
    let rad = bc.t1.powi(4) - t_surface_prev.powi(4);
    let beta = (wh2 * t_surface_prev
        + 2.0 * tau * bc.kappa1 * hx * bc.t1
        + 2.0 * tau * bc.eps1 * bc.sigma() * hx * rad)
        / den;
    (alpha, beta)
}

/// Start coefficients on Oy from the prescribed flux `q1` at `y = 0`.
pub fn sweep_start_y(
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    hy: f64,
    tau: f64,
    t_surface_prev: f64,
) -> (f64, f64) {
    let a = phi / omega;
    let den = hy * hy + 2.0 * a * tau;
    let alpha = 2.0 * a * tau / den;
    let beta = hy * hy * t_surface_prev / den + 2.0 * a * tau * hy * bc.q1 / (phi * den);
    (alpha, beta)
}

pub(crate) fn sweep_start(
    axis: Axis,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    h: f64,
    tau: f64,
    t_surface_prev: f64,
) -> (f64, f64) {
    match axis {
        Axis::X => sweep_start_x(phi, omega, bc, h, tau, t_surface_prev),
        Axis::Y => sweep_start_y(phi, omega, bc, h, tau, t_surface_prev),
    }
}

/// Forward recursion over `line_prev` (the line at the previous layer).
/// Returns coefficients for nodes `0..len-1`; the last node is closed by the
/// boundary update.
pub fn forward_sweep(
    line_prev: &[f64],
    start: (f64, f64),
    phi: f64,
    omega: f64,
    h: f64,
    tau: f64,
) -> Result<SweepCoefficients> {
    if line_prev.len() < 3 {
        return Err(Error::invalid("line_prev", "a line needs at least 3 nodes"));
    }
    let m = line_prev.len() - 1;
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; m];
    forward_sweep_into(line_prev, start, phi, omega, h, tau, &mut alpha, &mut beta)?;
    Ok(SweepCoefficients { alpha, beta })
}

#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn forward_sweep_into(
    line_prev: &[f64],
    start: (f64, f64),
    phi: f64,
    omega: f64,
    h: f64,
    tau: f64,
    alpha: &mut [f64],
    beta: &mut [f64],
) -> Result<()> {
    let off = phi / (h * h);
    let cap = omega / tau;
    let b = 2.0 * off + cap;
    alpha[0] = start.0;
    beta[0] = start.1;
    for l in 1..alpha.len() {
        let pivot = b - off * alpha[l - 1];
        if !(pivot.abs() >= MIN_PIVOT) {
            return Err(Error::SingularSweep { node: l, pivot });
        }
        alpha[l] = off / pivot;
        beta[l] = (off * beta[l - 1] + cap * line_prev[l]) / pivot;
    }
    Ok(())
}

/// Closing node on Ox (`x = x_max`, flux `q2`), layer `n + 1/2`.
#[allow(clippy::too_many_arguments)]
pub fn closing_temperature_x(
    t_node_prev: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    hx: f64,
    tau: f64,
) -> Result<f64> {
    let a = phi / omega;
    let num = 2.0 * a * tau * phi * beta - 2.0 * a * tau * hx * bc.q2 + hx * hx * phi * t_node_prev;
    let den = phi * hx * hx + 2.0 * a * tau * phi * (1.0 - alpha);
    closed(Axis::X, num, den)
}

/// Closing node on Oy (`y = y_max`, convective-radiative exchange with `t2`),
/// layer `n + 1`.
#[allow(clippy::too_many_arguments)]
pub fn closing_temperature_y(
    t_node_prev: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    hy: f64,
    tau: f64,
) -> Result<f64> {
    let rad = bc.t2.powi(4) - t_node_prev.powi(4);
    let num = 2.0 * phi * tau * beta
        + 2.0 * tau * bc.kappa2 * hy * bc.t2
        + omega * hy * hy * t_node_prev
        + 2.0 * tau * bc.eps2 * bc.sigma() * hy * rad;
    let den = 2.0 * tau * phi * (1.0 - alpha) + 2.0 * tau * bc.kappa2 * hy + omega * hy * hy;
    closed(Axis::Y, num, den)
}

#[inline]
fn closed(axis: Axis, num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::UnstableClosure {
            axis: axis.name(),
            denominator: den,
        });
    }
    Ok(num / den)
}

/// State equation of `axis`: the closing node value from its inputs.
pub fn closing_temperature(axis: Axis, s: &ClosureState) -> Result<f64> {
    match axis {
        Axis::X => closing_temperature_x(s.t_prev, s.alpha, s.beta, s.phi, s.omega, &s.bc, s.h, s.tau),
        Axis::Y => closing_temperature_y(s.t_prev, s.alpha, s.beta, s.phi, s.omega, &s.bc, s.h, s.tau),
    }
}

pub fn back_substitute(sweep: &SweepCoefficients, t_closing: f64) -> Vec<f64> {
    let mut out = vec![0.0; sweep.alpha.len() + 1];
    back_substitute_into(&sweep.alpha, &sweep.beta, t_closing, &mut out);
    out
}

#[inline]
fn back_substitute_into(alpha: &[f64], beta: &[f64], t_closing: f64, out: &mut [f64]) {
    let m = alpha.len();
    out[m] = t_closing;
    for l in (0..m).rev() {
        out[l] = alpha[l] * out[l + 1] + beta[l];
    }
}

/// Reusable buffers for line solves.
#[derive(Debug, Default)]
pub(crate) struct LineScratch {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub line: Vec<f64>,
    pub out: Vec<f64>,
}

impl LineScratch {
    pub fn resize(&mut self, nodes: usize) {
        self.alpha.resize(nodes - 1, 0.0);
        self.beta.resize(nodes - 1, 0.0);
        self.line.resize(nodes, 0.0);
        self.out.resize(nodes, 0.0);
    }
}

/// Solves one line: `scratch.line` holds the previous layer, the result is
/// left in `scratch.out` and the sweep coefficients in `scratch.alpha/beta`.
/// Returns the closure inputs so callers can record them.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_line(
    axis: Axis,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    h: f64,
    tau: f64,
    scratch: &mut LineScratch,
) -> Result<ClosureState> {
    let LineScratch {
        alpha,
        beta,
        line,
        out,
    } = scratch;
    let m = alpha.len();
    let start = sweep_start(axis, phi, omega, bc, h, tau, line[0]);
    forward_sweep_into(line, start, phi, omega, h, tau, alpha, beta)?;
    let state = ClosureState {
        t_prev: line[m],
        alpha: alpha[m - 1],
        beta: beta[m - 1],
        phi,
        omega,
        h,
        tau,
        bc: *bc,
    };
    let closing = closing_temperature(axis, &state)?;
    back_substitute_into(alpha, beta, closing, out);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn no_exchange() -> BoundaryConditions {
        BoundaryConditions::insulated(300.0)
    }

    #[test]
    fn row_coefficients() {
        let r = tridiag_row_coeffs(1.0, 1.0, 1.0, 1.0, 300.0);
        assert_eq!(r, RowCoefficients { a: 1.0, b: 3.0, c: 1.0, f: -300.0 });
        let r = tridiag_row_coeffs(1e-300, 2.0, 1.0, 0.5, 300.0);
        assert!(r.a < 1e-299 && r.c < 1e-299);
        assert_relative_eq!(r.b, 4.0);
    }

    #[test]
    fn start_x_example() {
        let (a, b) = sweep_start_x(1.0, 1.0, &no_exchange(), 1.0, 1.0, 300.0);
        assert_relative_eq!(a, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(b, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn start_x_radiation_vanishes_at_ambient() {
        let mut bc = no_exchange();
        bc.eps1 = 0.8;
        bc.t1 = 900.0;
        let (_, with_rad) = sweep_start_x(2.0, 3.0, &bc, 0.1, 1.0, 900.0);
        bc.eps1 = 0.0;
        let (_, without) = sweep_start_x(2.0, 3.0, &bc, 0.1, 1.0, 900.0);
        assert_eq!(with_rad, without);
    }

    #[test]
    fn start_y_example() {
        let (a, b) = sweep_start_y(1.0, 1.0, &no_exchange(), 1.0, 1.0, 300.0);
        assert_relative_eq!(a, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(b, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn forward_sweep_example() {
        let line = [300.0; 5];
        let s = forward_sweep(&line, (2.0 / 3.0, 100.0), 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(s.alpha[1], 3.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(s.beta[1], 1200.0 / 7.0, epsilon = 1e-12);
        assert_eq!(s.alpha.len(), 4);
        assert_eq!(s.dominance_violation(), None);

        let s = forward_sweep(&line, (0.0, 0.0), 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(s.alpha[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn forward_sweep_rejects_short_line() {
        assert!(forward_sweep(&[1.0, 2.0], (0.5, 0.0), 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn closing_x_examples() {
        let bc = no_exchange();
        let t = closing_temperature_x(300.0, 0.0, 300.0, 1.0, 1.0, &bc, 1.0, 1.0).unwrap();
        assert_relative_eq!(t, 300.0, epsilon = 1e-12);
        let t = closing_temperature_x(300.0, 0.5, 400.0, 1.0, 1.0, &bc, 1.0, 1.0).unwrap();
        assert_relative_eq!(t, 550.0, epsilon = 1e-12);

        let mut prev = f64::INFINITY;
        for q2 in [0.0, 10.0, 100.0, 1000.0] {
            let bc = BoundaryConditions { q2, ..bc };
            let t = closing_temperature_x(300.0, 0.5, 400.0, 1.0, 1.0, &bc, 1.0, 1.0).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn closing_y_examples() {
        let bc = BoundaryConditions {
            t2: 1200.0,
            kappa2: 40.0,
            eps2: 0.7,
            ..no_exchange()
        };
        let t = closing_temperature_y(1200.0, 0.0, 1200.0, 30.0, 4e6, &bc, 0.01, 10.0).unwrap();
        assert_relative_eq!(t, 1200.0, epsilon = 1e-9);

        let t = closing_temperature_y(300.0, 0.0, 300.0, 1.0, 1.0, &no_exchange(), 1.0, 1.0).unwrap();
        assert_relative_eq!(t, 300.0, epsilon = 1e-12);

        // hotter ambient never cools the surface
        let at = |t2: f64| {
            let bc = BoundaryConditions { t2, ..bc };
            closing_temperature_y(900.0, 0.3, 880.0, 30.0, 4e6, &bc, 0.01, 10.0).unwrap()
        };
        let d = (at(1200.0 + 1e-3) - at(1200.0 - 1e-3)) / 2e-3;
        assert!(d > 0.0);
    }

    #[test]
    fn unstable_closure_reported() {
        // alpha > 1 with no exchange drives the denominator negative
        let err = closing_temperature_x(300.0, 5.0, 300.0, 1.0, 1.0, &no_exchange(), 0.1, 1.0).unwrap_err();
        assert!(matches!(err, Error::UnstableClosure { axis: "x", .. }));
    }

    #[test]
    fn back_substitution_examples() {
        let s = SweepCoefficients { alpha: vec![0.0; 3], beta: vec![1.0, 2.0, 3.0] };
        assert_eq!(back_substitute(&s, 9.0), vec![1.0, 2.0, 3.0, 9.0]);

        let s = SweepCoefficients { alpha: vec![0.5; 3], beta: vec![100.0; 3] };
        assert_eq!(back_substitute(&s, 400.0), vec![225.0, 250.0, 300.0, 400.0]);
    }

    proptest! {
        #[test]
        fn reconstructed_line_solves_interior_rows(
            phi in 0.1f64..100.0,
            omega in 0.1f64..1e7,
            h in 1e-3f64..1.0,
            tau in 1e-2f64..1e3,
            temps in proptest::collection::vec(300.0f64..1600.0, 3..40),
            closing in 300.0f64..1600.0,
            start_a in 0.0f64..0.999,
            start_b in 0.0f64..1600.0,
        ) {
            let sweep = forward_sweep(&temps, (start_a, start_b), phi, omega, h, tau).unwrap();
            prop_assert_eq!(sweep.dominance_violation().filter(|&i| i > 0), None);
            let line = back_substitute(&sweep, closing);
            for l in 1..temps.len() - 1 {
                let r = tridiag_row_coeffs(phi, omega, h, tau, temps[l]);
                let lhs = r.a * line[l + 1] - r.b * line[l] + r.c * line[l - 1];
                let scale = r.b * line[l].abs() + r.f.abs();
                prop_assert!((lhs - r.f).abs() <= 1e-9 * scale, "row {}: {} vs {}", l, lhs, r.f);
            }
        }

        #[test]
        fn start_alphas_in_unit_interval(
            phi in 1e-3f64..1e3, omega in 1e-3f64..1e7, h in 1e-4f64..1.0, tau in 1e-3f64..1e4,
            kappa in 0.0f64..1e3, t in 300.0f64..1600.0,
        ) {
            let bc = BoundaryConditions { kappa1: kappa, ..no_exchange() };
            let (ax, _) = sweep_start_x(phi, omega, &bc, h, tau, t);
            let (ay, _) = sweep_start_y(phi, omega, &bc, h, tau, t);
            prop_assert!(ax > 0.0 && ax < 1.0);
            prop_assert!(ay > 0.0 && ay < 1.0);
            let r = tridiag_row_coeffs(phi, omega, h, tau, t);
            prop_assert!((r.b - r.a - r.c - omega / tau).abs() <= 1e-12 * r.b);
        }
    }
}
