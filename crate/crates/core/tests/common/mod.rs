//! Explicit finite-volume reference solver used as an oracle for the
//! implicit split-step scheme.
//!
//! Nodes carry full, half or quarter control volumes; boundary faces
//! exchange heat with the ambient (convection plus radiation at the current
//! temperature) or carry the prescribed fluxes: `q1` enters through
//! `y = 0`, `q2` leaves through `x = x_max`.

#![allow(dead_code)]

use heat_adapt::grid::SpatialGrid;
use heat_adapt::solver::{BoundaryConditions, STEFAN_BOLTZMANN};

/// Forward-Euler integration of the field over `duration` seconds with
/// `steps` equal steps and constant `phi`, `omega`.
pub fn explicit_field(
    grid: &SpatialGrid,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    t0: f64,
    duration: f64,
    steps: usize,
) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx, grid.hy);
    let w = nx + 1;
    let dt = duration / steps as f64;
    let mut t = vec![t0; w * (ny + 1)];
    let mut rate = vec![0.0; t.len()];
    let rad = |amb: f64, eps: f64, v: f64| eps * STEFAN_BOLTZMANN * (amb.powi(4) - v.powi(4));
    for _ in 0..steps {
        for q in 0..=ny {
            for k in 0..=nx {
                let v = t[q * w + k];
                let dx = if k == 0 {
                    let inflow = bc.kappa1 * (bc.t1 - v) + rad(bc.t1, bc.eps1, v);
                    2.0 / hx * (phi * (t[q * w + 1] - v) / hx + inflow)
                } else if k == nx {
                    2.0 / hx * (phi * (t[q * w + k - 1] - v) / hx - bc.q2)
                } else {
                    phi * (t[q * w + k + 1] - 2.0 * v + t[q * w + k - 1]) / (hx * hx)
                };
                let dy = if q == 0 {
                    2.0 / hy * (phi * (t[w + k] - v) / hy + bc.q1)
                } else if q == ny {
                    let inflow = bc.kappa2 * (bc.t2 - v) + rad(bc.t2, bc.eps2, v);
                    2.0 / hy * (phi * (t[(q - 1) * w + k] - v) / hy + inflow)
                } else {
                    phi * (t[(q + 1) * w + k] - 2.0 * v + t[(q - 1) * w + k]) / (hy * hy)
                };
                rate[q * w + k] = (dx + dy) / omega;
            }
        }
        for (v, r) in t.iter_mut().zip(&rate) {
            *v += dt * r;
        }
    }
    t
}

/// Explicit solution refined by halving the step until two successive
/// refinements agree to `tol` K at every node.
pub fn converged_explicit_field(
    grid: &SpatialGrid,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    t0: f64,
    duration: f64,
    initial_steps: usize,
    tol: f64,
) -> Vec<f64> {
    let mut steps = initial_steps;
    let mut coarse = explicit_field(grid, phi, omega, bc, t0, duration, steps);
    loop {
        steps *= 2;
        let fine = explicit_field(grid, phi, omega, bc, t0, duration, steps);
        let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff < tol || steps > 1 << 24 {
            return fine;
        }
        coarse = fine;
    }
}
