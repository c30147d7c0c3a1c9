//! Partial derivatives of the two state equations (the closing-node
//! updates) with respect to the previous node value, the step coefficients
//! and the neighbouring sweep coefficients.
//!
//! All forms are derived directly from the closure expressions in
//! `solver::sweep` and cross-checked against central differences in the
//! tests and in `gradcheck`.

use crate::solver::{closing_temperature, sweep_start, Axis, BoundaryConditions, ClosureState};

/// Value of the state equation, NaN when the closure is unstable.
fn state(axis: Axis, s: &ClosureState) -> f64 {
    closing_temperature(axis, s).unwrap_or(f64::NAN)
}

/// Denominator of the closure, written in the form shared by the partials.
fn denominator(axis: Axis, s: &ClosureState) -> f64 {
    match axis {
        // x closure divided through by phi
        Axis::X => s.h * s.h + 2.0 * s.phi * s.tau * (1.0 - s.alpha) / s.omega,
        Axis::Y => {
            2.0 * s.tau * s.phi * (1.0 - s.alpha)
                + 2.0 * s.tau * s.bc.kappa2 * s.h
                + s.omega * s.h * s.h
        }
    }
}

/// d(state)/d(previous node temperature).
pub fn dstate_dt(axis: Axis, s: &ClosureState) -> f64 {
    let den = denominator(axis, s);
    match axis {
        Axis::X => s.h * s.h / den,
        Axis::Y => {
            let rad = 8.0 * s.bc.eps2 * s.bc.sigma() * s.tau * s.t_prev.powi(3);
            s.h * (s.h * s.omega - rad) / den
        }
    }
}

/// d(state)/d(phi) at fixed sweep coefficients.
pub fn dstate_dphi(axis: Axis, s: &ClosureState) -> f64 {
    let g = state(axis, s);
    let den = denominator(axis, s);
    let lever = s.beta - (1.0 - s.alpha) * g;
    match axis {
        Axis::X => 2.0 * s.tau / s.omega * lever / den,
        Axis::Y => 2.0 * s.tau * lever / den,
    }
}

/// d(state)/d(omega) at fixed sweep coefficients.
pub fn dstate_domega(axis: Axis, s: &ClosureState) -> f64 {
    let g = state(axis, s);
    let den = denominator(axis, s);
    match axis {
        Axis::X => {
            let p = 2.0 * s.phi * s.tau / s.omega;
            let lever = s.beta - s.h * s.bc.q2 / s.phi - (1.0 - s.alpha) * g;
            -p / s.omega * lever / den
        }
        Axis::Y => s.h * s.h * (s.t_prev - g) / den,
    }
}

/// d(state)/d(alpha of the neighbouring node).
pub fn dstate_dalpha(axis: Axis, s: &ClosureState) -> f64 {
    let g = state(axis, s);
    let den = denominator(axis, s);
    match axis {
        Axis::X => 2.0 * s.phi * s.tau / s.omega * g / den,
        Axis::Y => 2.0 * s.tau * s.phi * g / den,
    }
}

/// d(state)/d(beta of the neighbouring node).
pub fn dstate_dbeta(axis: Axis, s: &ClosureState) -> f64 {
    let den = denominator(axis, s);
    match axis {
        Axis::X => 2.0 * s.phi * s.tau / s.omega / den,
        Axis::Y => 2.0 * s.phi * s.tau / den,
    }
}

/// Per-step multiplicative factor of the scalar error chain.
///
/// On Ox this coincides with [`dstate_dt`]. On Oy the radiative part enters
/// as `-4 sqrt(2 tau eps2 sigma h / X)` with `X` the closure denominator;
/// with `eps2 = 0` it reduces to `omega h^2 / X`.
pub fn delta_coefficient(axis: Axis, s: &ClosureState) -> f64 {
    match axis {
        Axis::X => {
            let h2 = s.h * s.h;
            h2 * s.phi / (s.phi * h2 + 2.0 * (s.phi / s.omega) * s.tau * s.phi * (1.0 - s.alpha))
        }
        Axis::Y => {
            let x = denominator(Axis::Y, s);
            s.omega * s.h * s.h / x - 4.0 * (2.0 * s.tau * s.bc.eps2 * s.bc.sigma() * s.h / x).sqrt()
        }
    }
}

/// Derivatives of the sweep start coefficients `(alpha_0, beta_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPartials {
    pub dalpha_dphi: f64,
    pub dalpha_domega: f64,
    pub dbeta_dphi: f64,
    pub dbeta_domega: f64,
    /// d(beta_0)/d(previous surface temperature); alpha_0 does not depend on it.
    pub dbeta_dt: f64,
}

pub fn start_partials(
    axis: Axis,
    phi: f64,
    omega: f64,
    bc: &BoundaryConditions,
    h: f64,
    tau: f64,
    t_surface_prev: f64,
) -> StartPartials {
    let (alpha, beta) = sweep_start(axis, phi, omega, bc, h, tau, t_surface_prev);
    match axis {
        Axis::X => {
            let den = omega * h * h + 2.0 * tau * (phi + bc.kappa1 * h);
            let rad = 8.0 * tau * bc.eps1 * bc.sigma() * h * t_surface_prev.powi(3);
            StartPartials {
                dalpha_dphi: 2.0 * tau * (1.0 - alpha) / den,
                dalpha_domega: -alpha * h * h / den,
                dbeta_dphi: -2.0 * tau * beta / den,
                dbeta_domega: h * h * (t_surface_prev - beta) / den,
                dbeta_dt: (omega * h * h - rad) / den,
            }
        }
        Axis::Y => {
            let den = h * h + 2.0 * tau * phi / omega;
            let dalpha_da = 2.0 * tau * h * h / (den * den);
            let dbeta_da = -2.0 * tau * beta / den;
            StartPartials {
                dalpha_dphi: dalpha_da / omega,
                dalpha_domega: -dalpha_da * phi / (omega * omega),
                dbeta_dphi: dbeta_da / omega,
                dbeta_domega: -dbeta_da * phi / (omega * omega)
                    - 2.0 * tau * h * bc.q1 / (omega * omega * den),
                dbeta_dt: h * h / den,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(axis_bc: BoundaryConditions) -> ClosureState {
        ClosureState {
            t_prev: 300.0,
            alpha: 0.0,
            beta: 300.0,
            phi: 1.0,
            omega: 1.0,
            h: 1.0,
            tau: 1.0,
            bc: axis_bc,
        }
    }

    fn furnace_point() -> ClosureState {
        ClosureState {
            t_prev: 910.0,
            alpha: 0.62,
            beta: 340.0,
            phi: 31.0,
            omega: 4.4e6,
            h: 0.01,
            tau: 40.0,
            bc: BoundaryConditions {
                t1: 1350.0,
                t2: 1420.0,
                kappa1: 60.0,
                kappa2: 45.0,
                eps1: 0.7,
                eps2: 0.75,
                q1: 150.0,
                q2: -800.0,
            },
        }
    }

    /// Central difference of the state equation along one input.
    fn fd(axis: Axis, s: &ClosureState, set: impl Fn(&mut ClosureState, f64), x0: f64) -> f64 {
        let h = 1e-6 * x0.abs().max(1e-3);
        let mut p = *s;
        set(&mut p, x0 + h);
        let up = closing_temperature(axis, &p).unwrap();
        set(&mut p, x0 - h);
        let dn = closing_temperature(axis, &p).unwrap();
        (up - dn) / (2.0 * h)
    }

    #[test]
    fn dt_examples() {
        let s = unit(BoundaryConditions::insulated(300.0));
        assert_relative_eq!(dstate_dt(Axis::X, &s), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(dstate_dt(Axis::Y, &s), 1.0 / 3.0, epsilon = 1e-15);
        let d = dstate_dt(Axis::X, &furnace_point());
        assert!(d > 0.0 && d < 1.0);
    }

    #[test]
    fn delta_examples() {
        let s = unit(BoundaryConditions::insulated(300.0));
        assert_relative_eq!(delta_coefficient(Axis::X, &s), 1.0 / 3.0, epsilon = 1e-15);
        let mut p = furnace_point();
        let dx = delta_coefficient(Axis::X, &p);
        assert!(dx > 0.0 && dx < 1.0);
        assert_eq!(dx, dstate_dt(Axis::X, &p));
        p.bc.eps2 = 0.0;
        let x = denominator(Axis::Y, &p);
        assert_relative_eq!(delta_coefficient(Axis::Y, &p), p.omega * p.h * p.h / x, epsilon = 1e-15);
    }

    #[test]
    fn all_partials_match_central_differences() {
        let s = furnace_point();
        for axis in [Axis::X, Axis::Y] {
            let checks: [(&str, f64, f64); 5] = [
                ("t", dstate_dt(axis, &s), fd(axis, &s, |p, v| p.t_prev = v, s.t_prev)),
                ("phi", dstate_dphi(axis, &s), fd(axis, &s, |p, v| p.phi = v, s.phi)),
                ("omega", dstate_domega(axis, &s), fd(axis, &s, |p, v| p.omega = v, s.omega)),
                ("alpha", dstate_dalpha(axis, &s), fd(axis, &s, |p, v| p.alpha = v, s.alpha)),
                ("beta", dstate_dbeta(axis, &s), fd(axis, &s, |p, v| p.beta = v, s.beta)),
            ];
            for (name, analytic, numeric) in checks {
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
                assert!(rel < 1e-6, "{axis:?} d/d{name}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn equilibrium_is_insensitive_to_coefficients() {
        let mut s = furnace_point();
        s.t_prev = s.bc.t2;
        s.beta = s.bc.t2;
        s.alpha = 0.0;
        s.bc.q2 = 0.0;
        assert!(dstate_dphi(Axis::Y, &s).abs() < 1e-9);
        assert!(dstate_domega(Axis::Y, &s).abs() < 1e-9);
        assert!(dstate_dphi(Axis::X, &s).abs() < 1e-9);
        assert!(dstate_domega(Axis::X, &s).abs() < 1e-9);
    }

    #[test]
    fn beta_term_of_phi_derivative_is_linear() {
        // d/dphi = 2 tau (beta - (1 - alpha) g) / X on Oy: subtracting the
        // g-dependent part leaves a term proportional to beta.
        let s = furnace_point();
        let beta_term = |beta: f64| {
            let p = ClosureState { beta, ..s };
            let g = closing_temperature(Axis::Y, &p).unwrap();
            dstate_dphi(Axis::Y, &p) + 2.0 * p.tau * (1.0 - p.alpha) * g / denominator(Axis::Y, &p)
        };
        assert_relative_eq!(beta_term(2.0 * s.beta), 2.0 * beta_term(s.beta), max_relative = 1e-12);
    }

    #[test]
    fn heavy_capacity_pins_the_state() {
        let mut s = furnace_point();
        s.omega = 1e9;
        for axis in [Axis::X, Axis::Y] {
            let base = dstate_domega(axis, &furnace_point()).abs();
            assert!(dstate_domega(axis, &s).abs() < 1e-3 * base, "{axis:?}");
        }
    }

    #[test]
    fn start_partials_match_central_differences() {
        let s = furnace_point();
        let t = 870.0;
        for axis in [Axis::X, Axis::Y] {
            let p = start_partials(axis, s.phi, s.omega, &s.bc, s.h, s.tau, t);
            let start = |phi: f64, omega: f64, t: f64| sweep_start(axis, phi, omega, &s.bc, s.h, s.tau, t);
            let d = |f: &dyn Fn(f64) -> (f64, f64), x: f64| {
                let h = 1e-6 * x;
                let (up, dn) = (f(x + h), f(x - h));
                ((up.0 - dn.0) / (2.0 * h), (up.1 - dn.1) / (2.0 * h))
            };
            let (da, db) = d(&|v| start(v, s.omega, t), s.phi);
            let (wa, wb) = d(&|v| start(s.phi, v, t), s.omega);
            let (ta, tb) = d(&|v| start(s.phi, s.omega, v), t);
            assert_eq!(ta, 0.0);
            for (name, analytic, numeric) in [
                ("alpha/phi", p.dalpha_dphi, da),
                ("alpha/omega", p.dalpha_domega, wa),
                ("beta/phi", p.dbeta_dphi, db),
                ("beta/omega", p.dbeta_domega, wb),
                ("beta/t", p.dbeta_dt, tb),
            ] {
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
                assert!(rel < 1e-6, "{axis:?} d{name}: {analytic} vs {numeric}");
            }
        }
    }
}
