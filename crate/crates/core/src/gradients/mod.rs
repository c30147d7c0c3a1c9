//! Analytic derivatives of the closing-node state equations and
//! backpropagation of the terminal probe error onto the per-step
//! coefficients.

mod backprop;
mod check;
mod partials;
mod tape;

pub use backprop::{backprop, backprop_delta_chain, backprop_with, chain_errors, GradientMode, GradientSet};
pub use check::{finite_difference_check, richardson_derivative, CheckReport, CheckTarget, CHECK_SCALE};
pub use partials::{
    delta_coefficient, dstate_dalpha, dstate_dbeta, dstate_domega, dstate_dphi, dstate_dt,
    start_partials, StartPartials,
};
pub use tape::{StateTape, TapeStep};
