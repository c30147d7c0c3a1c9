//! Uniform space and time discretizations.
//!
//! Nodes along Ox are indexed `k = 0..=nx` and along Oy `q = 0..=ny`, so a
//! grid with `nx` steps has `nx + 1` nodes per row. Indices `0` and `nx`
//! (resp. `ny`) are boundary nodes, everything in between is interior.

use crate::error::{Error, Result};

/// Uniform rectangular mesh over `[0, x_max] x [0, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
    pub x_max: f64,
    pub y_max: f64,
}

/// Uniform time axis `t_n = n * tau`, `n = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub n_steps: usize,
    pub t_max: f64,
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

impl SpatialGrid {
    pub fn new(x_max: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        positive("x_max", x_max)?;
        positive("y_max", y_max)?;
        if nx < 3 {
            return Err(Error::invalid("nx", format!("need at least 3 cells, got {nx}")));
        }
        if ny < 3 {
            return Err(Error::invalid("ny", format!("need at least 3 cells, got {ny}")));
        }
        Ok(Self {
            hx: x_max / nx as f64,
            hy: y_max / ny as f64,
            nx,
            ny,
            x_max,
            y_max,
        })
    }

    /// Number of nodes in one row (along Ox).
    pub fn row_len(&self) -> usize {
        self.nx + 1
    }

    /// Number of nodes in one column (along Oy).
    pub fn col_len(&self) -> usize {
        self.ny + 1
    }

    pub fn node_count(&self) -> usize {
        self.row_len() * self.col_len()
    }

    pub fn x(&self, k: usize) -> f64 {
        if k == self.nx {
            self.x_max
        } else {
            k as f64 * self.hx
        }
    }

    pub fn y(&self, q: usize) -> f64 {
        if q == self.ny {
            self.y_max
        } else {
            q as f64 * self.hy
        }
    }
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        positive("t_max", t_max)?;
        if n_steps < 1 {
            return Err(Error::invalid("n_steps", "need at least one step"));
        }
        Ok(Self {
            tau: t_max / n_steps as f64,
            n_steps,
            t_max,
        })
    }

    /// Grid with a given step, `t_max = tau * n_steps`.
    pub fn from_step(tau: f64, n_steps: usize) -> Result<Self> {
        positive("tau", tau)?;
        Self::new(tau * n_steps as f64, n_steps)
    }
}

pub fn build_grids(
    x_max: f64,
    y_max: f64,
    t_max: f64,
    nx: usize,
    ny: usize,
    n_steps: usize,
) -> Result<(SpatialGrid, TimeGrid)> {
    Ok((
        SpatialGrid::new(x_max, y_max, nx, ny)?,
        TimeGrid::new(t_max, n_steps)?,
    ))
}
