//! Trainable 2D transient heat-conduction model of a billet in a reheating
//! furnace.
//!
//! The forward model advances the temperature field with split-step implicit
//! line sweeps. Its per-step conductivity and capacity coefficients can come
//! either from material property tables or from a trainable trajectory that
//! is fitted to pyrometer readings by gradient descent.

pub mod benchmark;
pub mod datagen;
pub mod error;
pub mod gradients;
pub mod grid;
pub mod io;
pub mod materials;
pub mod solver;
pub mod trainer;

pub use error::{Error, Result};
