//! Differentiable motion trajectories: vector strokes whose Bézier control
//! points move along polynomial paths in time.

pub mod benchmark;
pub mod bernstein;
pub mod cli;
pub mod error;
pub mod export;
pub mod fitting;
pub mod init;
pub mod maps;
pub mod optimize;
pub mod synthetic;
pub mod tracking;
pub mod trajectory;

pub use error::{Error, Result};

/// 2D point or vector in pixels.
pub type Point = nalgebra::Vector2<f64>;
