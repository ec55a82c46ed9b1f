//! Discretised wavefunctions and density matrices.

mod density;
mod grid;
pub mod io;
mod wave;

pub use density::{DensityMatrix, MAX_DENSITY_DIM};
pub use grid::GridSpec;
pub use wave::{GaussianPacket, WaveFunction, BOUNDARY_MASS_WARNING};
