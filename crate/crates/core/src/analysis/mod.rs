//! Analytic signatures of the model: the decoherence kernel, its
//! short-distance behaviour, the smeared Newtonian limit and the
//! falsifiability scan over `lambda`.

mod force;
mod kernel;
mod potential;
mod probe;
mod scan;
mod slope;

pub use force::classical_limit_force;
pub use kernel::{
    gamma_at_separation, gamma_kernel, KernelCache, KernelModel, KernelResult, KernelValue, QuadratureSpec,
};
pub use potential::{effective_potential_check, PotentialRow};
pub use probe::{self_attraction_probe, DriftEstimate};
pub use scan::{falsifiability_scan, ScanResult};
pub use slope::{check_regime, excess_rate, inverse_lambda_check, short_distance_rate, SlopeFit, REGIME_RATIO};
