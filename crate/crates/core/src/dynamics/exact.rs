//! Closed-form evolution of a single particle without free Hamiltonian:
//! every entry decays independently, `rho_t(x, y) = exp(lambda t (Gamma(x, y) - 1)) rho_0(x, y)`.

use num_complex::Complex64;

use crate::analysis::KernelResult;
use crate::state::DensityMatrix;
use crate::{Error, Result};

/// Exact solution of the diagonal master equation at time `t`.
///
/// `kernel` must hold every separation between grid nodes; a missing one is
/// reported as [`Error::MissingKernel`].
pub fn exact_diagonal_solution(
    rho0: &DensityMatrix,
    kernel: &KernelResult,
    lambda: f64,
    t: f64,
) -> Result<DensityMatrix> {
    if rho0.n_particles() != 1 {
        return Err(Error::InvalidInput(format!(
            "the exact solution covers one particle, got {}",
            rho0.n_particles()
        )));
    }
    if !(lambda >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda and t must be nonnegative, got {lambda} and {t}"
        )));
    }
    let grid = rho0.grid();
    let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|p| grid.node(p)).collect();
    let d = rho0.dim();
    let mut out = rho0.entries().clone();
    for j in 0..d {
        for i in 0..d {
            if i == j {
                continue;
            }
            let s = nodes[i]
                .iter()
                .zip(&nodes[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let (gamma, _) = kernel.lookup(s).ok_or(Error::MissingKernel(s))?;
            out[(i, j)] *= ((gamma - Complex64::new(1.0, 0.0)) * (lambda * t)).exp();
        }
    }
    rho0.with_entries(out)
}
