//! Does a superposition attract itself? Drift of the mean position of a
//! symmetric cat state.

use crate::dynamics::EnsembleResult;
use crate::state::WaveFunction;
use crate::{Error, Result};

/// Relative mismatch allowed between the density and its mirror image.
const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    /// Final minus initial mean position, per axis.
    pub drift: Vec<f64>,
    /// Standard error of the drift, per axis.
    pub sigma: Vec<f64>,
    pub n_traj: usize,
}

impl DriftEstimate {
    /// Whether `|drift| < k sigma` on every axis.
    pub fn within(&self, k: f64) -> bool {
        self.drift.iter().zip(&self.sigma).all(|(d, s)| d.abs() < k * s)
    }

    /// Confidence interval `drift +- k sigma` per axis.
    pub fn interval(&self, k: f64) -> Vec<(f64, f64)> {
        self.drift
            .iter()
            .zip(&self.sigma)
            .map(|(d, s)| (d - k * s, d + k * s))
            .collect()
    }
}

/// Estimates the drift of `<x>` over the ensemble run that started from
/// `psi0`, a single-particle state symmetric under reflection through the
/// grid centre.
pub fn self_attraction_probe(ensemble: &EnsembleResult, psi0: &WaveFunction) -> Result<DriftEstimate> {
    if psi0.n_particles() != 1 {
        return Err(Error::InvalidInput("the probe needs a single particle".into()));
    }
    let grid = psi0.grid();
    let rho = psi0.position_density(0)?;
    let peak = rho.iter().fold(0.0f64, |a, &b| a.max(b));
    let n = grid.n_points;
    let mut idx = [0usize; 3];
    for (p, &w) in rho.iter().enumerate() {
        grid.unflatten(p, &mut idx[..grid.dim]);
        let mirror = idx[..grid.dim]
            .iter()
            .fold(0usize, |acc, &i| acc * n + (n - 1 - i));
        if (w - rho[mirror]).abs() > SYMMETRY_TOLERANCE * peak {
            return Err(Error::InvalidInput(
                "initial state is not mirror symmetric; the probe is undefined".into(),
            ));
        }
    }
    let start = psi0.expectation_position(0)?;
    let m = ensemble.mean_positions.len();
    if m < 2 {
        return Err(Error::InvalidInput("need at least two trajectories".into()));
    }
    let dim = grid.dim;
    let mut drift = vec![0.0; dim];
    let mut sigma = vec![0.0; dim];
    for a in 0..dim {
        let xs: Vec<f64> = ensemble.mean_positions.iter().map(|p| p[a]).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
        drift[a] = mean - start[a];
        sigma[a] = (var / m as f64).sqrt();
    }
    Ok(DriftEstimate {
        drift,
        sigma,
        n_traj: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_ensemble, EvolutionConfig, FreeHamiltonian};
    use crate::exec::Execution;
    use crate::state::{GaussianPacket, GridSpec};
    use crate::units::PhysicalParams;
    use num_complex::Complex64;

    fn cat(shift: f64) -> WaveFunction {
        let g = GridSpec::centered(1, 48, 0.25, 0.0).unwrap();
        let packet = |c: f64| WaveFunction::gaussian_packets(vec![g.clone()], &[GaussianPacket::at_rest(vec![c], 0.5)]).unwrap();
        let one = Complex64::new(1.0, 0.0);
        WaveFunction::superpose(&[(one, &packet(-2.0 + shift)), (one, &packet(2.0))])
            .unwrap()
            .normalize()
            .unwrap()
    }

    #[test]
    fn symmetric_cat_does_not_drift() {
        let psi = cat(0.0);
        let params = PhysicalParams::dimensionless(1.0, 0.3, 1.0, 1);
        let cfg = EvolutionConfig::new(1.0, FreeHamiltonian::None, 0.1).unwrap();
        let ens = run_ensemble(&psi, &params, &cfg, 256, 7, Execution::Parallel).unwrap();
        let est = self_attraction_probe(&ens, &psi).unwrap();
        assert!(est.within(4.0), "{est:?}");
        assert!(est.sigma[0] > 0.0);
    }

    #[test]
    fn asymmetric_state_is_rejected() {
        let psi = cat(0.3);
        let params = PhysicalParams::dimensionless(1.0, 0.3, 1.0, 1);
        let cfg = EvolutionConfig::new(0.1, FreeHamiltonian::None, 0.1).unwrap();
        let ens = run_ensemble(&psi, &params, &cfg, 4, 7, Execution::Parallel).unwrap();
        assert!(self_attraction_probe(&ens, &psi).is_err());
    }
}
