use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::trajectory::run_with;
use super::{EvolutionConfig, FreeEvolver};
use crate::exec::{map_indexed, Execution};
use crate::state::{DensityMatrix, WaveFunction, MAX_DENSITY_DIM};
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// Bytes allowed for the per-batch accumulators.
const BATCH_MEMORY: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FlashStatistics {
    /// Number of flashes in each trajectory.
    pub counts: Vec<usize>,
    /// Total flashes per particle.
    pub per_particle: Vec<usize>,
}

impl FlashStatistics {
    pub fn mean_count(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len().max(1) as f64
    }
}

/// Ensemble estimate of the density matrix at the final time.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub rho: DensityMatrix,
    /// Entrywise standard error of `rho` (modulus of the complex error).
    pub standard_error: DMatrix<f64>,
    /// Standard-error scale of the trace distance between `rho` and its
    /// expectation, from batch means.
    pub trace_distance_error: f64,
    pub n_traj: usize,
    pub batches: usize,
    pub flash_stats: FlashStatistics,
    /// Final mean position of every particle, per trajectory
    /// (`[k * dim + axis]`).
    pub mean_positions: Vec<Vec<f64>>,
}

struct Batch {
    sum: DMatrix<Complex64>,
    count: usize,
    flash_counts: Vec<usize>,
    per_particle: Vec<usize>,
    positions: Vec<Vec<f64>>,
}

/// Number of batches used for `n_traj` trajectories on a `d`-dimensional
/// state space. Fixed by the inputs so results never depend on the thread
/// count.
pub(crate) fn batch_count(n_traj: usize, d: usize) -> usize {
    let target = if d > 512 { 8 } else { 16 };
    let per = (d * d * std::mem::size_of::<Complex64>()).max(1);
    let fit = (BATCH_MEMORY / per).max(2);
    target.min(fit).min(n_traj).max(1)
}

/// Averages the final projectors of `n_traj` trajectories.
///
/// Trajectory `i` uses stream `i` of `master_seed`. Trajectories are grouped
/// into a fixed number of contiguous batches; batch sums are combined in
/// index order, so the estimate is identical for any worker count.
pub fn run_ensemble(
    psi0: &WaveFunction,
    params: &PhysicalParams,
    config: &EvolutionConfig,
    n_traj: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::InvalidInput("need at least one trajectory".into()));
    }
    let d = psi0.len();
    if d > MAX_DENSITY_DIM {
        return Err(Error::StateTooLarge {
            size: d,
            cap: MAX_DENSITY_DIM,
        });
    }
    let evolver = FreeEvolver::new(psi0.grids(), params, config)?;
    let n_batches = batch_count(n_traj, d);
    let bounds = |b: usize| (b * n_traj / n_batches, (b + 1) * n_traj / n_batches);

    let batches: Vec<Result<Batch>> = map_indexed(exec, n_batches, |b| {
        let (lo, hi) = bounds(b);
        let mut batch = Batch {
            sum: DMatrix::zeros(d, d),
            count: hi - lo,
            flash_counts: Vec::with_capacity(hi - lo),
            per_particle: vec![0; psi0.n_particles()],
            positions: Vec::with_capacity(hi - lo),
        };
        let one = Complex64::new(1.0, 0.0);
        for i in lo..hi {
            let tr = run_with(psi0, params, config, &evolver, master_seed, i as u64)?;
            let c = DVector::from_vec(tr.final_state.basis_coefficients());
            batch.sum.gerc(one, &c, &c, one);
            batch.flash_counts.push(tr.flashes.len());
            for f in &tr.flashes {
                batch.per_particle[f.particle] += 1;
            }
            let mut pos = Vec::new();
            for k in 0..psi0.n_particles() {
                pos.extend(tr.final_state.expectation_position(k)?);
            }
            batch.positions.push(pos);
        }
        Ok(batch)
    });
    let batches = batches.into_iter().collect::<Result<Vec<_>>>()?;

    let mut total = DMatrix::<Complex64>::zeros(d, d);
    let mut counts = Vec::with_capacity(n_traj);
    let mut per_particle = vec![0; psi0.n_particles()];
    let mut positions = Vec::with_capacity(n_traj);
    for b in &batches {
        total += &b.sum;
        counts.extend_from_slice(&b.flash_counts);
        for (t, p) in per_particle.iter_mut().zip(&b.per_particle) {
            *t += p;
        }
        positions.extend(b.positions.iter().cloned());
    }
    let mean = total / Complex64::new(n_traj as f64, 0.0);
    let rho = DensityMatrix::from_entries(psi0.grids().to_vec(), mean)?;

    let nb = batches.len();
    let (standard_error, trace_distance_error) = if nb < 2 {
        (DMatrix::from_element(d, d, f64::NAN), f64::NAN)
    } else {
        let mut var = DMatrix::<f64>::zeros(d, d);
        let mut td = 0.0;
        for b in &batches {
            let bm = &b.sum / Complex64::new(b.count as f64, 0.0);
            let diff = &bm - rho.entries();
            let w = b.count as f64;
            var.zip_apply(&diff, |v, x| *v += w * x.norm_sqr());
            td += rho.trace_distance(&DensityMatrix::from_entries(psi0.grids().to_vec(), bm)?)?;
        }
        // Batch-means variance of the overall mean.
        let scale = 1.0 / ((nb - 1) as f64 * n_traj as f64);
        let se = var.map(|v| (v * scale).sqrt());
        (se, td / nb as f64 / ((nb - 1) as f64).sqrt())
    };

    Ok(EnsembleResult {
        rho,
        standard_error,
        trace_distance_error,
        n_traj,
        batches: nb,
        flash_stats: FlashStatistics {
            counts,
            per_particle,
        },
        mean_positions: positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_trajectory, FreeHamiltonian};
    use crate::state::{GaussianPacket, GridSpec};

    fn setup() -> (WaveFunction, PhysicalParams, EvolutionConfig) {
        let g = GridSpec::centered(1, 32, 0.3, 0.0).unwrap();
        let psi = WaveFunction::gaussian_packets(vec![g], &[GaussianPacket::at_rest(vec![0.0], 1.2)]).unwrap();
        let params = PhysicalParams::dimensionless(1.0, 0.3, 1.0, 1);
        let cfg = EvolutionConfig::new(1.0, FreeHamiltonian::Kinetic, 0.1).unwrap();
        (psi, params, cfg)
    }

    #[test]
    fn single_trajectory_gives_its_projector() {
        let (psi, params, cfg) = setup();
        let e = run_ensemble(&psi, &params, &cfg, 1, 5, Execution::Sequential).unwrap();
        let tr = run_trajectory(&psi, &params, &cfg, 5, 0).unwrap();
        let p = DensityMatrix::pure(&tr.final_state).unwrap();
        assert!((e.rho.entries() - p.entries()).norm() < 1e-14);
        assert!((e.rho.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let (psi, params, cfg) = setup();
        let a = run_ensemble(&psi, &params, &cfg, 40, 9, Execution::Sequential).unwrap();
        let b = run_ensemble(&psi, &params, &cfg, 40, 9, Execution::Parallel).unwrap();
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.standard_error, b.standard_error);
        assert_eq!(a.flash_stats, b.flash_stats);
        assert_eq!(a.batches, 16);
    }

    #[test]
    fn ensemble_is_a_valid_state() {
        let (psi, params, cfg) = setup();
        let e = run_ensemble(&psi, &params, &cfg, 64, 1, Execution::Parallel).unwrap();
        e.rho.check_invariants().unwrap();
        assert!(e.rho.purity() < 1.0);
        assert_eq!(e.flash_stats.counts.len(), 64);
        assert_eq!(e.mean_positions.len(), 64);
        assert!(e.trace_distance_error > 0.0);
    }

    #[test]
    fn batch_count_respects_memory() {
        assert_eq!(batch_count(4096, 64), 16);
        assert_eq!(batch_count(4096, 1024), 8);
        assert_eq!(batch_count(4096, 4096), 2);
        assert_eq!(batch_count(3, 64), 3);
    }
}
