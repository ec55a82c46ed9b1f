use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::grid::{check_grids, GridSpec};
use super::wave::WaveFunction;
use crate::{Error, Result};

/// Largest basis size for which density matrices are built.
pub const MAX_DENSITY_DIM: usize = 4096;

/// Density matrix in the orthonormal grid basis.
///
/// Entry `(X, Y)` equals `psi(X) conj(psi(Y)) dV` for a pure state, so the
/// trace is one and `rho(x, y) / dV` is the continuum kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    grids: Vec<GridSpec>,
    entries: DMatrix<Complex64>,
}

pub(crate) fn basis_size(grids: &[GridSpec]) -> usize {
    grids[0].len().pow(grids.len() as u32)
}

pub(crate) fn check_cap(size: usize) -> Result<()> {
    if size > MAX_DENSITY_DIM {
        return Err(Error::StateTooLarge {
            size,
            cap: MAX_DENSITY_DIM,
        });
    }
    Ok(())
}

impl DensityMatrix {
    pub fn from_entries(grids: Vec<GridSpec>, entries: DMatrix<Complex64>) -> Result<Self> {
        check_grids(&grids)?;
        let d = basis_size(&grids);
        check_cap(d)?;
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "expected a {d}x{d} matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(DensityMatrix { grids, entries })
    }

    /// Projector onto a (normalised) state.
    pub fn pure(psi: &WaveFunction) -> Result<Self> {
        check_cap(psi.len())?;
        let c = nalgebra::DVector::from_vec(psi.basis_coefficients());
        let entries = &c * c.adjoint();
        Ok(DensityMatrix {
            grids: psi.grids().to_vec(),
            entries,
        })
    }

    /// `I / D` on the given grids.
    pub fn maximally_mixed(grids: Vec<GridSpec>) -> Result<Self> {
        check_grids(&grids)?;
        let d = basis_size(&grids);
        check_cap(d)?;
        let entries = DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
        Ok(DensityMatrix { grids, entries })
    }

    /// Weighted mixture of projectors.
    pub fn from_ensemble(states: &[WaveFunction], weights: &[f64]) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} states with {} weights",
                states.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        let first = &states[0];
        check_cap(first.len())?;
        let d = first.len();
        let mut entries = DMatrix::<Complex64>::zeros(d, d);
        for (psi, &w) in states.iter().zip(weights) {
            first.check_same_grid(psi)?;
            let c = nalgebra::DVector::from_vec(psi.basis_coefficients());
            entries.gerc(Complex64::new(w, 0.0), &c, &c, Complex64::new(1.0, 0.0));
        }
        Ok(DensityMatrix {
            grids: first.grids().to_vec(),
            entries,
        })
    }

    pub fn grids(&self) -> &[GridSpec] {
        &self.grids
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grids[0]
    }

    pub fn n_particles(&self) -> usize {
        self.grids.len()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn with_entries(&self, entries: DMatrix<Complex64>) -> Result<Self> {
        Self::from_entries(self.grids.clone(), entries)
    }

    pub fn check_same_grid(&self, other: &DensityMatrix) -> Result<()> {
        if self.grids != other.grids {
            return Err(Error::GridMismatch("density matrices on different grids".into()));
        }
        Ok(())
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho rho) = sum_ij rho_ij rho_ji
        let d = self.dim();
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..d {
            for i in 0..d {
                s += self.entries[(i, j)] * self.entries[(j, i)];
            }
        }
        s.re
    }

    /// Largest entry of `|rho - rho^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.entries);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-8) and positivity (-1e-8).
    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidInput(format!("not Hermitian: {herm:e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > 1e-8 {
            return Err(Error::InvalidInput(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::InvalidInput(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.check_same_grid(other)?;
        let diff = hermitian_part(&(&self.entries - &other.entries));
        let ev = SymmetricEigen::new(diff).eigenvalues;
        Ok(0.5 * ev.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Reduced state of particle `keep`.
    pub fn trace_out(&self, keep: usize) -> Result<DensityMatrix> {
        let n = self.n_particles();
        if keep >= n {
            return Err(Error::ParticleIndex {
                index: keep,
                count: n,
            });
        }
        if n < 2 {
            return Err(Error::InvalidInput(
                "partial trace needs at least two particles".into(),
            ));
        }
        let p = self.grids[0].len();
        let stride = p.pow((n - 1 - keep) as u32);
        // Flat indices with particle `keep` at node 0, one per configuration
        // of the other particles.
        let bases: Vec<usize> = (0..p.pow(n as u32))
            .filter(|idx| (idx / stride).is_multiple_of(p))
            .collect();
        let mut red = DMatrix::<Complex64>::zeros(p, p);
        for b in 0..p {
            for a in 0..p {
                let mut s = Complex64::new(0.0, 0.0);
                for &base in &bases {
                    s += self.entries[(base + a * stride, base + b * stride)];
                }
                red[(a, b)] = s;
            }
        }
        Ok(DensityMatrix {
            grids: vec![self.grids[keep].clone()],
            entries: red,
        })
    }

    /// Position density of particle `k` (per unit volume).
    pub fn position_density(&self, k: usize) -> Result<Vec<f64>> {
        let n = self.n_particles();
        if k >= n {
            return Err(Error::ParticleIndex { index: k, count: n });
        }
        let p = self.grids[0].len();
        let stride = p.pow((n - 1 - k) as u32);
        let dv = self.grids[0].cell_volume();
        let mut out = vec![0.0; p];
        for i in 0..self.dim() {
            out[(i / stride) % p] += self.entries[(i, i)].re / dv;
        }
        Ok(out)
    }

    /// Mean position of particle `k`.
    pub fn expectation_position(&self, k: usize) -> Result<Vec<f64>> {
        let rho = self.position_density(k)?;
        let g = &self.grids[k];
        let dv = g.cell_volume();
        let mut mean = vec![0.0; g.dim];
        let mut idx = [0usize; 3];
        for (node, w) in rho.iter().enumerate() {
            g.unflatten(node, &mut idx[..g.dim]);
            for (a, m) in mean.iter_mut().enumerate() {
                *m += w * dv * g.axis_coord(a, idx[a]);
            }
        }
        Ok(mean)
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}
