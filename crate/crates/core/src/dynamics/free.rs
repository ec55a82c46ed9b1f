//! Free evolution under `H0 = sum_k p_k^2 / 2m_k + V(x)`.
//!
//! The kinetic term is diagonal in the tensor discrete Fourier basis and is
//! applied exactly there; an external potential is added by Strang
//! splitting.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{EvolutionConfig, FreeHamiltonian};
use crate::state::{GridSpec, WaveFunction};
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// Multidimensional FFT over every axis of every particle, plus the kinetic
/// energy of each Fourier mode.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    axes: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    energies: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.n)
            .field("axes", &self.axes)
            .finish()
    }
}

impl Spectral {
    pub fn new(grids: &[GridSpec], params: &PhysicalParams) -> Result<Self> {
        if grids.len() != params.n_particles() {
            return Err(Error::InvalidInput(format!(
                "{} grids for {} masses",
                grids.len(),
                params.n_particles()
            )));
        }
        let g = &grids[0];
        let n = g.n_points;
        let axes = g.dim * grids.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let k = g.wavenumbers();
        let len = n.pow(axes as u32);
        let mut energies = vec![0.0; len];
        let mut rem;
        for (idx, e) in energies.iter_mut().enumerate() {
            rem = idx;
            let mut sum = 0.0;
            for axis in (0..axes).rev() {
                let j = rem % n;
                rem /= n;
                let m = params.masses[axis / g.dim];
                sum += params.hbar * params.hbar * k[j] * k[j] / (2.0 * m);
            }
            *e = sum;
        }
        Ok(Spectral {
            n,
            axes,
            fft,
            ifft,
            energies,
        })
    }

    /// Kinetic energy of every Fourier mode, in flat order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.axes {
            let stride = n.pow((self.axes - 1 - axis) as u32);
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (i, l) in line.iter_mut().enumerate() {
                        *l = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, l) in line.iter().enumerate() {
                        data[base + i * stride] = *l;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fft);
    }

    /// Inverse transform including the `1/len` normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.ifft);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Writes `T psi` into `out`.
    pub fn apply_kinetic(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(psi);
        self.forward(out);
        for (v, e) in out.iter_mut().zip(&self.energies) {
            *v *= e;
        }
        self.inverse(out);
    }
}

/// Propagator `exp(-i H0 dt / hbar)` for a fixed step.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    spectral: Option<Spectral>,
    kinetic_phase: Vec<Complex64>,
    half_potential: Option<Vec<Complex64>>,
    dt: f64,
}

impl FreePropagator {
    pub fn new(grids: &[GridSpec], params: &PhysicalParams, hamiltonian: &FreeHamiltonian, dt: f64) -> Result<Self> {
        let (spectral, potential) = parts(grids, params, hamiltonian)?;
        Ok(Self::from_parts(spectral, potential, params.hbar, dt))
    }

    fn from_parts(spectral: Option<Spectral>, potential: Option<&[f64]>, hbar: f64, dt: f64) -> Self {
        let kinetic_phase = spectral
            .as_ref()
            .map(|s| {
                s.energies()
                    .iter()
                    .map(|e| Complex64::from_polar(1.0, -e * dt / hbar))
                    .collect()
            })
            .unwrap_or_default();
        let half_potential = potential.map(|v| {
            v.iter()
                .map(|e| Complex64::from_polar(1.0, -e * dt / (2.0 * hbar)))
                .collect()
        });
        FreePropagator {
            spectral,
            kinetic_phase,
            half_potential,
            dt,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_identity(&self) -> bool {
        self.spectral.is_none()
    }

    /// Advances `psi` by one step.
    pub fn step(&self, psi: &mut WaveFunction) {
        let Some(s) = &self.spectral else { return };
        let a = psi.amplitudes_mut();
        if let Some(v) = &self.half_potential {
            a.iter_mut().zip(v).for_each(|(x, p)| *x *= p);
        }
        s.forward(a);
        a.iter_mut().zip(&self.kinetic_phase).for_each(|(x, p)| *x *= p);
        s.inverse(a);
        if let Some(v) = &self.half_potential {
            a.iter_mut().zip(v).for_each(|(x, p)| *x *= p);
        }
    }
}

fn parts<'a>(
    grids: &[GridSpec],
    params: &PhysicalParams,
    hamiltonian: &'a FreeHamiltonian,
) -> Result<(Option<Spectral>, Option<&'a [f64]>)> {
    match hamiltonian {
        FreeHamiltonian::None => Ok((None, None)),
        FreeHamiltonian::Kinetic => Ok((Some(Spectral::new(grids, params)?), None)),
        FreeHamiltonian::KineticPotential(v) => {
            let len = grids[0].len().pow(grids.len() as u32);
            if v.len() != len {
                return Err(Error::GridMismatch(format!(
                    "potential has {} values, state space has {len}",
                    v.len()
                )));
            }
            Ok((Some(Spectral::new(grids, params)?), Some(v.as_slice())))
        }
    }
}

/// Free flight of arbitrary duration: whole steps of `dt_free` followed by
/// one shorter step for the remainder.
#[derive(Debug, Clone)]
pub struct FreeEvolver {
    spectral: Option<Spectral>,
    potential: Option<Vec<f64>>,
    hbar: f64,
    full: FreePropagator,
}

impl FreeEvolver {
    pub fn new(grids: &[GridSpec], params: &PhysicalParams, config: &EvolutionConfig) -> Result<Self> {
        let (spectral, potential) = parts(grids, params, &config.hamiltonian)?;
        let full = FreePropagator::from_parts(spectral.clone(), potential, params.hbar, config.dt_free);
        Ok(FreeEvolver {
            spectral,
            potential: potential.map(<[f64]>::to_vec),
            hbar: params.hbar,
            full,
        })
    }

    pub fn evolve(&self, psi: &mut WaveFunction, duration: f64) {
        if self.full.is_identity() || duration <= 0.0 {
            return;
        }
        let dt = self.full.dt();
        let whole = (duration / dt).floor();
        for _ in 0..whole as usize {
            self.full.step(psi);
        }
        let rest = duration - whole * dt;
        if rest > 1e-14 * dt {
            FreePropagator::from_parts(self.spectral.clone(), self.potential.as_deref(), self.hbar, rest)
                .step(psi);
        }
    }
}

/// Evolves `psi` freely for `duration`.
pub fn free_evolve(psi: &mut WaveFunction, params: &PhysicalParams, config: &EvolutionConfig, duration: f64) -> Result<()> {
    FreeEvolver::new(psi.grids(), params, config)?.evolve(psi, duration);
    Ok(())
}

/// One free step of length `dt <= config.dt_free`.
pub fn free_step(psi: &WaveFunction, params: &PhysicalParams, config: &EvolutionConfig, dt: f64) -> Result<WaveFunction> {
    if dt > config.dt_free * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "step {dt} exceeds dt_free {}",
            config.dt_free
        )));
    }
    let mut out = psi.clone();
    FreePropagator::new(psi.grids(), params, &config.hamiltonian, dt)?.step(&mut out);
    Ok(out)
}
