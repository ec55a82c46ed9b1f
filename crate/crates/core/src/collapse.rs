//! Gaussian jump operators, flash clocks and flash-position sampling.

use std::f64::consts::PI;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::ChaCha20Rng;
use crate::state::{GridSpec, WaveFunction};
use crate::{Error, Result};

/// Maximum number of redraws for a flash that lands outside the grid.
pub const MAX_REJECTIONS: usize = 1000;

/// A collapse event: time, flashing particle and flash centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlashEvent {
    pub time: f64,
    pub particle: usize,
    pub position: Vec<f64>,
}

/// Poisson clock for the flashes of `n_particles` particles, each flashing at
/// rate `lambda`.
#[derive(Debug, Clone)]
pub struct FlashClock {
    n_particles: usize,
    lambda: f64,
    rng: ChaCha20Rng,
}

impl FlashClock {
    pub fn new(n_particles: usize, lambda: f64, rng: ChaCha20Rng) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidInput("flash clock needs a particle".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParams("lambda must be positive".into()));
        }
        Ok(FlashClock {
            n_particles,
            lambda,
            rng,
        })
    }

    /// Waiting time to the next flash and the particle that flashes.
    pub fn next_flash(&mut self) -> (f64, usize) {
        let rate = self.n_particles as f64 * self.lambda;
        let wait = Exp::new(rate).expect("rate is positive").sample(&mut self.rng);
        let k = self.rng.random_range(0..self.n_particles);
        (wait, k)
    }

    /// The generator, for draws interleaved with the clock (flash positions).
    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Values of the collapse operator `(pi r^2)^(-dim/4) exp(-(x - x_f)^2 / 2r^2)`
/// on every node of `grid`.
pub fn collapse_profile(grid: &GridSpec, x_f: &[f64], r_c: f64) -> Vec<f64> {
    let norm = (PI * r_c * r_c).powf(-(grid.dim as f64) / 4.0);
    let axis: Vec<Vec<f64>> = (0..grid.dim)
        .map(|a| {
            (0..grid.n_points)
                .map(|i| {
                    let d = grid.axis_coord(a, i) - x_f[a];
                    (-d * d / (2.0 * r_c * r_c)).exp()
                })
                .collect()
        })
        .collect();
    let mut idx = [0usize; 3];
    (0..grid.len())
        .map(|p| {
            grid.unflatten(p, &mut idx[..grid.dim]);
            (0..grid.dim).fold(norm, |acc, a| acc * axis[a][idx[a]])
        })
        .collect()
}

fn check_flash(psi: &WaveFunction, k: usize, x_f: &[f64]) -> Result<()> {
    let g = psi.particle_grid(k)?;
    if !g.contains(x_f) {
        return Err(Error::FlashOutsideGrid(x_f.to_vec()));
    }
    Ok(())
}

/// Multiplies `psi` by the collapse operator of particle `k` centred at `x_f`.
/// The result is not normalised; its squared norm is the flash density at
/// `x_f`.
pub fn apply_collapse(psi: &WaveFunction, k: usize, x_f: &[f64], r_c: f64) -> Result<WaveFunction> {
    let mut out = psi.clone();
    apply_collapse_in_place(&mut out, k, x_f, r_c)?;
    Ok(out)
}

pub fn apply_collapse_in_place(psi: &mut WaveFunction, k: usize, x_f: &[f64], r_c: f64) -> Result<()> {
    check_flash(psi, k, x_f)?;
    let profile = collapse_profile(psi.particle_grid(k)?, x_f, r_c);
    let stride = psi.particle_stride(k);
    let p = psi.points_per_particle();
    for (idx, a) in psi.amplitudes_mut().iter_mut().enumerate() {
        *a *= profile[(idx / stride) % p];
    }
    Ok(())
}

/// Density of the flash centre for particle `k`, `||L_k(x_f) psi||^2`,
/// evaluated at an arbitrary point.
pub fn flash_position_density_at(psi: &WaveFunction, k: usize, x_f: &[f64], r_c: f64) -> Result<f64> {
    let g = psi.particle_grid(k)?;
    if x_f.len() != g.dim {
        return Err(Error::InvalidInput(format!(
            "flash position has {} components, grid has {}",
            x_f.len(),
            g.dim
        )));
    }
    let rho = psi.position_density(k)?;
    let w = collapse_profile(g, x_f, r_c);
    let dv = g.cell_volume();
    Ok(rho.iter().zip(&w).map(|(r, l)| r * l * l * dv).sum())
}

/// Flash-centre density of particle `k` on the nodes of its grid: the
/// position marginal convolved with a normalised Gaussian of variance
/// `r_c^2 / 2` per axis.
pub fn flash_position_density(psi: &WaveFunction, k: usize, r_c: f64) -> Result<Vec<f64>> {
    let g = psi.particle_grid(k)?;
    let mut field = psi.position_density(k)?;
    let n = g.n_points;
    let h = g.spacing;
    // One-dimensional normalised kernel sampled at node offsets, times h.
    let kernel: Vec<f64> = (0..n)
        .map(|j| {
            let d = j as f64 * h;
            h * (-d * d / (r_c * r_c)).exp() / (PI.sqrt() * r_c)
        })
        .collect();
    let mut line = vec![0.0; n];
    for axis in 0..g.dim {
        let stride = n.pow((g.dim - 1 - axis) as u32);
        for start in 0..field.len() {
            if (start / stride) % n != 0 {
                continue;
            }
            for (i, l) in line.iter_mut().enumerate() {
                *l = field[start + i * stride];
            }
            for i in 0..n {
                field[start + i * stride] = (0..n).map(|j| line[j] * kernel[i.abs_diff(j)]).sum();
            }
        }
    }
    Ok(field)
}

/// Draws a flash centre for particle `k`.
///
/// A node is drawn from the position marginal and Gaussian noise of
/// variance `r_c^2 / 2` per axis is added; draws outside the grid are
/// rejected. The law of the result is `||L_k(x_f) psi||^2` restricted to the
/// grid, exactly, for any grid spacing.
pub fn sample_flash_position<R: Rng + ?Sized>(
    psi: &WaveFunction,
    k: usize,
    r_c: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let g = psi.particle_grid(k)?;
    let rho = psi.position_density(k)?;
    let pick = WeightedIndex::new(&rho)
        .map_err(|e| Error::InvalidInput(format!("position density: {e}")))?;
    let noise = Normal::new(0.0, r_c / 2f64.sqrt())
        .map_err(|e| Error::InvalidParams(format!("collapse width: {e}")))?;
    for _ in 0..MAX_REJECTIONS {
        let node = g.node(pick.sample(rng));
        let x: Vec<f64> = node.iter().map(|c| c + noise.sample(rng)).collect();
        if g.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::SamplingRejected(MAX_REJECTIONS))
}

/// Writes a flash log as CSV. The first line is a comment carrying the
/// parameter hash and master seed.
pub fn write_flash_csv<W: Write>(
    events: &[FlashEvent],
    dim: usize,
    params_hash: &str,
    master_seed: u64,
    mut w: W,
) -> Result<()> {
    writeln!(w, "# params_hash={params_hash} master_seed={master_seed}")?;
    let cols = ["x", "y", "z"];
    writeln!(w, "time,particle,{}", cols[..dim].join(","))?;
    for e in events {
        let pos: Vec<String> = e.position.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{:e},{},{}", e.time, e.particle, pos.join(","))?;
    }
    Ok(())
}
