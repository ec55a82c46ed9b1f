//! Master equation of the flash process,
//!
//! `d rho / dt = -i/hbar [H0, rho] + lambda sum_k (int dx_f B_k rho B_k^dag - rho)`,
//!
//! with `B_k = U_k(x_f) L_k(x_f)`. Both factors are diagonal in position, so
//! the jump term is a Hadamard product `K_k o rho` with
//! `K_k(X, Y) = int dx_f B_k(X) conj(B_k(Y))`. The flash integral is a
//! Riemann sum on a lattice aligned with the grid, `r_C / 4` or finer,
//! reaching far enough past the box that the Kraus sum is complete.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{EvolutionConfig, FreeHamiltonian, JumpMode, Spectral};
use crate::collapse::collapse_profile;
use crate::exec::{map_slice, Execution};
use crate::gravity::PhaseLaw;
use crate::state::{DensityMatrix, GridSpec, MAX_DENSITY_DIM};
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// Flash lattice reach beyond the box, in units of `r_C`.
const LATTICE_MARGIN: f64 = 8.0;
/// Radius around the pair midpoint summed in the translation-invariant
/// kernel, in units of `r_C`.
const KERNEL_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MasterOptions {
    /// Flash lattice step is `spacing / refinement`. `None` picks the
    /// smallest refinement giving a step of at most `r_C / 8` in 1D and
    /// `r_C / 4` in 3D.
    pub refinement: Option<usize>,
    /// Local error target per step (max entry of the step-doubling
    /// difference).
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions {
            refinement: None,
            tolerance: 1e-11,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterReport {
    pub steps: usize,
    pub rejected: usize,
    pub trace_drift: f64,
    pub hermiticity_drift: f64,
    pub flash_step: f64,
}

#[derive(Debug, Clone)]
enum Rates {
    /// `lambda (kappa(X - Y) - 1)` looked up through `base[X] - base[Y] + centre`.
    Translation {
        table: Vec<Complex64>,
        base: Vec<usize>,
        centre: usize,
    },
    /// `lambda (sum_k K_k - N)` stored densely.
    Dense(DMatrix<Complex64>),
    /// `lambda = 0`: no jumps.
    Zero,
}

/// Precomputed generator for one model and grid.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    grids: Vec<GridSpec>,
    hbar: f64,
    spectral: Option<Spectral>,
    potential: Option<Vec<f64>>,
    rates: Rates,
    flash_step: f64,
    max_rate: f64,
}

impl MasterEquation {
    pub fn new(
        grids: &[GridSpec],
        params: &PhysicalParams,
        config: &EvolutionConfig,
        options: &MasterOptions,
    ) -> Result<Self> {
        // lambda = 0 switches the jump term off; everything else must
        // still be valid.
        let unitary = params.lambda == 0.0;
        if unitary {
            PhysicalParams {
                lambda: 1.0,
                ..params.clone()
            }
            .check()?;
        } else {
            params.check()?;
        }
        config.check()?;
        let n = grids.len();
        if n != params.n_particles() {
            return Err(Error::InvalidInput(format!(
                "{} grids for {} particles",
                n,
                params.n_particles()
            )));
        }
        let g = &grids[0];
        let d = g.len().pow(n as u32);
        if d > MAX_DENSITY_DIM {
            return Err(Error::StateTooLarge {
                size: d,
                cap: MAX_DENSITY_DIM,
            });
        }
        let r = params.r_c;
        let target = if g.dim == 1 { r / 8.0 } else { r / 4.0 };
        let m = options
            .refinement
            .unwrap_or_else(|| (g.spacing / target).ceil().max(1.0) as usize);
        if m == 0 {
            return Err(Error::InvalidInput("refinement must be positive".into()));
        }
        let step = g.spacing / m as f64;
        if step > r / 4.0 * (1.0 + 1e-12) {
            return Err(Error::UnderResolved(format!(
                "flash lattice step {step} is coarser than r_C/4 = {}",
                r / 4.0
            )));
        }
        let softening = config.softening_for(g);
        let law = PhaseLaw::new(params.smearing, softening);
        if law.is_singular() {
            return Err(Error::UndefinedPhase(
                "the flash lattice contains grid nodes; a positive softening is required".into(),
            ));
        }
        let mut scales = params.r_g_matrix();
        if config.mode == JumpMode::Vanilla {
            scales.iter_mut().flatten().for_each(|s| *s = 0.0);
        }
        let rates = if unitary {
            Rates::Zero
        } else if n == 1 {
            translation_rates(g, params.lambda, r, scales[0][0], law, step)
        } else if g.dim == 1 {
            Rates::Dense(dense_rates(grids, params.lambda, r, &scales, law, step, m))
        } else {
            return Err(Error::InvalidInput(
                "the master equation supports several particles only on 1D grids".into(),
            ));
        };
        let (spectral, potential) = match &config.hamiltonian {
            FreeHamiltonian::None => (None, None),
            FreeHamiltonian::Kinetic => (Some(Spectral::new(grids, params)?), None),
            FreeHamiltonian::KineticPotential(v) => {
                if v.len() != d {
                    return Err(Error::GridMismatch(format!(
                        "potential has {} values, state space has {d}",
                        v.len()
                    )));
                }
                (Some(Spectral::new(grids, params)?), Some(v.clone()))
            }
        };
        let e_max = spectral
            .as_ref()
            .map(|s| s.energies().iter().fold(0.0f64, |a, &e| a.max(e.abs())))
            .unwrap_or(0.0)
            + potential
                .as_ref()
                .map(|v| v.iter().fold(0.0f64, |a, &e| a.max(e.abs())))
                .unwrap_or(0.0);
        let r_max = match &rates {
            Rates::Translation { table, .. } => table.iter().fold(0.0f64, |a, z| a.max(z.norm())),
            Rates::Dense(m) => m.iter().fold(0.0f64, |a, z| a.max(z.norm())),
            Rates::Zero => 0.0,
        };
        Ok(MasterEquation {
            grids: grids.to_vec(),
            hbar: params.hbar,
            spectral,
            potential,
            rates,
            flash_step: step,
            max_rate: 2.0 * e_max / params.hbar + r_max,
        })
    }

    pub fn flash_step(&self) -> f64 {
        self.flash_step
    }

    /// Jump kernel rate `lambda (sum_k K_k(X, Y) - N)`.
    pub fn rate(&self, x: usize, y: usize) -> Complex64 {
        match &self.rates {
            Rates::Translation { table, base, centre } => table[base[x] + centre - base[y]],
            Rates::Dense(m) => m[(x, y)],
            Rates::Zero => Complex64::new(0.0, 0.0),
        }
    }

    fn apply_h_columns(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = m.nrows();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        if let Some(s) = &self.spectral {
            let mut col = vec![Complex64::new(0.0, 0.0); d];
            for j in 0..d {
                s.apply_kinetic(m.column(j).as_slice(), &mut col);
                out.column_mut(j).copy_from_slice(&col);
            }
        }
        if let Some(v) = &self.potential {
            for j in 0..d {
                for i in 0..d {
                    out[(i, j)] += m[(i, j)] * v[i];
                }
            }
        }
        out
    }

    /// `d rho / dt` as a raw matrix.
    pub fn derivative_entries(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = rho.nrows();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        if self.spectral.is_some() || self.potential.is_some() {
            let h_rho = self.apply_h_columns(rho);
            let rho_h = self.apply_h_columns(&rho.adjoint()).adjoint();
            let f = Complex64::new(0.0, -1.0 / self.hbar);
            out = (h_rho - rho_h) * f;
        }
        if matches!(self.rates, Rates::Zero) {
            return out;
        }
        for j in 0..d {
            for i in 0..d {
                out[(i, j)] += self.rate(i, j) * rho[(i, j)];
            }
        }
        out
    }

    pub fn derivative(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.grids() != self.grids.as_slice() {
            return Err(Error::GridMismatch("density matrix grid differs from the generator's".into()));
        }
        DensityMatrix::from_entries(self.grids.clone(), self.derivative_entries(rho.entries()))
    }

    fn rk4(&self, y: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
        let h = Complex64::new(dt, 0.0);
        let half = Complex64::new(dt / 2.0, 0.0);
        let k1 = self.derivative_entries(y);
        let k2 = self.derivative_entries(&(y + &k1 * half));
        let k3 = self.derivative_entries(&(y + &k2 * half));
        let k4 = self.derivative_entries(&(y + &k3 * h));
        y + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (h / 6.0)
    }

    /// Integrates from `rho0` over `total_time` with step-doubling RK4.
    pub fn evolve(
        &self,
        rho0: &DensityMatrix,
        total_time: f64,
        options: &MasterOptions,
    ) -> Result<(DensityMatrix, MasterReport)> {
        if rho0.grids() != self.grids.as_slice() {
            return Err(Error::GridMismatch("density matrix grid differs from the generator's".into()));
        }
        let mut y = rho0.entries().clone();
        let mut t = 0.0;
        let mut dt = if self.max_rate > 0.0 {
            (0.5 / self.max_rate).min(total_time)
        } else {
            total_time
        };
        let (mut steps, mut rejected) = (0, 0);
        while t < total_time {
            if steps + rejected >= options.max_steps {
                return Err(Error::StepControl(format!(
                    "{} steps reached at t = {t} of {total_time}",
                    options.max_steps
                )));
            }
            let last = t + dt >= total_time;
            let h = if last { total_time - t } else { dt };
            let full = self.rk4(&y, h);
            let mid = self.rk4(&y, h / 2.0);
            let two = self.rk4(&mid, h / 2.0);
            let err = (&two - &full).iter().fold(0.0f64, |a, z| a.max(z.norm())) / 15.0;
            if !err.is_finite() {
                return Err(Error::StepControl(format!("non-finite state at t = {t}")));
            }
            if err <= options.tolerance {
                y = two;
                t = if last { total_time } else { t + h };
                steps += 1;
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * (options.tolerance / err).powf(0.2)).clamp(0.2, 4.0)
            };
            dt = h * factor;
            if dt < total_time * 1e-14 {
                return Err(Error::StepControl(format!("step size underflow at t = {t}")));
            }
        }
        let rho = DensityMatrix::from_entries(self.grids.clone(), y)?;
        let trace_drift = (rho.trace() - rho0.trace()).norm();
        let hermiticity_drift = (rho.hermiticity_error() - rho0.hermiticity_error()).max(0.0);
        if trace_drift > 1e-8 {
            return Err(Error::StepControl(format!("trace drifted by {trace_drift:e}")));
        }
        if hermiticity_drift > 1e-9 {
            return Err(Error::StepControl(format!(
                "Hermiticity drifted by {hermiticity_drift:e}"
            )));
        }
        Ok((
            rho,
            MasterReport {
                steps,
                rejected,
                trace_drift,
                hermiticity_drift,
                flash_step: self.flash_step,
            },
        ))
    }
}

/// Kernel of a single particle. With the lattice aligned to the grid and
/// effectively infinite, `K(X, Y)` depends on `X - Y` only.
fn translation_rates(g: &GridSpec, lambda: f64, r: f64, r_g: f64, law: PhaseLaw, step: f64) -> Rates {
    let n = g.n_points as i64;
    let dim = g.dim;
    let h = g.spacing;
    let side = (2 * n - 1) as usize;
    let reach = (KERNEL_RADIUS * r / step).ceil() as i64 + 1;
    let w = step.powi(dim as i32);
    let norm = (std::f64::consts::PI * r * r).powf(-(dim as f64) / 2.0);

    // Distinct displacements up to signed permutations of the axes.
    let mut reps: Vec<[i64; 3]> = Vec::new();
    match dim {
        1 => reps.extend((0..n).map(|a| [a, 0, 0])),
        _ => {
            for a in 0..n {
                for b in 0..=a {
                    for c in 0..=b {
                        reps.push([a, b, c]);
                    }
                }
            }
        }
    }
    let kappa = |disp: &[i64; 3]| -> Complex64 {
        // X = disp * h, Y = 0, flashes at step * j.
        let x: Vec<f64> = (0..dim).map(|a| disp[a] as f64 * h).collect();
        let centre: Vec<i64> = x.iter().map(|v| (v / 2.0 / step).round() as i64).collect();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut j = [0i64; 3];
        let span = 2 * reach + 1;
        let count = span.pow(dim as u32);
        for p in 0..count {
            let mut q = p;
            for a in (0..dim).rev() {
                j[a] = centre[a] - reach + q % span;
                q /= span;
            }
            let (mut dx2, mut dy2, mut dm2) = (0.0, 0.0, 0.0);
            for a in 0..dim {
                let f = j[a] as f64 * step;
                dx2 += (x[a] - f) * (x[a] - f);
                dy2 += f * f;
                let m = f - x[a] / 2.0;
                dm2 += m * m;
            }
            if dm2 > (KERNEL_RADIUS * r).powi(2) {
                continue;
            }
            let weight = (-(dx2 + dy2) / (2.0 * r * r)).exp();
            let phase = if r_g == 0.0 {
                0.0
            } else {
                r_g * (law.value(dx2.sqrt()) - law.value(dy2.sqrt()))
            };
            sum += Complex64::from_polar(weight, phase);
        }
        sum * (w * norm)
    };
    let values = map_slice(Execution::Parallel, &reps, kappa);

    let mut table = vec![Complex64::new(0.0, 0.0); side.pow(dim as u32)];
    let index = |d: &[i64]| -> usize {
        d.iter().take(dim).fold(0usize, |acc, &v| acc * side + (v + n - 1) as usize)
    };
    // Signed permutations map the lattice onto itself, so kappa is
    // invariant under them; with kappa(-D) = conj(kappa(D)) this also makes
    // it real.
    for (rep, val) in reps.iter().zip(&values) {
        let rate = (val - 1.0) * lambda;
        for disp in signed_permutations(rep, dim) {
            table[index(&disp)] = rate;
        }
    }
    let base: Vec<usize> = (0..g.len())
        .map(|p| {
            let mut idx = [0usize; 3];
            g.unflatten(p, &mut idx[..dim]);
            idx[..dim].iter().fold(0usize, |acc, &i| acc * side + i)
        })
        .collect();
    let centre = index(&[0, 0, 0]);
    Rates::Translation { table, base, centre }
}

fn signed_permutations(rep: &[i64; 3], dim: usize) -> Vec<Vec<i64>> {
    let perms: &[[usize; 3]] = if dim == 1 {
        &[[0, 1, 2]]
    } else {
        &[[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
    };
    let mut out = Vec::new();
    for p in perms {
        for signs in 0..(1 << dim) {
            let v: Vec<i64> = (0..dim)
                .map(|a| {
                    let s = if signs >> a & 1 == 1 { -1 } else { 1 };
                    s * rep[p[a]]
                })
                .collect();
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// Dense kernel for several particles on 1D grids: `K_k = B_k B_k^dag` with
/// `B_k[X, f] = sqrt(step) L(x_k - f) exp(i sum_l r_G(k,l) law(|x_l - f|))`.
fn dense_rates(
    grids: &[GridSpec],
    lambda: f64,
    r: f64,
    scales: &[Vec<f64>],
    law: PhaseLaw,
    step: f64,
    m: usize,
) -> DMatrix<Complex64> {
    let n = grids.len();
    let p = grids[0].n_points;
    let d = p.pow(n as u32);
    let reach = (LATTICE_MARGIN * r / step).ceil() as i64;
    let mut total = DMatrix::<Complex64>::zeros(d, d);
    let coords: Vec<Vec<f64>> = (0..d)
        .map(|x| {
            (0..n)
                .map(|k| {
                    let node = (x / p.pow((n - 1 - k) as u32)) % p;
                    grids[k].axis_coord(0, node)
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        let g = &grids[k];
        let lo = -reach;
        let hi = ((p - 1) * m) as i64 + reach;
        let flashes: Vec<f64> = (lo..=hi).map(|j| g.origin[0] + j as f64 * step).collect();
        let f_count = flashes.len();
        let mut b = DMatrix::<Complex64>::zeros(d, f_count);
        for (fi, &f) in flashes.iter().enumerate() {
            let l = collapse_profile(g, &[f], r);
            for x in 0..d {
                let node = (x / p.pow((n - 1 - k) as u32)) % p;
                let mut phase = 0.0;
                for (l_idx, xl) in coords[x].iter().enumerate() {
                    let s = scales[k][l_idx];
                    if s != 0.0 {
                        phase += s * law.value((xl - f).abs());
                    }
                }
                b[(x, fi)] = Complex64::from_polar(l[node] * step.sqrt(), phase);
            }
        }
        total += &b * b.adjoint();
    }
    total.map(|z| (z - n as f64) * lambda)
}

/// `d rho / dt` for `rho`.
pub fn master_generator(
    rho: &DensityMatrix,
    params: &PhysicalParams,
    config: &EvolutionConfig,
) -> Result<DensityMatrix> {
    MasterEquation::new(rho.grids(), params, config, &MasterOptions::default())?.derivative(rho)
}

/// Evolves `rho0` to `config.total_time`.
pub fn master_evolve(
    rho0: &DensityMatrix,
    params: &PhysicalParams,
    config: &EvolutionConfig,
    options: &MasterOptions,
) -> Result<(DensityMatrix, MasterReport)> {
    MasterEquation::new(rho0.grids(), params, config, options)?.evolve(rho0, config.total_time, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{KernelModel, KernelResult, QuadratureSpec};
    use crate::dynamics::exact_diagonal_solution;
    use crate::state::{GaussianPacket, WaveFunction};
    use rand::{Rng, SeedableRng};

    fn grid() -> GridSpec {
        GridSpec::centered(1, 16, 0.25, 0.0).unwrap()
    }

    fn cat(g: &GridSpec) -> DensityMatrix {
        let packet = |c: f64| WaveFunction::gaussian_packets(vec![g.clone()], &[GaussianPacket::at_rest(vec![c], 0.6)]).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let psi = WaveFunction::superpose(&[(one, &packet(-1.0)), (one, &packet(1.0))])
            .unwrap()
            .normalize()
            .unwrap();
        DensityMatrix::pure(&psi).unwrap()
    }

    fn random_state(grids: Vec<GridSpec>, seed: u64) -> DensityMatrix {
        let d = grids.iter().map(|g| g.len()).product::<usize>();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let a = DMatrix::<Complex64>::from_fn(d, 3, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::from_entries(grids, m / tr).unwrap()
    }

    fn config(t: f64, ham: FreeHamiltonian) -> EvolutionConfig {
        EvolutionConfig::new(t, ham, 0.05).unwrap().with_softening(0.125)
    }

    #[test]
    fn maximally_mixed_is_stationary_without_gravity() {
        let g = grid();
        let params = PhysicalParams::dimensionless(1.0, 0.0, 1.0, 1);
        let rho = DensityMatrix::maximally_mixed(vec![g]).unwrap();
        let d = master_generator(&rho, &params, &config(1.0, FreeHamiltonian::None)).unwrap();
        assert!(d.entries().iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn derivative_is_traceless_with_zero_diagonal() {
        let g = grid();
        let params = PhysicalParams::dimensionless(1.0, 0.4, 1.0, 1);
        let rho = random_state(vec![g], 3);
        let d = master_generator(&rho, &params, &config(1.0, FreeHamiltonian::None)).unwrap();
        assert!(d.trace().norm() < 1e-12);
        for i in 0..rho.dim() {
            assert!(d.entries()[(i, i)].norm() < 1e-10);
        }
        let params = PhysicalParams::dimensionless(1.0, 0.4, 1.0, 1);
        let d = master_generator(&rho, &params, &config(1.0, FreeHamiltonian::Kinetic)).unwrap();
        assert!(d.trace().norm() < 1e-10);
    }

    #[test]
    fn dense_and_translation_paths_agree() {
        let g = grid();
        let params = PhysicalParams::dimensionless(0.8, 0.3, 1.0, 1);
        let cfg = config(1.0, FreeHamiltonian::None);
        let eq = MasterEquation::new(std::slice::from_ref(&g), &params, &cfg, &MasterOptions::default()).unwrap();
        let m = (g.spacing / eq.flash_step()).round() as usize;
        let dense = dense_rates(std::slice::from_ref(&g), 0.8, 1.0, &params.r_g_matrix(), PhaseLaw::Softened { a: 0.125 }, eq.flash_step(), m);
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert!((dense[(i, j)] - eq.rate(i, j)).norm() < 1e-9, "{i} {j}");
            }
        }
    }

    #[test]
    fn matches_exact_solution_without_hamiltonian() {
        let g = grid();
        let (lambda, r_g, t) = (1.0, 0.2, 1.5);
        let params = PhysicalParams::dimensionless(lambda, r_g, 1.0, 1);
        let rho0 = cat(&g);
        let options = MasterOptions {
            refinement: Some(16),
            ..MasterOptions::default()
        };
        let (rho, report) = master_evolve(&rho0, &params, &config(t, FreeHamiltonian::None), &options).unwrap();
        assert!(report.trace_drift < 1e-8);
        let model = KernelModel {
            r_g,
            r_c: 1.0,
            law: PhaseLaw::Softened { a: 0.125 },
            dim: 1,
        };
        let k = KernelResult::for_grid(&g, model, QuadratureSpec::default(), Execution::Parallel).unwrap();
        let exact = exact_diagonal_solution(&rho0, &k, lambda, t).unwrap();
        let diff = (rho.entries() - exact.entries()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn zero_rate_conserves_purity() {
        let g = grid();
        let mut params = PhysicalParams::dimensionless(1.0, 0.0, 1.0, 1);
        params.lambda = 0.0;
        let rho0 = cat(&g);
        let (rho, _) = master_evolve(&rho0, &params, &config(0.5, FreeHamiltonian::Kinetic), &MasterOptions::default()).unwrap();
        assert!((rho.purity() - rho0.purity()).abs() < 1e-8);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = grid();
        let params = PhysicalParams::dimensionless(1.0, 0.2, 1.0, 1);
        let rho0 = cat(&g);
        let (rho, report) = master_evolve(&rho0, &params, &config(0.0, FreeHamiltonian::Kinetic), &MasterOptions::default()).unwrap();
        assert_eq!(rho.entries(), rho0.entries());
        assert_eq!(report.steps, 0);
    }

    #[test]
    fn evolution_stays_positive() {
        let g = GridSpec::centered(1, 8, 0.25, 0.0).unwrap();
        let params = PhysicalParams::dimensionless(2.0, 0.3, 1.0, 1);
        for seed in 0..3 {
            let rho0 = random_state(vec![g.clone()], seed);
            let (rho, report) = master_evolve(&rho0, &params, &config(0.7, FreeHamiltonian::Kinetic), &MasterOptions::default()).unwrap();
            assert!(rho.min_eigenvalue() > -1e-7);
            assert!(report.hermiticity_drift < 1e-9);
        }
    }

    #[test]
    fn two_particles_on_a_line() {
        let g = GridSpec::centered(1, 6, 0.25, 0.0).unwrap();
        let grids = vec![g.clone(), g.shifted(2.0)];
        let params = PhysicalParams::dimensionless(1.0, 0.2, 1.0, 2);
        let rho0 = random_state(grids, 9);
        let (rho, _) = master_evolve(&rho0, &params, &config(0.5, FreeHamiltonian::None), &MasterOptions::default()).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
        assert!(rho.min_eigenvalue() > -1e-7);
        for i in 0..rho.dim() {
            assert!((rho.entries()[(i, i)] - rho0.entries()[(i, i)]).norm() < 1e-9);
        }
    }

    #[test]
    fn bare_law_is_rejected() {
        let g = grid();
        let params = PhysicalParams::dimensionless(1.0, 0.2, 1.0, 1);
        let cfg = EvolutionConfig::new(1.0, FreeHamiltonian::None, 0.1).unwrap().with_softening(0.0);
        assert!(matches!(
            MasterEquation::new(&[g], &params, &cfg, &MasterOptions::default()),
            Err(Error::UndefinedPhase(_))
        ));
    }
}
