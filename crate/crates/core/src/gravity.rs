//! Phase kicks imprinted by the gravitational field of a flash.
//!
//! A flash of particle `k` at `x_f` sources an impulsive Newtonian field whose
//! time integral multiplies the wavefunction by
//! `exp(i sum_l r_G(k, l) law(|x_l - x_f|))`, with `law` the bare, softened or
//! Gaussian-smeared `1/r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use libm::erf;

use crate::collapse::FlashEvent;
use crate::state::{GridSpec, WaveFunction};
use crate::units::{PhysicalParams, SmearingMode};
use crate::{Error, Result};

/// Radial profile of the potential sourced by one flash.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseLaw {
    /// Bare `1/d`.
    Coulomb,
    /// Plummer-softened `1/sqrt(d^2 + a^2)`.
    Softened { a: f64 },
    /// Gaussian-smeared `erf(d/w)/d`.
    Smeared { width: f64 },
}

impl PhaseLaw {
    /// Law implied by a smearing mode and a softening length.
    pub fn new(smearing: SmearingMode, softening: f64) -> Self {
        match smearing {
            SmearingMode::Gaussian { width } => PhaseLaw::Smeared { width },
            SmearingMode::Sharp if softening > 0.0 => PhaseLaw::Softened { a: softening },
            SmearingMode::Sharp => PhaseLaw::Coulomb,
        }
    }

    pub fn value(&self, d: f64) -> f64 {
        match *self {
            PhaseLaw::Coulomb => 1.0 / d,
            PhaseLaw::Softened { a } => 1.0 / (d * d + a * a).sqrt(),
            PhaseLaw::Smeared { width } => smeared_newton_potential(d, width),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, PhaseLaw::Coulomb)
    }

    /// Stable key for caches.
    pub fn key(&self) -> (u8, u64) {
        match *self {
            PhaseLaw::Coulomb => (0, 0),
            PhaseLaw::Softened { a } => (1, a.to_bits()),
            PhaseLaw::Smeared { width } => (2, width.to_bits()),
        }
    }
}

/// Default Plummer softening for a grid, half a cell.
pub fn default_softening(grid: &GridSpec) -> f64 {
    grid.spacing / 2.0
}

/// `erf(d / r_c) / d`: the Coulomb potential convolved with the normalised
/// Gaussian `(pi r_c^2)^(-3/2) exp(-r^2 / r_c^2)`.
pub fn smeared_newton_potential(d: f64, r_c: f64) -> f64 {
    let u = d / r_c;
    if u < 1e-4 {
        // erf(u)/u = 2/sqrt(pi) (1 - u^2/3 + ...)
        2.0 / (PI.sqrt() * r_c) * (1.0 - u * u / 3.0)
    } else {
        erf(u) / d
    }
}

/// Phases imprinted by one flash on every particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub flash: FlashEvent,
    /// `r_G(k, l)` for every target particle `l`.
    pub pair_scales: Vec<f64>,
    pub smearing: SmearingMode,
    pub softening: f64,
    /// Phase on each node of particle `l`'s grid.
    pub values: Vec<Vec<f64>>,
    grids: Vec<GridSpec>,
}

impl PhaseProfile {
    /// True when every pair scale vanishes, i.e. the kick is the identity.
    pub fn is_trivial(&self) -> bool {
        self.pair_scales.iter().all(|&s| s == 0.0)
    }

    pub fn grids(&self) -> &[GridSpec] {
        &self.grids
    }
}

/// Phase profile of `flash` on the particle grids `grids`.
pub fn phase_profile(
    grids: &[GridSpec],
    flash: &FlashEvent,
    params: &PhysicalParams,
    softening: f64,
) -> Result<PhaseProfile> {
    params.check()?;
    let n = grids.len();
    if n != params.n_particles() {
        return Err(Error::InvalidInput(format!(
            "{} grids for {} particles",
            n,
            params.n_particles()
        )));
    }
    let k = flash.particle;
    let pair_scales = (0..n)
        .map(|l| params.r_g(k, l))
        .collect::<Result<Vec<_>>>()?;
    if !(softening >= 0.0) {
        return Err(Error::InvalidInput(format!("softening must be nonnegative, got {softening}")));
    }
    let law = PhaseLaw::new(params.smearing, softening);
    let mut values = Vec::with_capacity(n);
    for (grid, &scale) in grids.iter().zip(&pair_scales) {
        if flash.position.len() != grid.dim {
            return Err(Error::InvalidInput("flash position has the wrong dimension".into()));
        }
        if law.is_singular() && grid.dim == 1 {
            return Err(Error::UndefinedPhase(
                "the one-dimensional harness needs a positive softening".into(),
            ));
        }
        let mut v = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let d = grid
                .node(p)
                .iter()
                .zip(&flash.position)
                .map(|(x, f)| (x - f) * (x - f))
                .sum::<f64>()
                .sqrt();
            if law.is_singular() && d == 0.0 && scale != 0.0 {
                return Err(Error::UndefinedPhase(format!(
                    "flash at {:?} coincides with a grid node",
                    flash.position
                )));
            }
            v.push(if scale == 0.0 { 0.0 } else { scale * law.value(d) });
        }
        values.push(v);
    }
    Ok(PhaseProfile {
        flash: flash.clone(),
        pair_scales,
        smearing: params.smearing,
        softening,
        values,
        grids: grids.to_vec(),
    })
}

/// Multiplies `psi` by `exp(i sum_l phase_l(x_l))`.
pub fn apply_gravitational_kick(psi: &WaveFunction, profile: &PhaseProfile) -> Result<WaveFunction> {
    let mut out = psi.clone();
    kick_in_place(&mut out, profile)?;
    Ok(out)
}

pub fn kick_in_place(psi: &mut WaveFunction, profile: &PhaseProfile) -> Result<()> {
    if psi.grids() != profile.grids() {
        return Err(Error::GridMismatch("phase profile and state grids differ".into()));
    }
    if profile.is_trivial() {
        return Ok(());
    }
    let n = psi.n_particles();
    let strides: Vec<usize> = (0..n).map(|l| psi.particle_stride(l)).collect();
    let p = psi.points_per_particle();
    for (idx, a) in psi.amplitudes_mut().iter_mut().enumerate() {
        let phase: f64 = (0..n).map(|l| profile.values[l][(idx / strides[l]) % p]).sum();
        *a *= Complex64::from_polar(1.0, phase);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::GaussianPacket;

    fn flash(k: usize, x: Vec<f64>) -> FlashEvent {
        FlashEvent {
            time: 0.0,
            particle: k,
            position: x,
        }
    }

    #[test]
    fn zero_g_gives_zero_phase() {
        let g = GridSpec::centered(1, 16, 0.25, 0.0).unwrap();
        let mut params = PhysicalParams::dimensionless(1.0, 0.1, 1.0, 2);
        params.g = 0.0;
        let prof = phase_profile(&[g.clone(), g], &flash(0, vec![0.1]), &params, 0.1).unwrap();
        assert!(prof.values.iter().flatten().all(|&v| v == 0.0));
        assert!(prof.is_trivial());
    }

    #[test]
    fn bare_law_gives_one_radian_at_r_g() {
        let r_g = 0.5;
        let g = GridSpec::new(3, 4, 0.5, vec![0.0; 3]).unwrap();
        let params = PhysicalParams::dimensionless(1.0, r_g, 1.0, 1);
        let prof = phase_profile(std::slice::from_ref(&g), &flash(0, vec![0.0, 0.0, 0.0]), &params, 0.0);
        assert!(matches!(prof, Err(Error::UndefinedPhase(_))));
        let prof = phase_profile(std::slice::from_ref(&g), &flash(0, vec![-0.5, 0.0, 0.0]), &params, 0.0).unwrap();
        // Node 0 sits at the origin, a distance r_G from the flash.
        assert!((prof.values[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smeared_coincident_limit() {
        let w = 0.7;
        let g = GridSpec::centered(1, 9, 0.25, 0.0).unwrap();
        let mut params = PhysicalParams::dimensionless(1.0, 0.3, 1.0, 1);
        params.smearing = SmearingMode::Gaussian { width: w };
        let prof = phase_profile(&[g], &flash(0, vec![0.0]), &params, 0.0).unwrap();
        let want = 0.3 * 2.0 / (PI.sqrt() * w);
        assert!((prof.values[0][4] - want).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_harness_needs_softening() {
        let g = GridSpec::centered(1, 9, 0.25, 0.0).unwrap();
        let params = PhysicalParams::dimensionless(1.0, 0.3, 1.0, 1);
        assert!(phase_profile(&[g], &flash(0, vec![0.3]), &params, 0.0).is_err());
    }

    #[test]
    fn kick_is_unitary_and_diagonal() {
        let g = GridSpec::centered(1, 32, 0.25, 0.0).unwrap();
        let grids = vec![g.clone(), g.shifted(1.0)];
        let psi = WaveFunction::gaussian_packets(
            grids.clone(),
            &[
                GaussianPacket::at_rest(vec![0.0], 0.8),
                GaussianPacket::at_rest(vec![1.0], 0.9),
            ],
        )
        .unwrap();
        let params = PhysicalParams::dimensionless(1.0, 0.7, 1.0, 2);
        let prof = phase_profile(&grids, &flash(1, vec![0.4]), &params, 0.125).unwrap();
        let out = apply_gravitational_kick(&psi, &prof).unwrap();
        assert!((out.norm() - psi.norm()).abs() < 1e-14);
        for k in 0..2 {
            let a = psi.position_density(k).unwrap();
            let b = out.position_density(k).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14));
        }
        assert!(out != psi);
    }

    #[test]
    fn kick_rejects_other_grids() {
        let g = GridSpec::centered(1, 16, 0.25, 0.0).unwrap();
        let params = PhysicalParams::dimensionless(1.0, 0.7, 1.0, 1);
        let prof = phase_profile(std::slice::from_ref(&g), &flash(0, vec![0.1]), &params, 0.1).unwrap();
        let psi = WaveFunction::gaussian_packets(
            vec![g.shifted(0.5)],
            &[GaussianPacket::at_rest(vec![0.5], 0.8)],
        )
        .unwrap();
        assert!(matches!(
            apply_gravitational_kick(&psi, &prof),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn smeared_potential_values() {
        assert!((smeared_newton_potential(10.0, 1.0) - 0.1).abs() < 1e-8 * 0.1);
        assert!((smeared_newton_potential(0.0, 1.0) - 2.0 / PI.sqrt()).abs() < 1e-15);
        assert!((smeared_newton_potential(1.0, 1.0) - 0.842_700_792_949_714_9).abs() < 1e-12);
        // Continuity across the series switch.
        let a = smeared_newton_potential(0.999_999e-4, 1.0);
        let b = smeared_newton_potential(1.000_001e-4, 1.0);
        assert!((a - b).abs() < 1e-12);
    }
}
