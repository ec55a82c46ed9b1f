//! Classical limit: force on a test particle from pinned lumps.

use std::f64::consts::PI;

use libm::erf;

use crate::units::PhysicalParams;
use crate::{Error, Result};

/// Smallest allowed distance to a lump, in units of `r_C`.
const MIN_DISTANCE: f64 = 1e-3;

/// `d/dd [erf(d/r)/d]`.
fn smeared_derivative(d: f64, r: f64) -> f64 {
    let u = d / r;
    2.0 / (PI.sqrt() * r) * (-u * u).exp() / d - erf(u) / (d * d)
}

/// `-grad V` at `test_position` with
/// `V = -sum_k G m_0 m_k erf(|x_0 - r_k| / r_C) / |x_0 - r_k|`.
///
/// Particle 0 is the test particle; `lump_positions[k - 1]` holds particle
/// `k`.
pub fn classical_limit_force(
    test_position: &[f64],
    lump_positions: &[Vec<f64>],
    params: &PhysicalParams,
) -> Result<Vec<f64>> {
    params.check()?;
    if lump_positions.len() + 1 != params.n_particles() {
        return Err(Error::InvalidInput(format!(
            "{} lumps for {} particles",
            lump_positions.len(),
            params.n_particles()
        )));
    }
    let r = params.r_c;
    let mut force = vec![0.0; test_position.len()];
    for (k, lump) in lump_positions.iter().enumerate() {
        if lump.len() != test_position.len() {
            return Err(Error::InvalidInput("lump and test positions differ in dimension".into()));
        }
        let delta: Vec<f64> = test_position.iter().zip(lump).map(|(a, b)| a - b).collect();
        let d = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if d <= MIN_DISTANCE * r {
            return Err(Error::InvalidInput(format!(
                "test particle within {MIN_DISTANCE} r_C of lump {}",
                k + 1
            )));
        }
        let coupling = params.g * params.masses[0] * params.masses[k + 1];
        let scale = coupling * smeared_derivative(d, r) / d;
        for (f, v) in force.iter_mut().zip(&delta) {
            *f += scale * v;
        }
    }
    Ok(force)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::smeared_newton_potential;

    #[test]
    fn far_field_is_newtonian() {
        let params = PhysicalParams::dimensionless(1.0, 0.5, 2.0, 2);
        let f = classical_limit_force(&[0.0, 0.0, 0.0], &[vec![10.0, 0.0, 0.0]], &params).unwrap();
        let want = params.g * 4.0 / 100.0;
        assert!((f[0] - want).abs() < 1e-4 * want);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn symmetric_pair_cancels_transverse() {
        let params = PhysicalParams::dimensionless(1.0, 0.5, 1.0, 3);
        let f = classical_limit_force(&[0.0, 0.0, 0.0], &[vec![1.0, 2.0, 0.0], vec![1.0, -2.0, 0.0]], &params).unwrap();
        assert!(f[1].abs() < 1e-12 && f[2].abs() < 1e-12);
        assert!(f[0] > 0.0);
    }

    #[test]
    fn matches_finite_difference() {
        let params = PhysicalParams::dimensionless(1.0, 0.5, 1.0, 2);
        let f = classical_limit_force(&[0.0], &[vec![1.0]], &params).unwrap();
        let h = 1e-4;
        let v = |x: f64| -params.g * smeared_newton_potential((x - 1.0).abs(), 1.0);
        let fd = -(v(h) - v(-h)) / (2.0 * h);
        assert!((f[0] - fd).abs() < 1e-6);
        assert!(classical_limit_force(&[1.0], &[vec![1.0]], &params).is_err());
    }
}
