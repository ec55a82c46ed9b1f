//! Newtonian potential of a Gaussian-smeared flash, by quadrature.

use std::f64::consts::PI;

use crate::gravity::smeared_newton_potential;
use crate::quadrature::{integrate, Tolerance};
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// One line of the potential table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialRow {
    pub d: f64,
    /// `int dx_f g(x_f) / |d e - x_f|`, `g` the normalised collapse Gaussian.
    pub quadrature: f64,
    pub error: f64,
    /// `erf(d / r_C) / d`.
    pub closed_form: f64,
    pub relative_error: f64,
    /// `|d * closed_form - 1|`: departure from the bare law.
    pub bare_deviation: f64,
}

impl PotentialRow {
    /// True when the smeared law differs from `1/d` by more than 1%.
    pub fn breaks_newton(&self) -> bool {
        self.bare_deviation > 0.01
    }
}

/// Smeared potential in spherical coordinates about the evaluation point:
/// `int 2 pi v dv int dc g(|d e + v c|)`.
fn smeared_by_quadrature(d: f64, r: f64) -> Result<(f64, f64)> {
    let norm = (PI * r * r).powf(-1.5);
    let big = d + 10.0 * r;
    let mut bp = vec![0.0, big];
    for m in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        let v = d + m * r;
        if v > 0.0 && v < big {
            bp.push(v);
        }
    }
    bp.sort_by(f64::total_cmp);
    let tol = [Tolerance::new(0.0, 1e-12)];
    let mut inner_err = 0.0f64;
    let mut failed = false;
    let outer = integrate(
        |v, out| {
            let r2 = |c: f64| d * d + v * v + 2.0 * d * v * c;
            let res = integrate(
                |c, o| o[0] = norm * (-r2(c) / (r * r)).exp(),
                &[-1.0, 0.0, 1.0],
                &tol,
                200,
            );
            failed |= !res.converged;
            inner_err = inner_err.max(res.error[0] * 2.0 * PI * v);
            out[0] = 2.0 * PI * v * res.value[0];
        },
        &bp,
        &tol,
        500,
    );
    if !outer.converged || failed {
        return Err(Error::Quadrature(format!("smeared potential at d = {d} did not converge")));
    }
    // Flash mass beyond `big` is below exp(-100).
    let error = outer.error[0] + inner_err * big;
    Ok((outer.value[0], error))
}

/// Compares the quadrature of the smeared potential with its closed form.
pub fn effective_potential_check(d_values: &[f64], params: &PhysicalParams) -> Result<Vec<PotentialRow>> {
    let r = params.r_c;
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("r_c must be positive, got {r}")));
    }
    d_values
        .iter()
        .map(|&d| {
            if !(d > 0.0) {
                return Err(Error::InvalidInput(format!("distance must be positive, got {d}")));
            }
            let (quadrature, error) = smeared_by_quadrature(d, r)?;
            let closed_form = smeared_newton_potential(d, r);
            Ok(PotentialRow {
                d,
                quadrature,
                error,
                closed_form,
                relative_error: (quadrature - closed_form).abs() / closed_form,
                bare_deviation: (d * closed_form - 1.0).abs(),
            })
        })
        .collect()
}
