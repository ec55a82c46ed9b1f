//! Short-distance behaviour of the gravitational excess decoherence rate.

use std::f64::consts::PI;

use super::kernel::{gamma_at_separation, KernelModel, QuadratureSpec};
use crate::exec::{map_slice, Execution};
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// Largest `r_G / s` for which the excess is treated as second order in
/// `r_G`. Above it the region `|x_f - x| < r_G`, where the phase exceeds a
/// radian, contributes at the level of the quoted accuracy.
pub const REGIME_RATIO: f64 = 0.05;
/// Largest separation, in units of `r_C`, treated as short distance.
const SHORT_DISTANCE: f64 = 0.1;

/// Least-squares fit of the excess rate against separation.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub separations: Vec<f64>,
    pub excess: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `lambda r_G^2 / (sqrt(pi) r_C^3)`.
    pub predicted: f64,
    /// `slope / predicted - 1`.
    pub relative_deviation: f64,
}

/// Checks that every separation is short and in the linear-response regime.
pub fn check_regime(r_g: f64, r_c: f64, separations: &[f64]) -> Result<()> {
    for &s in separations {
        if !(s > 0.0) {
            return Err(Error::Regime(format!("separation must be positive, got {s}")));
        }
        if s > SHORT_DISTANCE * r_c {
            return Err(Error::Regime(format!(
                "separation {s} exceeds {SHORT_DISTANCE} r_C = {}",
                SHORT_DISTANCE * r_c
            )));
        }
        if r_g > REGIME_RATIO * s {
            return Err(Error::Regime(format!(
                "r_G / s = {:.3e} exceeds {REGIME_RATIO} at s = {s}",
                r_g / s
            )));
        }
    }
    Ok(())
}

/// Gravitational excess `lambda (1 - Re Gamma) - lambda (1 - Re Gamma|_{r_G=0})`
/// and its error bound at separation `s`.
pub fn excess_rate(s: f64, model: &KernelModel, lambda: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let v = gamma_at_separation(s, model, spec)?;
    Ok((lambda * v.deficit.re, lambda * v.deficit_error))
}

fn model_for(params: &PhysicalParams) -> Result<KernelModel> {
    KernelModel::from_params(params, 0.0, 3)
}

/// Fits the excess rate of particle 0 against `separations`.
pub fn short_distance_rate(
    params: &PhysicalParams,
    separations: &[f64],
    spec: &QuadratureSpec,
    exec: Execution,
) -> Result<SlopeFit> {
    if separations.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 separations, got {}",
            separations.len()
        )));
    }
    let model = model_for(params)?;
    check_regime(model.r_g, model.r_c, separations)?;
    let rows = map_slice(exec, separations, |&s| excess_rate(s, &model, params.lambda, spec));
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let (excess, errors): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();

    let n = separations.len() as f64;
    let mx = separations.iter().sum::<f64>() / n;
    let my = excess.iter().sum::<f64>() / n;
    let sxx: f64 = separations.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = separations.iter().zip(&excess).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = excess.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    let predicted = params.lambda * model.r_g * model.r_g / (PI.sqrt() * model.r_c.powi(3));
    let relative_deviation = if predicted > 0.0 { slope / predicted - 1.0 } else { f64::NAN };
    Ok(SlopeFit {
        separations: separations.to_vec(),
        excess,
        errors,
        slope,
        intercept,
        r_squared,
        predicted,
        relative_deviation,
    })
}

/// Scaling exponent of the excess rate in `lambda`, comparing `lambda` with
/// `lambda * factor` at fixed `G`, masses and `r_C` (so `r_G` scales as
/// `1 / lambda`).
pub fn inverse_lambda_check(
    params: &PhysicalParams,
    separation: f64,
    factor: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(factor > 0.0) || factor == 1.0 {
        return Err(Error::InvalidInput(format!(
            "the exponent is 0/0 for factor {factor}; use a factor other than 1"
        )));
    }
    if params.g == 0.0 {
        return Err(Error::InvalidInput("no gravitational excess: G = 0".into()));
    }
    let mut scaled = params.clone();
    scaled.lambda *= factor;
    let mut rates = [0.0; 2];
    for (rate, p) in rates.iter_mut().zip([params, &scaled]) {
        let model = model_for(p)?;
        check_regime(model.r_g, model.r_c, &[separation])?;
        let (e, err) = excess_rate(separation, &model, p.lambda, spec)?;
        if !(e > err) {
            return Err(Error::Quadrature(format!(
                "excess {e:e} not resolved above its error {err:e}"
            )));
        }
        *rate = e;
    }
    Ok((rates[1] / rates[0]).ln() / factor.ln())
}
