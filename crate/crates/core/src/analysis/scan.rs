//! Decoherence rate at fixed separation across collapse rates.

use std::io::Write;

use super::kernel::{gamma_at_separation, KernelModel, QuadratureSpec};
use crate::exec::{map_slice, Execution};
use crate::units::PhysicalParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub separation: f64,
    pub r_c: f64,
    pub lambda_grid: Vec<f64>,
    /// `r_G` at each `lambda`.
    pub r_g: Vec<f64>,
    /// Total rate `lambda (1 - Re Gamma)`.
    pub rates: Vec<f64>,
    /// `lambda (1 - exp(-s^2 / 4 r_C^2))`.
    pub intrinsic: Vec<f64>,
    /// Gravitational excess.
    pub excess: Vec<f64>,
    /// Error bound of the excess (and of the total).
    pub errors: Vec<f64>,
}

impl ScanResult {
    /// Least-squares exponent of `excess` against `lambda` over the rows
    /// `range`.
    pub fn excess_exponent(&self, range: std::ops::Range<usize>) -> Result<f64> {
        let pts: Vec<(f64, f64)> = range
            .filter(|&i| self.excess[i] > self.errors[i])
            .map(|i| (self.lambda_grid[i].ln(), self.excess[i].ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidInput(
                "fewer than two rows with a resolved excess".into(),
            ));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Ok(sxy / sxx)
    }

    pub fn write_csv<W: Write>(&self, params_hash: &str, mut w: W) -> Result<()> {
        writeln!(w, "# params_hash={params_hash} separation={} r_c={}", self.separation, self.r_c)?;
        writeln!(w, "lambda,r_g,rate,intrinsic,excess,error")?;
        for i in 0..self.lambda_grid.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                self.lambda_grid[i], self.r_g[i], self.rates[i], self.intrinsic[i], self.excess[i], self.errors[i]
            )?;
        }
        Ok(())
    }
}

/// Scans `lambda_grid` at fixed `G`, masses and `r_C`; `r_G` follows
/// `G m^2 / (hbar lambda)`.
pub fn falsifiability_scan(
    separation: f64,
    r_c: f64,
    lambda_grid: &[f64],
    template: &PhysicalParams,
    spec: &QuadratureSpec,
    exec: Execution,
) -> Result<ScanResult> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    if lambda_grid.iter().any(|&l| !(l > 0.0)) || lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be positive and increasing".into()));
    }
    if !(separation > 0.0) {
        return Err(Error::InvalidInput(format!("separation must be positive, got {separation}")));
    }
    let rows = map_slice(exec, lambda_grid, |&lambda| {
        let mut p = template.clone();
        p.lambda = lambda;
        p.r_c = r_c;
        let model = KernelModel::from_params(&p, 0.0, 3)?;
        let v = gamma_at_separation(separation, &model, spec)?;
        let intrinsic = lambda * (1.0 - (-separation * separation / (4.0 * r_c * r_c)).exp());
        Ok((
            model.r_g,
            lambda * (1.0 - v.value.re),
            intrinsic,
            lambda * v.deficit.re,
            lambda * v.error,
        ))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        separation,
        r_c,
        lambda_grid: lambda_grid.to_vec(),
        r_g: rows.iter().map(|r| r.0).collect(),
        rates: rows.iter().map(|r| r.1).collect(),
        intrinsic: rows.iter().map(|r| r.2).collect(),
        excess: rows.iter().map(|r| r.3).collect(),
        errors: rows.iter().map(|r| r.4).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excess_falls_as_inverse_lambda() {
        // r_G = 1e-4 at lambda = 1.
        let template = PhysicalParams::dimensionless(1.0, 1e-4, 1.0, 1);
        let grid = [0.5, 1.0, 2.0, 4.0];
        let scan = falsifiability_scan(0.05, 1.0, &grid, &template, &QuadratureSpec::default(), Execution::Parallel).unwrap();
        let p = scan.excess_exponent(0..4).unwrap();
        assert!((p + 1.0).abs() < 0.05, "{p}");
        assert!(scan.intrinsic.windows(2).all(|w| w[1] >= w[0]));
        let mut out = Vec::new();
        scan.write_csv("abc", &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 6);
    }

    #[test]
    fn zero_coupling_has_no_excess() {
        let mut template = PhysicalParams::dimensionless(1.0, 0.0, 1.0, 1);
        template.g = 0.0;
        let scan = falsifiability_scan(0.5, 1.0, &[1.0, 10.0], &template, &QuadratureSpec::default(), Execution::Sequential).unwrap();
        assert!(scan.excess.iter().zip(&scan.errors).all(|(e, err)| e.abs() <= *err));
        assert!(falsifiability_scan(0.5, 1.0, &[2.0, 1.0], &template, &QuadratureSpec::default(), Execution::Sequential).is_err());
    }
}
