use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform Cartesian grid for one particle.
///
/// Nodes sit at `origin[a] + i * spacing` for `i in 0..n_points`; each node
/// is the centre of a cell of width `spacing`, so the grid covers
/// `[origin - spacing/2, origin + (n_points - 1/2) spacing]` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n_points: usize,
    pub spacing: f64,
    pub origin: Vec<f64>,
}

impl GridSpec {
    pub fn new(dim: usize, n_points: usize, spacing: f64, origin: Vec<f64>) -> Result<Self> {
        let g = GridSpec {
            dim,
            n_points,
            spacing,
            origin,
        };
        g.check()?;
        Ok(g)
    }

    /// Grid whose nodes are symmetric about `center` along every axis.
    pub fn centered(dim: usize, n_points: usize, spacing: f64, center: f64) -> Result<Self> {
        let half = (n_points as f64 - 1.0) * spacing / 2.0;
        Self::new(dim, n_points, spacing, vec![center - half; dim])
    }

    pub fn check(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 3, got {}", self.dim)));
        }
        if self.n_points < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 points per axis, got {}",
                self.n_points
            )));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if self.origin.len() != self.dim {
            return Err(Error::InvalidGrid(format!(
                "origin has {} components for a {}-dimensional grid",
                self.origin.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Number of nodes for one particle, `n_points^dim`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell volume `spacing^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// Coordinate of node `i` along `axis`.
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing
    }

    /// Lower and upper edge of the grid along `axis`.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        let lo = self.origin[axis] - 0.5 * self.spacing;
        (lo, lo + self.extent())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter().enumerate().all(|(a, &v)| {
                let (lo, hi) = self.bounds(a);
                v >= lo && v <= hi
            })
    }

    /// Per-axis indices of a flat node index (axis 0 slowest).
    pub fn unflatten(&self, mut p: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = p % self.n_points;
            p /= self.n_points;
        }
    }

    /// Coordinates of the flat node `p`.
    pub fn node(&self, p: usize) -> Vec<f64> {
        let mut idx = [0usize; 3];
        self.unflatten(p, &mut idx[..self.dim]);
        (0..self.dim).map(|a| self.axis_coord(a, idx[a])).collect()
    }

    /// Coordinates of every node, flattened `[x0, y0, z0, x1, ...]`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.dim);
        for p in 0..self.len() {
            out.extend(self.node(p));
        }
        out
    }

    /// Same grid with the origin moved by `offset` along every axis.
    pub fn shifted(&self, offset: f64) -> GridSpec {
        GridSpec {
            origin: self.origin.iter().map(|o| o + offset).collect(),
            ..self.clone()
        }
    }

    /// Same point count, spacing and dimension.
    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.dim == other.dim && self.n_points == other.n_points && self.spacing == other.spacing
    }

    /// Angular wavenumbers of the discrete Fourier modes in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = 2.0 * std::f64::consts::PI / self.extent();
        (0..n)
            .map(|j| {
                let m = if j < (n + 1) / 2 { j } else { j - n };
                m as f64 * dk
            })
            .collect()
    }
}

/// Checks that a set of per-particle grids shares one shape.
pub(crate) fn check_grids(grids: &[GridSpec]) -> Result<()> {
    let first = grids
        .first()
        .ok_or_else(|| Error::InvalidGrid("at least one particle is required".into()))?;
    for g in grids {
        g.check()?;
        if !g.same_shape(first) {
            return Err(Error::InvalidGrid(
                "all particle grids must share dimension, point count and spacing".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::new(1, 3, 0.1, vec![0.0]).is_err());
        assert!(GridSpec::new(2, 8, 0.1, vec![0.0, 0.0]).is_err());
        assert!(GridSpec::new(1, 8, 0.0, vec![0.0]).is_err());
        assert!(GridSpec::new(3, 8, 0.1, vec![0.0]).is_err());
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = GridSpec::centered(1, 8, 0.5, 0.0).unwrap();
        assert_eq!(g.axis_coord(0, 0), -1.75);
        assert_eq!(g.axis_coord(0, 7), 1.75);
        assert_eq!(g.bounds(0), (-2.0, 2.0));
        assert_eq!(g.extent(), 4.0);
    }

    #[test]
    fn node_layout_axis0_slowest() {
        let g = GridSpec::new(3, 4, 1.0, vec![0.0; 3]).unwrap();
        assert_eq!(g.node(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(g.node(4), vec![0.0, 1.0, 0.0]);
        assert_eq!(g.node(16), vec![1.0, 0.0, 0.0]);
        assert_eq!(g.len(), 64);
    }

    #[test]
    fn wavenumbers_are_symmetric() {
        let g = GridSpec::centered(1, 8, 0.25, 0.0).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert!((k[1] + k[7]).abs() < 1e-12);
        assert!(k[4] < 0.0);
    }
}
