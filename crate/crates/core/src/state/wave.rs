use num_complex::Complex64;
use libm::erfc;

use super::grid::{check_grids, GridSpec};
use crate::{Error, Result};

/// Boundary mass above which a warning is logged.
pub const BOUNDARY_MASS_WARNING: f64 = 1e-6;

/// Complex amplitudes of an `N`-particle state on a tensor product grid.
///
/// Particle `k` lives on `grids[k]`. Amplitudes are stored with particle 0
/// slowest, and within a particle axis 0 slowest. The norm is the Riemann
/// sum `sum |psi|^2 * dV` with `dV = spacing^(dim N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grids: Vec<GridSpec>,
    amplitudes: Vec<Complex64>,
}

/// One factor of a product Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket {
    pub center: Vec<f64>,
    pub width: f64,
    pub momentum: Vec<f64>,
}

impl GaussianPacket {
    pub fn at_rest(center: Vec<f64>, width: f64) -> Self {
        let momentum = vec![0.0; center.len()];
        GaussianPacket {
            center,
            width,
            momentum,
        }
    }
}

impl WaveFunction {
    pub fn new(grids: Vec<GridSpec>, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_grids(&grids)?;
        let expected = grids[0].len().pow(grids.len() as u32);
        if amplitudes.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        Ok(WaveFunction { grids, amplitudes })
    }

    pub fn zeros(grids: Vec<GridSpec>) -> Result<Self> {
        check_grids(&grids)?;
        let n = grids[0].len().pow(grids.len() as u32);
        Ok(WaveFunction {
            grids,
            amplitudes: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    /// Samples `f` at every node; `f` receives the concatenated coordinates
    /// of all particles.
    pub fn from_fn<F>(grids: Vec<GridSpec>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let mut psi = Self::zeros(grids)?;
        let dim = psi.dim();
        let n = psi.n_particles();
        let mut coords = vec![0.0; dim * n];
        for idx in 0..psi.amplitudes.len() {
            for k in 0..n {
                let node = psi.grids[k].node(psi.particle_node(idx, k));
                coords[k * dim..(k + 1) * dim].copy_from_slice(&node);
            }
            psi.amplitudes[idx] = f(&coords);
        }
        Ok(psi)
    }

    /// Normalised product of Gaussian packets, one per particle.
    ///
    /// Each packet is `exp(-(x-c)^2 / (2 w^2) + i k.x)` per axis, so its
    /// position variance is `w^2 / 2` per axis.
    pub fn gaussian_packets(grids: Vec<GridSpec>, packets: &[GaussianPacket]) -> Result<Self> {
        check_grids(&grids)?;
        if packets.len() != grids.len() {
            return Err(Error::InvalidInput(format!(
                "{} packets for {} particles",
                packets.len(),
                grids.len()
            )));
        }
        let dim = grids[0].dim;
        let mut leak = 0.0;
        for (g, p) in grids.iter().zip(packets) {
            if p.center.len() != dim || p.momentum.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "packet centre and momentum need {dim} components"
                )));
            }
            if p.width < 2.0 * g.spacing {
                return Err(Error::InvalidInput(format!(
                    "packet width {} is under-resolved (spacing {})",
                    p.width, g.spacing
                )));
            }
            for a in 0..dim {
                let (lo, hi) = g.bounds(a);
                let c = p.center[a];
                if c <= lo || c >= hi {
                    return Err(Error::InvalidInput(format!(
                        "packet centre {c} outside grid [{lo}, {hi}]"
                    )));
                }
                leak += 0.5 * erfc((c - lo) / p.width) + 0.5 * erfc((hi - c) / p.width);
            }
        }
        if leak >= 1e-8 {
            log::warn!("packet tails past the grid boundary carry mass {leak:e}");
        }

        // Per-particle factor tables, then the tensor product.
        let factors: Vec<Vec<Complex64>> = grids
            .iter()
            .zip(packets)
            .map(|(g, p)| {
                (0..g.len())
                    .map(|node| {
                        let x = g.node(node);
                        let mut re = 0.0;
                        let mut ph = 0.0;
                        for a in 0..dim {
                            let d = x[a] - p.center[a];
                            re -= d * d / (2.0 * p.width * p.width);
                            ph += p.momentum[a] * x[a];
                        }
                        Complex64::from_polar(re.exp(), ph)
                    })
                    .collect()
            })
            .collect();
        let mut psi = Self::zeros(grids)?;
        for idx in 0..psi.amplitudes.len() {
            let mut v = Complex64::new(1.0, 0.0);
            for (k, f) in factors.iter().enumerate() {
                v *= f[psi.particle_node(idx, k)];
            }
            psi.amplitudes[idx] = v;
        }
        psi.normalize()
    }

    /// Weighted sum of states on identical grids (not normalised).
    pub fn superpose(terms: &[(Complex64, &WaveFunction)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty superposition".into()))?;
        let mut out = Self::zeros(first.grids.clone())?;
        for (c, psi) in terms {
            out.check_same_grid(psi)?;
            for (o, a) in out.amplitudes.iter_mut().zip(&psi.amplitudes) {
                *o += c * a;
            }
        }
        Ok(out)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grids[0]
    }

    pub fn grids(&self) -> &[GridSpec] {
        &self.grids
    }

    pub fn particle_grid(&self, k: usize) -> Result<&GridSpec> {
        self.grids.get(k).ok_or(Error::ParticleIndex {
            index: k,
            count: self.grids.len(),
        })
    }

    pub fn n_particles(&self) -> usize {
        self.grids.len()
    }

    pub fn dim(&self) -> usize {
        self.grids[0].dim
    }

    /// Nodes per particle.
    pub fn points_per_particle(&self) -> usize {
        self.grids[0].len()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Volume element of the full configuration space.
    pub fn volume_element(&self) -> f64 {
        self.grids[0].cell_volume().powi(self.grids.len() as i32)
    }

    /// Stride of particle `k` in the flat amplitude index.
    pub fn particle_stride(&self, k: usize) -> usize {
        self.points_per_particle()
            .pow((self.grids.len() - 1 - k) as u32)
    }

    /// Node index of particle `k` in the flat amplitude index `idx`.
    #[inline]
    pub fn particle_node(&self, idx: usize, k: usize) -> usize {
        (idx / self.particle_stride(k)) % self.points_per_particle()
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.grids.len() {
            Err(Error::ParticleIndex {
                index: k,
                count: self.grids.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn check_same_grid(&self, other: &WaveFunction) -> Result<()> {
        if self.grids != other.grids {
            return Err(Error::GridMismatch("states live on different grids".into()));
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.volume_element()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales the state to unit norm.
    pub fn normalize(mut self) -> Result<Self> {
        self.normalize_in_place()?;
        Ok(self)
    }

    pub fn normalize_in_place(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 1e-14) || !n.is_finite() {
            return Err(Error::NullState(n));
        }
        let s = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    /// Marginal position density of particle `k` on its grid.
    pub fn position_density(&self, k: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        let p = self.points_per_particle();
        let stride = self.particle_stride(k);
        let mut out = vec![0.0; p];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            out[(idx / stride) % p] += a.norm_sqr();
        }
        // Weight by the volume of every other particle.
        let others = self.grids[0]
            .cell_volume()
            .powi(self.grids.len() as i32 - 1);
        out.iter_mut().for_each(|v| *v *= others);
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

    /// Largest probability, over particles, of sitting within `cells` nodes
    /// of a grid edge.
    pub fn boundary_mass(&self, cells: usize) -> f64 {
        let g = &self.grids[0];
        let mut worst: f64 = 0.0;
        let mut idx = [0usize; 3];
        for k in 0..self.n_particles() {
            let rho = self.position_density(k).unwrap_or_default();
            let mut m = 0.0;
            for (node, w) in rho.iter().enumerate() {
                g.unflatten(node, &mut idx[..g.dim]);
                if idx[..g.dim]
                    .iter()
                    .any(|&i| i < cells || i + cells >= g.n_points)
                {
                    m += w * g.cell_volume();
                }
            }
            worst = worst.max(m);
        }
        worst
    }

    /// Logs a warning when more than [`BOUNDARY_MASS_WARNING`] sits within
    /// three cells of an edge. Returns the measured mass.
    pub fn check_boundary(&self) -> f64 {
        let m = self.boundary_mass(3);
        if m > BOUNDARY_MASS_WARNING {
            log::warn!("wavefunction mass {m:e} within 3 cells of the grid boundary");
        }
        m
    }

    /// Amplitudes rescaled to orthonormal-basis coefficients (`psi * sqrt(dV)`).
    pub fn basis_coefficients(&self) -> Vec<Complex64> {
        let s = self.volume_element().sqrt();
        self.amplitudes.iter().map(|a| a * s).collect()
    }

    /// Inner product `<self|other>` with the Riemann volume element.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.volume_element())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, h: f64) -> GridSpec {
        GridSpec::centered(1, n, h, 0.0).unwrap()
    }

    #[test]
    fn packet_is_normalized_and_centered() {
        let psi = WaveFunction::gaussian_packets(
            vec![line(128, 0.125)],
            &[GaussianPacket::at_rest(vec![0.0], 1.0)],
        )
        .unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-10);
        assert!(psi.expectation_position(0).unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn packet_variance_matches_closed_form() {
        // Oracle: sum of x^2 exp(-x^2/w^2) over the same nodes, normalised.
        let g = line(256, 0.0625);
        let w = 1.3;
        let psi = WaveFunction::gaussian_packets(
            vec![g.clone()],
            &[GaussianPacket::at_rest(vec![0.0], w)],
        )
        .unwrap();
        let rho = psi.position_density(0).unwrap();
        let var: f64 = rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * g.spacing * g.axis_coord(0, i).powi(2))
            .sum();
        assert!((var / (w * w / 2.0) - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn shifted_packet_shifts_mean() {
        let g = line(256, 0.0625);
        let a = WaveFunction::gaussian_packets(
            vec![g.clone()],
            &[GaussianPacket::at_rest(vec![0.3], 0.7)],
        )
        .unwrap();
        let b = WaveFunction::gaussian_packets(
            vec![g.clone()],
            &[GaussianPacket::at_rest(vec![0.3 + 1.25], 0.7)],
        )
        .unwrap();
        let ma = a.expectation_position(0).unwrap()[0];
        let mb = b.expectation_position(0).unwrap()[0];
        assert!((ma - 0.3).abs() < g.spacing / 10.0);
        assert!((mb - ma - 1.25).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_packets() {
        let g = line(64, 0.25);
        assert!(WaveFunction::gaussian_packets(
            vec![g.clone()],
            &[GaussianPacket::at_rest(vec![0.0], 0.3)]
        )
        .is_err());
        assert!(WaveFunction::gaussian_packets(
            vec![g.clone()],
            &[GaussianPacket::at_rest(vec![9.0], 1.0)]
        )
        .is_err());
    }

    #[test]
    fn normalize_scaled_and_null() {
        let g = line(32, 0.5);
        let psi = WaveFunction::gaussian_packets(
            vec![g.clone()],
            &[GaussianPacket::at_rest(vec![0.0], 1.5)],
        )
        .unwrap();
        let mut scaled = psi.clone();
        scaled.amplitudes_mut().iter_mut().for_each(|a| *a *= 3.0);
        let back = scaled.normalize().unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        let again = psi.clone().normalize().unwrap();
        for (a, b) in again.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        let zero = WaveFunction::zeros(vec![g]).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::NullState(_))));
    }

    #[test]
    fn marginals_of_entangled_state_match_direct_sum() {
        let g = GridSpec::centered(1, 8, 0.5, 0.0).unwrap();
        let psi = WaveFunction::from_fn(vec![g.clone(), g.clone()], |x| {
            Complex64::new((x[0] - x[1]).cos() + 0.1 * x[0], x[0] * x[1] * 0.3)
        })
        .unwrap()
        .normalize()
        .unwrap();
        let a = psi.amplitudes();
        for k in 0..2 {
            let rho = psi.position_density(k).unwrap();
            for i in 0..8 {
                let mut direct = 0.0;
                for j in 0..8 {
                    let idx = if k == 0 { i * 8 + j } else { j * 8 + i };
                    direct += a[idx].norm_sqr() * 0.5;
                }
                assert!((rho[i] - direct).abs() < 1e-14);
            }
            assert!((rho.iter().sum::<f64>() * 0.5 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn even_state_has_zero_mean() {
        let g = line(64, 0.25);
        let psi = WaveFunction::from_fn(vec![g], |x| {
            Complex64::new((-(x[0] - 2.0).powi(2)).exp() + (-(x[0] + 2.0).powi(2)).exp(), 0.0)
        })
        .unwrap()
        .normalize()
        .unwrap();
        assert!(psi.expectation_position(0).unwrap()[0].abs() < 1e-10);
        let rho = psi.position_density(0).unwrap();
        for i in 0..64 {
            assert!((rho[i] - rho[63 - i]).abs() < 1e-12);
        }
    }
}
