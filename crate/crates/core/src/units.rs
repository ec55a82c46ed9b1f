//! Model parameters, unit conversion and the gravitational length scale.
//!
//! Working units fix `hbar = 1` and `r_C = 1`; `lambda`, the masses and `G`
//! stay free, so the only physics left is in dimensionless ratios such as
//! `eps = r_G / r_C` and `lambda * T`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// CODATA 2018 constants in SI units.
pub mod codata2018 {
    pub const G: f64 = 6.674_30e-11;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
}

/// Flash rate commonly quoted for the GRW model, in s^-1.
pub const LITERATURE_LAMBDA: f64 = 1e-16;
/// Collapse width commonly quoted for the GRW model, in m.
pub const LITERATURE_R_C: f64 = 1e-7;

/// Spatial profile of the flash source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
#[derive(Default)]
pub enum SmearingMode {
    /// Point source: the potential of a flash is `1/r`.
    #[default]
    Sharp,
    /// Gaussian source of width `width`: the potential is `erf(r/w)/r`.
    Gaussian { width: f64 },
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Flash rate per particle.
    pub lambda: f64,
    /// Collapse width.
    pub r_c: f64,
    /// Gravitational constant.
    pub g: f64,
    pub hbar: f64,
    pub masses: Vec<f64>,
    #[serde(default)]
    pub smearing: SmearingMode,
}

impl PhysicalParams {
    /// Dimensionless parameters with `hbar = r_C = 1`, all masses equal to
    /// `mass` and `G` chosen so that every self pair has `r_G = r_g`.
    pub fn dimensionless(lambda: f64, r_g: f64, mass: f64, n_particles: usize) -> Self {
        PhysicalParams {
            lambda,
            r_c: 1.0,
            g: r_g * lambda / (mass * mass),
            hbar: 1.0,
            masses: vec![mass; n_particles],
            smearing: SmearingMode::Sharp,
        }
    }

    /// SI preset: one particle of mass `mass` with CODATA constants and the
    /// literature collapse width.
    pub fn si_preset(mass: f64, lambda: f64) -> Self {
        PhysicalParams {
            lambda,
            r_c: LITERATURE_R_C,
            g: codata2018::G,
            hbar: codata2018::HBAR,
            masses: vec![mass],
            smearing: SmearingMode::Sharp,
        }
    }

    pub fn si_proton(lambda: f64) -> Self {
        Self::si_preset(codata2018::PROTON_MASS, lambda)
    }

    pub fn si_electron(lambda: f64) -> Self {
        Self::si_preset(codata2018::ELECTRON_MASS, lambda)
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    /// Gravitational length `G m_k m_l / (hbar lambda)` of the pair `(k, l)`.
    pub fn r_g(&self, k: usize, l: usize) -> Result<f64> {
        let n = self.masses.len();
        for index in [k, l] {
            if index >= n {
                return Err(Error::ParticleIndex { index, count: n });
            }
        }
        Ok(self.g * self.masses[k] * self.masses[l] / (self.hbar * self.lambda))
    }

    /// Full matrix of pair scales `r_G(k, l)`.
    pub fn r_g_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.masses.len();
        (0..n)
            .map(|k| (0..n).map(|l| self.r_g(k, l).unwrap_or(0.0)).collect())
            .collect()
    }

    /// Perturbative parameter `eps = r_G(k, l) / r_C`.
    pub fn epsilon(&self, k: usize, l: usize) -> Result<f64> {
        Ok(self.r_g(k, l)? / self.r_c)
    }

    /// Every violated invariant, in a stable order. Empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            diags.push("lambda must be positive".to_string());
        }
        if !(self.r_c > 0.0) || !self.r_c.is_finite() {
            diags.push("r_c must be positive".to_string());
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            diags.push("g must be nonnegative".to_string());
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            diags.push("hbar must be positive".to_string());
        }
        if self.masses.is_empty() {
            diags.push("at least one particle mass is required".to_string());
        }
        for (i, m) in self.masses.iter().enumerate() {
            if !(*m > 0.0) || !m.is_finite() {
                diags.push(format!("mass[{i}] must be positive (got {m})"));
            }
        }
        if let SmearingMode::Gaussian { width } = self.smearing {
            if !(width > 0.0) {
                diags.push("gaussian smearing width must be positive".to_string());
            }
        }
        diags
    }

    /// `Ok(())` when [`validate`](Self::validate) reports nothing.
    pub fn check(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(diags.join("; ")))
        }
    }
}

/// Reference scales of a unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub length: f64,
    pub time: f64,
    pub mass: f64,
}

impl UnitSystem {
    pub const IDENTITY: UnitSystem = UnitSystem {
        length: 1.0,
        time: 1.0,
        mass: 1.0,
    };

    pub fn new(length: f64, time: f64, mass: f64) -> Result<Self> {
        let u = UnitSystem { length, time, mass };
        u.check()?;
        Ok(u)
    }

    /// Units in which `params` has `r_C = 1` and `hbar = 1`, measuring mass
    /// in units of the first particle.
    pub fn natural(params: &PhysicalParams) -> Result<Self> {
        let mass = *params
            .masses
            .first()
            .ok_or_else(|| Error::InvalidParams("no particles".into()))?;
        let length = params.r_c;
        let time = mass * length * length / params.hbar;
        Self::new(length, time, mass)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("length", self.length), ("time", self.time), ("mass", self.mass)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "unit {name} scale must be positive (got {v})"
                )));
            }
        }
        Ok(())
    }
}

/// Expresses `params` in multiples of the reference scales of `units`.
pub fn to_dimensionless(params: &PhysicalParams, units: &UnitSystem) -> Result<PhysicalParams> {
    units.check()?;
    let UnitSystem { length: l, time: t, mass: m } = *units;
    Ok(PhysicalParams {
        lambda: params.lambda * t,
        r_c: params.r_c / l,
        g: params.g * m * t * t / (l * l * l),
        hbar: params.hbar * t / (m * l * l),
        masses: params.masses.iter().map(|x| x / m).collect(),
        smearing: match params.smearing {
            SmearingMode::Sharp => SmearingMode::Sharp,
            SmearingMode::Gaussian { width } => SmearingMode::Gaussian { width: width / l },
        },
    })
}

/// Inverse of [`to_dimensionless`].
pub fn from_dimensionless(params: &PhysicalParams, units: &UnitSystem) -> Result<PhysicalParams> {
    units.check()?;
    let UnitSystem { length: l, time: t, mass: m } = *units;
    Ok(PhysicalParams {
        lambda: params.lambda / t,
        r_c: params.r_c * l,
        g: params.g * l * l * l / (m * t * t),
        hbar: params.hbar * m * l * l / t,
        masses: params.masses.iter().map(|x| x * m).collect(),
        smearing: match params.smearing {
            SmearingMode::Sharp => SmearingMode::Sharp,
            SmearingMode::Gaussian { width } => SmearingMode::Gaussian { width: width * l },
        },
    })
}
