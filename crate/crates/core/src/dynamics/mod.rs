//! Stochastic unraveling and master-equation evolution.

mod ensemble;
mod exact;
mod free;
mod master;
mod trajectory;

pub use ensemble::{run_ensemble, EnsembleResult, FlashStatistics};
pub use exact::exact_diagonal_solution;
pub use free::{free_evolve, free_step, FreeEvolver, FreePropagator, Spectral};
pub use master::{master_evolve, master_generator, MasterEquation, MasterOptions, MasterReport};
pub use trajectory::{run_trajectory, Trajectory};

use crate::state::GridSpec;
use crate::{Error, Result};

/// Free Hamiltonian between flashes.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum FreeHamiltonian {
    /// No evolution between flashes.
    #[default]
    None,
    /// `sum_k p_k^2 / 2 m_k`.
    Kinetic,
    /// Kinetic term plus an external potential given on every node of the
    /// configuration space (flat state order).
    KineticPotential(Vec<f64>),
}

/// What a flash does to the wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpMode {
    /// Collapse only.
    Vanilla,
    /// Collapse followed by the gravitational kick.
    #[default]
    MassiveFlashes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub total_time: f64,
    pub hamiltonian: FreeHamiltonian,
    pub dt_free: f64,
    /// Times at which trajectories record their state (off when empty).
    pub snapshot_times: Vec<f64>,
    /// Plummer softening of the kick; `None` means half a grid cell.
    pub softening: Option<f64>,
    pub mode: JumpMode,
}

impl EvolutionConfig {
    pub fn new(total_time: f64, hamiltonian: FreeHamiltonian, dt_free: f64) -> Result<Self> {
        let c = EvolutionConfig {
            total_time,
            hamiltonian,
            dt_free,
            snapshot_times: Vec::new(),
            softening: None,
            mode: JumpMode::MassiveFlashes,
        };
        c.check()?;
        Ok(c)
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Result<Self> {
        self.snapshot_times = times;
        self.check()?;
        Ok(self)
    }

    pub fn with_softening(mut self, a: f64) -> Self {
        self.softening = Some(a);
        self
    }

    pub fn with_mode(mut self, mode: JumpMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.total_time >= 0.0) || !self.total_time.is_finite() {
            return Err(Error::InvalidInput(format!(
                "total time must be nonnegative, got {}",
                self.total_time
            )));
        }
        if !(self.dt_free > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt_free must be positive, got {}",
                self.dt_free
            )));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(0.0..=self.total_time).contains(&t))
        {
            return Err(Error::InvalidInput(format!(
                "snapshot time {t} outside [0, {}]",
                self.total_time
            )));
        }
        if let Some(a) = self.softening {
            if !(a >= 0.0) {
                return Err(Error::InvalidInput(format!("softening must be nonnegative, got {a}")));
            }
        }
        Ok(())
    }

    /// Softening used on `grid`.
    pub fn softening_for(&self, grid: &GridSpec) -> f64 {
        self.softening
            .unwrap_or_else(|| crate::gravity::default_softening(grid))
    }
}
