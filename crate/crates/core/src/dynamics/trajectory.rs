use super::{EvolutionConfig, FreeEvolver, JumpMode};
use crate::collapse::{apply_collapse_in_place, sample_flash_position, FlashClock, FlashEvent};
use crate::gravity::{kick_in_place, phase_profile};
use crate::rng;
use crate::state::WaveFunction;
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// One realisation of the flash process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub master_seed: u64,
    /// Stream id of this trajectory under `master_seed`.
    pub seed: u64,
    pub flashes: Vec<FlashEvent>,
    pub snapshots: Vec<(f64, WaveFunction)>,
    pub final_state: WaveFunction,
}

/// Runs one trajectory from `psi0` over `[0, config.total_time]`.
///
/// Between flashes the state evolves freely. At each flash the particle and
/// flash centre are drawn, the collapse operator is applied, the state is
/// renormalised and, in [`JumpMode::MassiveFlashes`], the gravitational kick
/// of the flash is applied. Everything is a function of
/// `(master_seed, seed)`.
pub fn run_trajectory(
    psi0: &WaveFunction,
    params: &PhysicalParams,
    config: &EvolutionConfig,
    master_seed: u64,
    seed: u64,
) -> Result<Trajectory> {
    let evolver = FreeEvolver::new(psi0.grids(), params, config)?;
    run_with(psi0, params, config, &evolver, master_seed, seed)
}

pub(crate) fn run_with(
    psi0: &WaveFunction,
    params: &PhysicalParams,
    config: &EvolutionConfig,
    evolver: &FreeEvolver,
    master_seed: u64,
    seed: u64,
) -> Result<Trajectory> {
    params.check()?;
    config.check()?;
    if params.n_particles() != psi0.n_particles() {
        return Err(Error::InvalidInput(format!(
            "{} masses for a {}-particle state",
            params.n_particles(),
            psi0.n_particles()
        )));
    }
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "initial state is not normalised (norm {})",
            psi0.norm()
        )));
    }
    psi0.check_boundary();
    let softening = config.softening_for(psi0.grid());
    let mut clock = FlashClock::new(psi0.n_particles(), params.lambda, rng::stream(master_seed, seed))?;
    let mut snaps: Vec<f64> = config.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    let mut snaps = snaps.into_iter().peekable();

    let mut psi = psi0.clone();
    let mut t = 0.0;
    let mut flashes = Vec::new();
    let mut snapshots = Vec::new();
    let total = config.total_time;
    loop {
        let (wait, k) = clock.next_flash();
        let next = t + wait;
        let stop = next.min(total);
        while let Some(&ts) = snaps.peek() {
            if ts > stop {
                break;
            }
            evolver.evolve(&mut psi, ts - t);
            t = ts;
            snapshots.push((ts, psi.clone()));
            snaps.next();
        }
        if next > total {
            evolver.evolve(&mut psi, total - t);
            break;
        }
        evolver.evolve(&mut psi, next - t);
        t = next;

        let x_f = sample_flash_position(&psi, k, params.r_c, clock.rng())?;
        apply_collapse_in_place(&mut psi, k, &x_f, params.r_c)?;
        psi.normalize_in_place()?;
        let event = FlashEvent {
            time: t,
            particle: k,
            position: x_f,
        };
        if config.mode == JumpMode::MassiveFlashes {
            let profile = phase_profile(psi.grids(), &event, params, softening)?;
            kick_in_place(&mut psi, &profile)?;
        }
        flashes.push(event);
    }
    Ok(Trajectory {
        master_seed,
        seed,
        flashes,
        snapshots,
        final_state: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FreeHamiltonian;
    use crate::state::{GaussianPacket, GridSpec};

    fn setup() -> (WaveFunction, PhysicalParams) {
        let g = GridSpec::centered(1, 64, 0.25, 0.0).unwrap();
        let psi = WaveFunction::gaussian_packets(vec![g], &[GaussianPacket::at_rest(vec![0.0], 1.5)]).unwrap();
        (psi, PhysicalParams::dimensionless(1.0, 0.2, 1.0, 1))
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let (psi, params) = setup();
        let cfg = EvolutionConfig::new(3.0, FreeHamiltonian::Kinetic, 0.1).unwrap();
        let a = run_trajectory(&psi, &params, &cfg, 11, 4).unwrap();
        let b = run_trajectory(&psi, &params, &cfg, 11, 4).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&psi, &params, &cfg, 11, 5).unwrap();
        assert_ne!(a.flashes, c.flashes);
    }

    #[test]
    fn zero_g_matches_vanilla() {
        let (psi, mut params) = setup();
        params.g = 0.0;
        let cfg = EvolutionConfig::new(3.0, FreeHamiltonian::Kinetic, 0.1).unwrap();
        for seed in 0..5 {
            let a = run_trajectory(&psi, &params, &cfg, 1, seed).unwrap();
            let b = run_trajectory(&psi, &params, &cfg.clone().with_mode(JumpMode::Vanilla), 1, seed).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn flash_times_increase_and_state_stays_normalised() {
        let (psi, params) = setup();
        let cfg = EvolutionConfig::new(10.0, FreeHamiltonian::Kinetic, 0.1)
            .unwrap()
            .with_snapshots(vec![2.0, 0.0, 10.0])
            .unwrap();
        let tr = run_trajectory(&psi, &params, &cfg, 3, 0).unwrap();
        assert!(!tr.flashes.is_empty());
        assert!(tr.flashes.windows(2).all(|w| w[0].time < w[1].time));
        assert!(tr.flashes.iter().all(|f| f.time <= 10.0));
        assert!((tr.final_state.norm() - 1.0).abs() < 1e-10);
        let times: Vec<f64> = tr.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(times, vec![0.0, 2.0, 10.0]);
        assert_eq!(tr.snapshots[0].1, psi);
    }

    #[test]
    fn unnormalised_input_rejected() {
        let (psi, params) = setup();
        let mut bad = psi.clone();
        bad.amplitudes_mut().iter_mut().for_each(|a| *a *= 2.0);
        let cfg = EvolutionConfig::new(1.0, FreeHamiltonian::None, 0.1).unwrap();
        assert!(run_trajectory(&bad, &params, &cfg, 0, 0).is_err());
    }
}
