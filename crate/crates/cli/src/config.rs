//! Experiment configuration files.
//!
//! Configurations are TOML documents. Every section and key is optional;
//! missing values take the defaults below and unknown keys are rejected.
//!
//! ```toml
//! [params]
//! lambda = 1.0
//! r_c = 1.0
//! r_g = 0.2          # or `g = ...`, not both
//! masses = [1.0]
//!
//! [grid]
//! dim = 1
//! n_points = 64
//! spacing = 0.25
//! centers = [0.0]    # one grid centre per particle
//!
//! [state]
//! superpose = true
//! packets = [{ center = [-1.0], width = 0.7 }, { center = [1.0], width = 0.7 }]
//!
//! [evolution]
//! total_time = 2.0
//! hamiltonian = "none"
//!
//! [verify]
//! n_traj = 1024
//! sigmas = 3.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use grwflash::dynamics::{EvolutionConfig, FreeHamiltonian, JumpMode};
use grwflash::state::io::read_wavefunction;
use grwflash::state::{GaussianPacket, GridSpec, WaveFunction};
use grwflash::units::{PhysicalParams, SmearingMode};
use grwflash::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A pair of points `(x, y)`.
pub type Pair = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSection,
    pub grid: GridSection,
    pub state: StateSection,
    pub evolution: EvolutionSection,
    pub run: RunSection,
    pub trajectory: TrajectorySection,
    pub ensemble: EnsembleSection,
    pub verify: VerifySection,
    pub kernel: KernelSection,
    pub slope: SlopeSection,
    pub potential: PotentialSection,
    pub scan: ScanSection,
}

/// Physical parameters in units with `hbar = r_C = 1` unless stated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub lambda: f64,
    pub r_c: f64,
    pub hbar: f64,
    pub masses: Vec<f64>,
    /// Gravitational constant. Exclusive with `r_g`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// `r_G` of particle 0 with itself; fixes `G`. Exclusive with `g`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_g: Option<f64>,
    /// Width of a Gaussian flash source; point sources when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smearing_width: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            lambda: 1.0,
            r_c: 1.0,
            hbar: 1.0,
            masses: vec![1.0],
            g: None,
            r_g: None,
            smearing_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n_points: usize,
    pub spacing: f64,
    /// Centre of each particle's grid; defaults to 0 for every particle.
    pub centers: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            n_points: 64,
            spacing: 0.25,
            centers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub momentum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSection {
    /// Binary state file; overrides the grid and packets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// One packet per particle, or the branches of a single-particle
    /// superposition when `superpose` is set. Defaults to a unit-width
    /// packet at every grid centre.
    pub packets: Vec<PacketSpec>,
    pub superpose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hamiltonian {
    #[default]
    None,
    Kinetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Massive,
    Vanilla,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub total_time: f64,
    pub dt_free: f64,
    pub hamiltonian: Hamiltonian,
    pub mode: Mode,
    /// Plummer softening; half a grid cell when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub softening: Option<f64>,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            total_time: 1.0,
            dt_free: 0.05,
            hamiltonian: Hamiltonian::None,
            mode: Mode::Massive,
            softening: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    /// Stream id of the trajectory under the master seed.
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_traj: usize,
    /// Also integrate the master equation and report the trace distance.
    pub compare: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_traj: 256,
            compare: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub n_traj: usize,
    /// Pass when the trace distance is below `sigmas` standard errors.
    pub sigmas: f64,
    /// Optional cap on the standard error itself.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_standard_error: Option<f64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            n_traj: 1024,
            sigmas: 3.0,
            max_standard_error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub dim: usize,
    pub softening: f64,
    /// Pairs `[x, y]` of points.
    pub pairs: Vec<[Vec<f64>; 2]>,
    /// CSV file with one pair per row: the coordinates of x, then of y.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs_file: Option<PathBuf>,
    /// Relative tolerance of the gravitational components.
    pub tolerance: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            dim: 3,
            softening: 0.0,
            pairs: Vec::new(),
            pairs_file: None,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlopeSection {
    pub separations: Vec<f64>,
    pub tolerance: f64,
}

impl Default for SlopeSection {
    fn default() -> Self {
        SlopeSection {
            separations: (0..10).map(|i| 1e-3 * 10f64.powf(i as f64 / 9.0)).collect(),
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub distances: Vec<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            distances: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub separation: f64,
    pub lambdas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            separation: 5e-3,
            lambdas: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            tolerance: 1e-8,
        }
    }
}

/// Reads and validates a configuration file. Relative paths inside the file
/// are resolved against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::MissingConfig {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut config = parse_config(&text).map_err(|e| match e {
        CliError::Parse { line, message, .. } => CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    for file in [&mut config.state.file, &mut config.kernel.pairs_file].into_iter().flatten() {
        if file.is_relative() {
            *file = base.join(&*file);
        }
    }
    config.validate()?;
    Ok(config)
}

/// Parses a configuration document without touching the file system.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        CliError::Parse {
            path: PathBuf::new(),
            line,
            message: e.message().to_string(),
        }
    })
}

pub fn save_config(config: &ExperimentConfig, path: &Path) -> Result<(), CliError> {
    let text = toml::to_string(config).map_err(|e| CliError::Usage(format!("cannot serialise config: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::Invalid(m));
        let p = &self.params;
        if p.g.is_some() && p.r_g.is_some() {
            return invalid("params: give either g or r_g, not both".into());
        }
        if p.masses.is_empty() || p.masses.len() > 3 {
            return invalid(format!("params: need 1 to 3 masses, got {}", p.masses.len()));
        }
        self.physical_params()?.check()?;
        let g = &self.grid;
        if !g.centers.is_empty() && g.centers.len() != p.masses.len() {
            return invalid(format!(
                "grid: {} centres for {} particles",
                g.centers.len(),
                p.masses.len()
            ));
        }
        for file in [&self.state.file, &self.kernel.pairs_file].into_iter().flatten() {
            if !file.is_file() {
                return invalid(format!("referenced file {} does not exist", file.display()));
            }
        }
        if self.state.file.is_none() {
            self.grids()?;
        }
        self.evolution_config()?;
        if self.verify.sigmas < 0.0 {
            return invalid("verify: sigmas must be nonnegative".into());
        }
        for (name, n) in [("ensemble", self.ensemble.n_traj), ("verify", self.verify.n_traj)] {
            if n == 0 {
                return invalid(format!("{name}: n_traj must be positive"));
            }
        }
        Ok(())
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, CliError> {
        let p = &self.params;
        let m0 = p.masses.first().copied().unwrap_or(1.0);
        let g = match (p.g, p.r_g) {
            (Some(g), _) => g,
            (None, Some(r_g)) => r_g * p.hbar * p.lambda / (m0 * m0),
            (None, None) => 0.0,
        };
        Ok(PhysicalParams {
            lambda: p.lambda,
            r_c: p.r_c,
            g,
            hbar: p.hbar,
            masses: p.masses.clone(),
            smearing: match p.smearing_width {
                Some(width) => SmearingMode::Gaussian { width },
                None => SmearingMode::Sharp,
            },
        })
    }

    pub fn grids(&self) -> Result<Vec<GridSpec>, CliError> {
        let g = &self.grid;
        (0..self.params.masses.len())
            .map(|k| {
                let c = g.centers.get(k).copied().unwrap_or(0.0);
                Ok(GridSpec::centered(g.dim, g.n_points, g.spacing, c)?)
            })
            .collect()
    }

    pub fn evolution_config(&self) -> Result<EvolutionConfig, CliError> {
        let e = &self.evolution;
        let h = match e.hamiltonian {
            Hamiltonian::None => FreeHamiltonian::None,
            Hamiltonian::Kinetic => FreeHamiltonian::Kinetic,
        };
        let mut c = EvolutionConfig::new(e.total_time, h, e.dt_free)?.with_mode(match e.mode {
            Mode::Massive => JumpMode::MassiveFlashes,
            Mode::Vanilla => JumpMode::Vanilla,
        });
        if let Some(a) = e.softening {
            c = c.with_softening(a);
        }
        c.check()?;
        Ok(c)
    }

    /// Initial state described by the `state` section.
    pub fn initial_state(&self) -> Result<WaveFunction, CliError> {
        if let Some(file) = &self.state.file {
            let f = fs::File::open(file)?;
            let psi = read_wavefunction(std::io::BufReader::new(f))?;
            if psi.n_particles() != self.params.masses.len() {
                return Err(CliError::Invalid(format!(
                    "state file holds {} particle(s), params give {} mass(es)",
                    psi.n_particles(),
                    self.params.masses.len()
                )));
            }
            return Ok(psi.normalize()?);
        }
        let grids = self.grids()?;
        let packets: Vec<GaussianPacket> = if self.state.packets.is_empty() {
            grids
                .iter()
                .map(|g| {
                    let c = (0..g.dim).map(|a| {
                        let (lo, hi) = g.bounds(a);
                        (lo + hi) / 2.0
                    });
                    GaussianPacket::at_rest(c.collect(), 1.0)
                })
                .collect()
        } else {
            self.state
                .packets
                .iter()
                .map(|p| GaussianPacket {
                    center: p.center.clone(),
                    width: p.width,
                    momentum: if p.momentum.is_empty() {
                        vec![0.0; p.center.len()]
                    } else {
                        p.momentum.clone()
                    },
                })
                .collect()
        };
        if self.state.superpose {
            if grids.len() != 1 {
                return Err(CliError::Invalid("state: superpositions need a single particle".into()));
            }
            let branches = packets
                .iter()
                .map(|p| WaveFunction::gaussian_packets(grids.clone(), std::slice::from_ref(p)))
                .collect::<Result<Vec<_>, _>>()?;
            let one = Complex64::new(1.0, 0.0);
            let terms: Vec<_> = branches.iter().map(|b| (one, b)).collect();
            return Ok(WaveFunction::superpose(&terms)?.normalize()?);
        }
        Ok(WaveFunction::gaussian_packets(grids, &packets)?)
    }

    /// Pairs for the kernel subcommand, from the inline list and the file.
    pub fn kernel_pairs(&self) -> Result<Vec<Pair>, CliError> {
        let dim = self.kernel.dim;
        let mut pairs: Vec<Pair> =
            self.kernel.pairs.iter().map(|[x, y]| (x.clone(), y.clone())).collect();
        if let Some(file) = &self.kernel.pairs_file {
            let text = fs::read_to_string(file)?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let v = line
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Parse {
                        path: file.clone(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                if v.len() != 2 * dim {
                    return Err(CliError::Parse {
                        path: file.clone(),
                        line: i + 1,
                        message: format!("expected {} values, got {}", 2 * dim, v.len()),
                    });
                }
                pairs.push((v[..dim].to_vec(), v[dim..].to_vec()));
            }
        }
        if let Some((x, y)) = pairs.iter().find(|(x, y)| x.len() != dim || y.len() != dim) {
            return Err(CliError::Invalid(format!(
                "kernel: pair {x:?}, {y:?} does not have dimension {dim}"
            )));
        }
        Ok(pairs)
    }
}
