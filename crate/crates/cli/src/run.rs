//! Subcommand execution.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use grwflash::analysis::{
    effective_potential_check, falsifiability_scan, short_distance_rate, KernelCache, KernelModel, KernelResult,
    QuadratureSpec,
};
use grwflash::collapse::write_flash_csv;
use grwflash::dynamics::{master_evolve, run_ensemble, run_trajectory, MasterOptions};
use grwflash::exec::Execution;
use grwflash::state::io::{write_density_csv, write_wavefunction, write_wavefunction_csv};
use grwflash::state::{DensityMatrix, GridSpec, WaveFunction};
use grwflash::units::{PhysicalParams, LITERATURE_LAMBDA};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::{params_hash, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trajectory,
    Ensemble,
    Verify,
    Kernel,
    Slope,
    Potential,
    Scan,
    Presets,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Ensemble => "ensemble",
            Command::Verify => "verify",
            Command::Kernel => "kernel",
            Command::Slope => "slope",
            Command::Potential => "potential",
            Command::Scan => "scan",
            Command::Presets => "presets",
        }
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_traj: Option<usize>,
    /// Pass threshold in standard errors for `verify`, relative quadrature
    /// tolerance for `kernel`, `slope` and `scan`.
    pub tolerance: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if let Some(n) = self.n_traj {
            config.ensemble.n_traj = n;
            config.verify.n_traj = n;
        }
        if let Some(t) = self.tolerance {
            if t.is_nan() || t < 0.0 {
                return Err(CliError::Usage(format!("--tolerance must be nonnegative, got {t}")));
            }
            config.verify.sigmas = t;
            config.kernel.tolerance = t;
            config.slope.tolerance = t;
            config.scan.tolerance = t;
        }
        config.validate()
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    /// Human-readable summary.
    pub summary: String,
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    out_dir: &'a Path,
    params: PhysicalParams,
    grids: Vec<GridSpec>,
    hash: String,
    files: Vec<String>,
    summary: String,
}

impl Ctx<'_> {
    fn header(&self) -> String {
        format!("# params_hash={} master_seed={}\n", self.hash, self.config.run.seed)
    }

    fn write_file(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        fs::write(self.out_dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_csv(&mut self, name: &str, rows: &str) -> Result<(), CliError> {
        let body = self.header() + rows;
        self.write_file(name, body.as_bytes())
    }
}

fn quadrature_spec(rel: f64) -> QuadratureSpec {
    let mut spec = QuadratureSpec::default();
    spec.tolerances[1].rel = rel;
    spec.tolerances[2].rel = rel;
    spec
}

/// Runs `command`, writing its outputs and manifest into `out_dir`.
///
/// A failed physics check still writes its report and manifest before
/// returning [`CliError::CheckFailed`].
pub fn run_subcommand(
    command: Command,
    config: &ExperimentConfig,
    out_dir: &Path,
    flags: Vec<String>,
) -> Result<RunOutput, CliError> {
    fs::create_dir_all(out_dir)?;
    let params = match command {
        Command::Presets => PhysicalParams::si_proton(LITERATURE_LAMBDA),
        _ => config.physical_params()?,
    };
    let psi0 = match command {
        Command::Trajectory | Command::Ensemble | Command::Verify => Some(config.initial_state()?),
        _ => None,
    };
    let grids = match (&psi0, command) {
        (Some(psi), _) => psi.grids().to_vec(),
        (None, Command::Presets) => Vec::new(),
        (None, _) => config.grids()?,
    };
    let hash = params_hash(&params, &grids);
    let mut ctx = Ctx {
        config,
        out_dir,
        params,
        grids,
        hash,
        files: Vec::new(),
        summary: String::new(),
    };

    let mut n_traj = None;
    let result = match command {
        Command::Trajectory => trajectory(&mut ctx, psi0.as_ref().expect("state loaded")),
        Command::Ensemble => {
            n_traj = Some(config.ensemble.n_traj);
            ensemble(&mut ctx, psi0.as_ref().expect("state loaded"))
        }
        Command::Verify => {
            n_traj = Some(config.verify.n_traj);
            verify(&mut ctx, psi0.as_ref().expect("state loaded"))
        }
        Command::Kernel => kernel(&mut ctx),
        Command::Slope => slope(&mut ctx),
        Command::Potential => potential(&mut ctx),
        Command::Scan => scan(&mut ctx),
        Command::Presets => presets(&mut ctx),
    };
    let failure = match result {
        Ok(()) => None,
        Err(e @ CliError::CheckFailed(_)) => Some(e),
        Err(e) => return Err(e),
    };

    let manifest_name = format!("{}.manifest.json", command.name());
    let manifest = RunManifest::new(
        command.name(),
        flags,
        ctx.params.clone(),
        ctx.grids.clone(),
        config.run.seed,
        n_traj,
        config.clone(),
        ctx.files.clone(),
    );
    let manifest_path = out_dir.join(&manifest_name);
    manifest.write(&manifest_path)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunOutput {
        manifest: manifest_path,
        files: ctx.files.iter().map(|f| out_dir.join(f)).collect(),
        summary: ctx.summary,
    })
}

fn trajectory(ctx: &mut Ctx, psi0: &WaveFunction) -> Result<(), CliError> {
    let evolution = ctx.config.evolution_config()?;
    let traj = run_trajectory(
        psi0,
        &ctx.params,
        &evolution,
        ctx.config.run.seed,
        ctx.config.trajectory.stream,
    )?;
    let mut flashes = Vec::new();
    write_flash_csv(&traj.flashes, psi0.dim(), &ctx.hash, ctx.config.run.seed, &mut flashes)?;
    ctx.write_file("trajectory_flashes.csv", &flashes)?;
    let mut bin = Vec::new();
    write_wavefunction(&traj.final_state, &mut bin)?;
    ctx.write_file("trajectory_final.bin", &bin)?;
    let mut csv = Vec::new();
    write_wavefunction_csv(&traj.final_state, &mut csv)?;
    ctx.write_csv("trajectory_final.csv", &String::from_utf8_lossy(&csv))?;
    ctx.summary = format!("{} flashes up to t = {}", traj.flashes.len(), evolution.total_time);
    Ok(())
}

fn master_reference(ctx: &Ctx, psi0: &WaveFunction) -> Result<DensityMatrix, CliError> {
    let evolution = ctx.config.evolution_config()?;
    let rho0 = DensityMatrix::pure(psi0)?;
    let (rho, _) = master_evolve(&rho0, &ctx.params, &evolution, &MasterOptions::default())?;
    Ok(rho)
}

fn ensemble(ctx: &mut Ctx, psi0: &WaveFunction) -> Result<(), CliError> {
    let evolution = ctx.config.evolution_config()?;
    let n_traj = ctx.config.ensemble.n_traj;
    let ens = run_ensemble(psi0, &ctx.params, &evolution, n_traj, ctx.config.run.seed, Execution::Parallel)?;
    let mut rho = Vec::new();
    write_density_csv(&ens.rho, &mut rho)?;
    ctx.write_csv("ensemble_rho.csv", &String::from_utf8_lossy(&rho))?;

    let mut report = String::from("quantity,value\n");
    writeln!(report, "n_traj,{}", ens.n_traj).ok();
    writeln!(report, "batches,{}", ens.batches).ok();
    writeln!(report, "mean_flashes,{:e}", ens.flash_stats.mean_count()).ok();
    writeln!(report, "purity,{:e}", ens.rho.purity()).ok();
    writeln!(report, "standard_error,{:e}", ens.trace_distance_error).ok();
    let mut summary = format!("{n_traj} trajectories, purity {:.6}", ens.rho.purity());
    if ctx.config.ensemble.compare {
        let td = ens.rho.trace_distance(&master_reference(ctx, psi0)?)?;
        writeln!(report, "trace_distance_to_master,{td:e}").ok();
        write!(summary, ", trace distance to master equation {td:.4e}").ok();
    }
    ctx.write_csv("ensemble_report.csv", &report)?;
    ctx.summary = summary;
    Ok(())
}

fn verify(ctx: &mut Ctx, psi0: &WaveFunction) -> Result<(), CliError> {
    let v = &ctx.config.verify;
    let evolution = ctx.config.evolution_config()?;
    let ens = run_ensemble(psi0, &ctx.params, &evolution, v.n_traj, ctx.config.run.seed, Execution::Parallel)?;
    let reference = master_reference(ctx, psi0)?;
    let td = ens.rho.trace_distance(&reference)?;
    let se = ens.trace_distance_error;
    let bound = v.sigmas * se;
    let se_ok = v.max_standard_error.is_none_or(|m| se <= m);
    let pass = td < bound && se_ok;

    let mut report = String::from("quantity,value\n");
    writeln!(report, "n_traj,{}", v.n_traj).ok();
    writeln!(report, "trace_distance,{td:e}").ok();
    writeln!(report, "standard_error,{se:e}").ok();
    writeln!(report, "sigmas,{:e}", v.sigmas).ok();
    writeln!(report, "bound,{bound:e}").ok();
    writeln!(report, "pass,{pass}").ok();
    ctx.write_csv("verify_report.csv", &report)?;
    let line = format!(
        "trace distance {td:.4e} vs bound {bound:.4e} ({} x standard error {se:.4e})",
        v.sigmas
    );
    ctx.summary = format!("{}: {line}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else if !se_ok {
        Err(CliError::CheckFailed(format!("{line}; standard error above the configured cap")))
    } else {
        Err(CliError::CheckFailed(line))
    }
}

fn kernel(ctx: &mut Ctx) -> Result<(), CliError> {
    let k = &ctx.config.kernel;
    let pairs = ctx.config.kernel_pairs()?;
    if pairs.is_empty() {
        return Err(CliError::Usage("kernel: no pairs given (kernel.pairs or kernel.pairs_file)".into()));
    }
    let model = KernelModel::from_params(&ctx.params, k.softening, k.dim)?;
    let cache = KernelCache::new();
    let res = KernelResult::evaluate(pairs, model, quadrature_spec(k.tolerance), Execution::Parallel, Some(&cache))?;

    let axes = ["x", "y", "z"];
    let mut csv = String::new();
    let cols: Vec<String> = ["x", "y"]
        .iter()
        .flat_map(|p| axes[..k.dim].iter().map(move |a| format!("{p}_{a}")))
        .collect();
    writeln!(csv, "{},separation,re,im,error", cols.join(",")).ok();
    for (((x, y), v), e) in res.pairs.iter().zip(&res.values).zip(&res.errors) {
        let s = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let coords: Vec<String> = x.iter().chain(y).map(|c| format!("{c:e}")).collect();
        writeln!(csv, "{},{s:e},{:e},{:e},{e:e}", coords.join(","), v.re, v.im).ok();
    }
    ctx.write_csv("kernel.csv", &csv)?;
    ctx.summary = format!("{} pairs, r_G = {:e}", res.pairs.len(), model.r_g);
    Ok(())
}

fn slope(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = &ctx.config.slope;
    let fit = short_distance_rate(&ctx.params, &s.separations, &quadrature_spec(s.tolerance), Execution::Parallel)?;
    let mut rows = String::from("separation,excess,error\n");
    for ((x, y), e) in fit.separations.iter().zip(&fit.excess).zip(&fit.errors) {
        writeln!(rows, "{x:e},{y:e},{e:e}").ok();
    }
    ctx.write_csv("slope.csv", &rows)?;
    let mut summary = String::from("quantity,value\n");
    writeln!(summary, "slope,{:e}", fit.slope).ok();
    writeln!(summary, "intercept,{:e}", fit.intercept).ok();
    writeln!(summary, "r_squared,{:e}", fit.r_squared).ok();
    writeln!(summary, "predicted,{:e}", fit.predicted).ok();
    writeln!(summary, "relative_deviation,{:e}", fit.relative_deviation).ok();
    ctx.write_csv("slope_fit.csv", &summary)?;
    ctx.summary = format!(
        "slope {:.6e} vs predicted {:.6e} ({:+.2}%), R^2 = {:.6}",
        fit.slope,
        fit.predicted,
        100.0 * fit.relative_deviation,
        fit.r_squared
    );
    Ok(())
}

fn potential(ctx: &mut Ctx) -> Result<(), CliError> {
    let rows = effective_potential_check(&ctx.config.potential.distances, &ctx.params)?;
    let mut csv = String::from("d,quadrature,error,closed_form,relative_error,bare_deviation\n");
    for r in &rows {
        writeln!(
            csv,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            r.d, r.quadrature, r.error, r.closed_form, r.relative_error, r.bare_deviation
        )
        .ok();
    }
    ctx.write_csv("potential.csv", &csv)?;
    let worst = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    ctx.summary = format!("{} distances, worst relative error {worst:.2e}", rows.len());
    Ok(())
}

fn scan(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = &ctx.config.scan;
    let res = falsifiability_scan(
        s.separation,
        ctx.params.r_c,
        &s.lambdas,
        &ctx.params,
        &quadrature_spec(s.tolerance),
        Execution::Parallel,
    )?;
    let mut csv = Vec::new();
    res.write_csv(&ctx.hash, &mut csv)?;
    ctx.write_file("scan.csv", &csv)?;
    ctx.summary = match res.excess_exponent(0..s.lambdas.len()) {
        Ok(p) => format!("{} rates, excess exponent in lambda {p:.4}", s.lambdas.len()),
        Err(_) => format!("{} rates, no resolvable gravitational excess", s.lambdas.len()),
    };
    Ok(())
}

fn presets(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut csv = String::from("particle,mass_kg,lambda_per_s,r_c_m,r_g_m,epsilon\n");
    let mut summary = String::new();
    for (name, p) in [
        ("proton", PhysicalParams::si_proton(LITERATURE_LAMBDA)),
        ("electron", PhysicalParams::si_electron(LITERATURE_LAMBDA)),
    ] {
        let r_g = p.r_g(0, 0)?;
        writeln!(
            csv,
            "{name},{:e},{:e},{:e},{r_g:e},{:e}",
            p.masses[0],
            p.lambda,
            p.r_c,
            p.epsilon(0, 0)?
        )
        .ok();
        writeln!(summary, "{name}: r_G = {r_g:.3e} m").ok();
    }
    ctx.write_csv("presets.csv", &csv)?;
    ctx.summary = summary.trim_end().to_string();
    Ok(())
}

/// Writes `summary` and the list of files to `w`.
pub fn print_summary<W: Write>(out: &RunOutput, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", out.summary)?;
    for f in &out.files {
        writeln!(w, "wrote {}", f.display())?;
    }
    writeln!(w, "manifest {}", out.manifest.display())
}
