//! Command-line front end.
//!
//! Every command resolves its parameters in three layers: an optional
//! preset, an optional config file on top of it, then explicit flags.
//! Output goes to `--out` (stdout when absent); relative output paths are
//! placed under `$NHQB_OUT_DIR` when that is set.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
//! 3 numerical failure, 4 validation failure (bad parameter values, or a
//! circuit run outside its cross-validation budget).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use nhqb_core::analytic::LinearSolution;
use nhqb_core::circuit::{compare_with_coupled_mode, simulate_circuit, CircuitParams, CircuitState, DiodeParams, GainNetwork};
use nhqb_core::coupling::{coupling_curve, kappa_of_distance, CoilGeometry};
use nhqb_core::dynamics::{integrate, IntegrationConfig, Sample, Trajectory};
use nhqb_core::scenarios::{run_step_response, GainFamily, StepSchedule, SweepGrid, DEFAULT_SEGMENT_DURATION, LINEAR_SWEEP_T_END};
use nhqb_core::spectral::{linear_eigenfrequencies, nonlinear_eigenfrequencies};
use nhqb_core::{classify_region, AmplitudeState, SpectralRegion, SystemParams, DEFAULT_EP_TOL};

use crate::config::{Axis, ConfigError, Family, Format, Network, Range, RunConfig};
use crate::formats::{self, EigenRow, FormatError};
use crate::parallel::run_sweep_parallel;
use crate::presets;
use crate::report::{self, to_json};

pub const OUT_DIR_ENV: &str = "NHQB_OUT_DIR";

/// Receiver energy above which linear runs past the exceptional point are
/// cut short.
pub const LINEAR_ENERGY_CAP: f64 = 1e12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<nhqb_core::Error> for CliError {
    fn from(e: nhqb_core::Error) -> Self {
        use nhqb_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::NonPositiveTime(_) => CliError::Validation(e.to_string()),
            E::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "nhqb", version, about = "Energy transfer between a gain resonator and a lossy receiver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenfrequencies (and saturated gain) over a loss sweep
    Eigen(EigenArgs),
    /// Time evolution of both amplitudes
    Simulate(SimulateArgs),
    /// Peak/steady energy and peak power over a distance × loss grid
    Sweep(SweepArgs),
    /// Saturable-gain response to step changes of the coil distance
    Step(StepArgs),
    /// Transient circuit simulation checked against the coupled-mode model
    Circuit(CircuitArgs),
    /// Coupling rate of the coil pair against distance
    Coupling(CouplingArgs),
    /// List the built-in presets, or print one
    Presets { name: Option<String> },
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Built-in configuration (see `nhqb presets`)
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML configuration file, applied on top of the preset
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args, Default)]
pub struct FamilyArgs {
    /// Linear gain balanced against the loss
    #[arg(long, conflicts_with = "nonlinear")]
    pub linear: bool,
    /// Saturable gain
    #[arg(long)]
    pub nonlinear: bool,
}

#[derive(Debug, Args, Default)]
pub struct GainArgs {
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct IntegrationArgs {
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub stride: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct CoilArgs {
    /// Coil radius (m)
    #[arg(long)]
    pub coil_radius: Option<f64>,
    #[arg(long)]
    pub coil_turns: Option<u32>,
    /// Axial distance between neighbouring turns (m)
    #[arg(long)]
    pub coil_pitch: Option<f64>,
    #[arg(long)]
    pub wire_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub gain: GainArgs,
    #[arg(long, conflicts_with = "kappa_range")]
    pub kappa: Option<f64>,
    /// lo:hi:n; adds a leading `kappa` column
    #[arg(long)]
    pub kappa_range: Option<Range>,
    #[arg(long, conflicts_with = "gamma_range")]
    pub gamma: Option<f64>,
    /// lo:hi:n
    #[arg(long)]
    pub gamma_range: Option<Range>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub gain: GainArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    #[command(flatten)]
    pub coil: CoilArgs,
    #[arg(long, conflicts_with = "distance")]
    pub kappa: Option<f64>,
    /// Coil separation (m), converted to a coupling rate
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Evaluate the closed-form solution instead of integrating
    #[arg(long)]
    pub analytic: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub gain: GainArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    #[command(flatten)]
    pub coil: CoilArgs,
    /// Distances (m), lo:hi:n
    #[arg(long)]
    pub d_range: Option<Range>,
    #[arg(long)]
    pub gamma_range: Option<Range>,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub gain: GainArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    #[command(flatten)]
    pub coil: CoilArgs,
    /// TOML file with a `[step]` section, applied after --config
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Comma-separated distances (m), one segment each
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<f64>>,
    #[arg(long)]
    pub segment_duration: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Also write the per-segment JSON report here
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub network: Option<Network>,
    /// Inductance (H)
    #[arg(long)]
    pub l: Option<f64>,
    /// Capacitance (F)
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub m_over_l: Option<f64>,
    /// Load resistance (Ω)
    #[arg(long)]
    pub r_b: Option<f64>,
    #[arg(long)]
    pub r_f: Option<f64>,
    #[arg(long)]
    pub r_g: Option<f64>,
    #[arg(long)]
    pub r_1: Option<f64>,
    #[arg(long)]
    pub r_2: Option<f64>,
    /// Op-amp output rails (±V)
    #[arg(long)]
    pub rails: Option<f64>,
    /// Simulated time (s)
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Largest time step (s)
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Initial voltage on the gain tank (V)
    #[arg(long)]
    pub u_a0: Option<f64>,
    /// Skip the cross-validation verdict
    #[arg(long)]
    pub no_validate: bool,
    /// Also write the cross-validation JSON report here
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub coil: CoilArgs,
    #[arg(long)]
    pub d_range: Option<Range>,
    /// Angular frequency the rates are expressed against
    #[arg(long)]
    pub omega0: Option<f64>,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = stdout.write_all(text.as_bytes());
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 }
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Eigen(a) => cmd_eigen(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Step(a) => cmd_step(a, stdout, stderr),
        Command::Circuit(a) => cmd_circuit(a, stdout, stderr),
        Command::Coupling(a) => cmd_coupling(a, stdout),
        Command::Presets { name } => cmd_presets(name, stdout),
    }
}

fn read_file(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_config(command: &str, common: &Common, extra: Option<&PathBuf>) -> Result<RunConfig> {
    let mut layers: Vec<(String, String)> = Vec::new();
    if let Some(name) = &common.preset {
        let text = presets::find(name).ok_or_else(|| {
            CliError::Usage(format!("unknown preset `{name}`; available: {}", presets::names().collect::<Vec<_>>().join(", ")))
        })?;
        layers.push((format!("preset {name}"), text.to_string()));
    }
    for path in common.config.iter().chain(extra) {
        layers.push((path.display().to_string(), read_file(path)?));
    }
    let refs: Vec<(&str, &str)> = layers.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let cfg = crate::config::load_layers(&refs)?;
    cfg.check_command(command)?;
    Ok(cfg)
}

/// Output path, resolved under `$NHQB_OUT_DIR` when relative.
pub fn resolve_output(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(p),
        _ => p,
    }
}

fn emit(path: Option<&str>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            let p = resolve_output(p);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => Ok(stdout.write_all(bytes)?),
    }
}

fn out_path<'a>(common: &'a Common, cfg: &'a RunConfig) -> Option<&'a str> {
    common.out.as_deref().or(cfg.output.path.as_deref())
}

fn format_of(common: &Common, cfg: &RunConfig) -> Format {
    common.format.or(cfg.output.format).unwrap_or(Format::Csv)
}

fn family_of(flags: &FamilyArgs, cfg: &RunConfig) -> Result<Family> {
    if flags.linear {
        Ok(Family::Linear)
    } else if flags.nonlinear {
        Ok(Family::Nonlinear)
    } else {
        cfg.system.family.ok_or_else(|| CliError::Usage("choose a gain family with --linear or --nonlinear".into()))
    }
}

fn gain_params(flags: &GainArgs, cfg: &RunConfig) -> (f64, f64) {
    (flags.g1.or(cfg.system.g1).unwrap_or(3.0), flags.gamma1.or(cfg.system.gamma1).unwrap_or(0.05))
}

fn system(family: Family, kappa: f64, gamma: f64, g1: f64, gamma1: f64) -> SystemParams {
    match family {
        Family::Linear => SystemParams::pt_linear(kappa, gamma),
        Family::Nonlinear => SystemParams::saturable(kappa, gamma, g1, gamma1),
    }
}

fn integration(flags: &IntegrationArgs, cfg: &RunConfig, default_t_end: f64) -> Result<IntegrationConfig> {
    let s = &cfg.integration;
    let d = IntegrationConfig::default();
    let ic = IntegrationConfig {
        rel_tol: flags.rel_tol.or(s.rel_tol).unwrap_or(d.rel_tol),
        abs_tol: flags.abs_tol.or(s.abs_tol).unwrap_or(d.abs_tol),
        t_end: flags.t_end.or(s.t_end).unwrap_or(default_t_end),
        max_step: flags.max_step.or(s.max_step).unwrap_or(d.max_step),
        record_stride: flags.stride.or(s.record_stride).unwrap_or(d.record_stride),
        divergence_limit: s.divergence_limit.unwrap_or(d.divergence_limit),
    };
    ic.validate()?;
    Ok(ic)
}

fn coil(flags: &CoilArgs, cfg: &RunConfig) -> Result<CoilGeometry> {
    let s = &cfg.coil;
    let d = CoilGeometry::default();
    let g = CoilGeometry {
        radius: flags.coil_radius.or(s.radius).unwrap_or(d.radius),
        turns: flags.coil_turns.or(s.turns).unwrap_or(d.turns),
        axial_pitch: flags.coil_pitch.or(s.axial_pitch).unwrap_or(d.axial_pitch),
        wire_radius: flags.wire_radius.or(s.wire_radius).unwrap_or(d.wire_radius),
    };
    g.validate()?;
    Ok(g)
}

fn axis(flag: Option<Range>, cfg: Option<&Axis>) -> Result<Option<Vec<f64>>> {
    match (flag, cfg) {
        (Some(r), _) => Ok(Some(r.values())),
        (None, Some(a)) => Ok(Some(a.values()?)),
        (None, None) => Ok(None),
    }
}

pub fn cmd_eigen(a: EigenArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config("eigen", &a.common, None)?;
    let family = family_of(&a.family, &cfg)?;
    let (g1, gamma1) = gain_params(&a.gain, &cfg);
    let kappa_axis = axis(a.kappa_range, cfg.eigen.kappa_range.as_ref())?;
    let kappas = match (a.kappa, &kappa_axis) {
        (Some(k), _) => vec![k],
        (None, Some(v)) => v.clone(),
        (None, None) => vec![cfg.system.kappa.ok_or_else(|| CliError::Usage("missing --kappa (or --kappa-range)".into()))?],
    };
    let with_kappa = a.kappa.is_none() && kappa_axis.is_some();
    let gammas = match (a.gamma, axis(a.gamma_range, cfg.eigen.gamma_range.as_ref())?) {
        (Some(g), _) => vec![g],
        (None, Some(v)) => v,
        (None, None) => vec![cfg.system.gamma.ok_or_else(|| CliError::Usage("missing --gamma (or --gamma-range)".into()))?],
    };

    let mut rows = Vec::with_capacity(kappas.len() * gammas.len());
    let mut gains = Vec::with_capacity(rows.capacity());
    for &kappa in &kappas {
        for &gamma in &gammas {
            let p = system(family, kappa, gamma, g1, gamma1);
            let set = match family {
                Family::Linear => linear_eigenfrequencies(&p)?,
                Family::Nonlinear => nonlinear_eigenfrequencies(&p)?,
            };
            rows.push(EigenRow::new(with_kappa.then_some(kappa), gamma, &set));
            gains.push(set.mode_gains);
        }
    }
    let bytes = match format_of(&a.common, &cfg) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_eigen(&mut buf, &rows)?;
            buf
        }
        Format::Json => {
            let doc: Vec<_> = rows.iter().zip(gains).map(|(r, g)| report::EigenRowJson::new(r, g)).collect();
            to_json(&doc).into_bytes()
        }
    };
    emit(out_path(&a.common, &cfg), &bytes, stdout)
}

/// Time at which the closed-form receiver energy first reaches `cap`.
fn linear_energy_horizon(sol: &LinearSolution, cap: f64, t_end: f64) -> f64 {
    if sol.transfer_energy(t_end) < cap {
        return t_end;
    }
    // energy is monotone past the exceptional point
    let (mut lo, mut hi) = (0.0, t_end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sol.transfer_energy(mid) < cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn analytic_trajectory(sol: &LinearSolution, gamma: f64, cfg: &IntegrationConfig) -> Trajectory {
    let mut samples = Vec::new();
    let mut k = 0u64;
    loop {
        let t = (k as f64 * cfg.record_stride).min(cfg.t_end);
        let state = AmplitudeState::new(sol.psi_a(t), sol.psi_b(t), t);
        let e = state.psi_b.norm_sqr();
        samples.push(Sample { state, kappa: sol.kappa, gain: gamma, e, e_a: state.psi_a.norm_sqr(), p: if t > 0.0 { e / t } else { 0.0 } });
        if t >= cfg.t_end {
            break;
        }
        k += 1;
    }
    Trajectory { samples }
}

fn trajectory_bytes(traj: &Trajectory, format: Format) -> Result<Vec<u8>> {
    let rows = formats::trajectory_rows(traj);
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_trajectory(&mut buf, &rows)?;
            buf
        }
        Format::Json => to_json(&rows.iter().map(report::TrajectoryRowJson::from).collect::<Vec<_>>()).into_bytes(),
    })
}

pub fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = load_config("simulate", &a.common, None)?;
    let family = family_of(&a.family, &cfg)?;
    let analytic = a.analytic || cfg.simulate.analytic.unwrap_or(false);
    if analytic && family == Family::Nonlinear {
        return Err(CliError::Usage("--analytic needs --linear: the saturable model has no closed form".into()));
    }
    let (g1, gamma1) = gain_params(&a.gain, &cfg);
    let gamma = a.gamma.or(cfg.system.gamma).ok_or_else(|| CliError::Usage("missing --gamma".into()))?;
    let kappa = match (a.kappa, a.distance) {
        (Some(k), _) => k,
        (None, Some(d)) => kappa_of_distance(&coil(&a.coil, &cfg)?, d, 1.0)?,
        (None, None) => match (cfg.system.kappa, cfg.system.distance) {
            (Some(k), _) => k,
            (None, Some(d)) => kappa_of_distance(&coil(&a.coil, &cfg)?, d, 1.0)?,
            (None, None) => 0.5,
        },
    };
    let params = system(family, kappa, gamma, g1, gamma1);
    params.validate()?;
    let mut ic = integration(&a.integration, &cfg, IntegrationConfig::default().t_end)?;
    let format = format_of(&a.common, &cfg);
    let path = out_path(&a.common, &cfg);

    if family == Family::Linear {
        let sol = LinearSolution::new(kappa, gamma, 1.0)?;
        if analytic {
            let traj = analytic_trajectory(&sol, gamma, &ic);
            return emit(path, &trajectory_bytes(&traj, format)?, stdout);
        }
        if classify_region(kappa, gamma, DEFAULT_EP_TOL) != SpectralRegion::Unbroken {
            let horizon = linear_energy_horizon(&sol, LINEAR_ENERGY_CAP, ic.t_end);
            if horizon < ic.t_end {
                writeln!(stderr, "warning: t_end cut from {} to {horizon} to keep E below {LINEAR_ENERGY_CAP:e}", ic.t_end)?;
                ic.t_end = horizon;
            }
        }
    }
    match integrate(&params, AmplitudeState::default(), &ic, None) {
        Ok(traj) => emit(path, &trajectory_bytes(&traj, format)?, stdout),
        Err(e) => {
            if let Some(partial) = e.partial_trajectory() {
                writeln!(stderr, "warning: writing the partial trajectory up to t = {}", partial.last().map_or(0.0, |s| s.t()))?;
                emit(path, &trajectory_bytes(partial, format)?, stdout)?;
            }
            Err(e.into())
        }
    }
}

pub fn cmd_sweep(a: SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = load_config("sweep", &a.common, None)?;
    let family = family_of(&a.family, &cfg)?;
    let (g1, gamma1) = gain_params(&a.gain, &cfg);
    let mut grid = match family {
        Family::Linear => SweepGrid::default_linear(),
        Family::Nonlinear => SweepGrid::default_nonlinear(g1, gamma1),
    };
    if let Some(d) = axis(a.d_range, cfg.sweep.d_range.as_ref())? {
        grid.d_values = d;
    }
    if let Some(g) = axis(a.gamma_range, cfg.sweep.gamma_range.as_ref())? {
        grid.gamma_values = g;
    }
    grid.gain_family = match family {
        Family::Linear => GainFamily::LinearPt,
        Family::Nonlinear => GainFamily::NonlinearSaturable { g1, gamma1 },
    };
    let default_t_end = if family == Family::Linear { LINEAR_SWEEP_T_END } else { IntegrationConfig::default().t_end };
    let ic = integration(&a.integration, &cfg, default_t_end)?;
    let geom = coil(&a.coil, &cfg)?;
    let result = run_sweep_parallel(&grid, &geom, &ic)?;
    // per-cell detail lives in the JSON output
    let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
    for d in &result.diagnostics {
        *counts.entry(d.message.as_str()).or_default() += 1;
    }
    for (message, n) in counts {
        writeln!(stderr, "warning: {n} of {} cells: {message}", grid.cells())?;
    }
    let rows = formats::sweep_rows(&result);
    let bytes = match format_of(&a.common, &cfg) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_sweep(&mut buf, &rows)?;
            buf
        }
        Format::Json => to_json(&report::SweepJson::new(&result, &rows)).into_bytes(),
    };
    emit(out_path(&a.common, &cfg), &bytes, stdout)
}

pub fn cmd_step(a: StepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = load_config("step", &a.common, a.schedule.as_ref())?;
    if cfg.system.family == Some(Family::Linear) {
        return Err(CliError::Usage("step responses need the saturable gain".into()));
    }
    let (g1, gamma1) = gain_params(&a.gain, &cfg);
    let gamma = a.gamma.or(cfg.system.gamma).unwrap_or(0.04);
    let duration = a.segment_duration.or(cfg.step.segment_duration).unwrap_or(DEFAULT_SEGMENT_DURATION);
    let schedule = match (&a.distances, &cfg.step.segments, &cfg.step.distances) {
        (Some(d), _, _) => StepSchedule::uniform(d, duration)?,
        (None, Some(seg), _) => StepSchedule::new(seg.iter().map(|&[t, d]| (t, d)).collect())?,
        (None, None, Some(d)) => StepSchedule::uniform(d, duration)?,
        (None, None, None) => return Err(CliError::Usage("no schedule: give --distances, --schedule or a [step] section".into())),
    };
    let geom = coil(&a.coil, &cfg)?;
    let default_t_end = schedule.last_start() + duration;
    let ic = integration(&a.integration, &cfg, default_t_end)?;
    let kappa0 = kappa_of_distance(&geom, schedule.segments[0].1, 1.0)?;
    let params = SystemParams::saturable(kappa0, gamma, g1, gamma1);
    let response = run_step_response(&schedule, &geom, &params, &ic)?;

    for s in &response.segments {
        match s.settle_after {
            Some(ts) => writeln!(stderr, "segment d = {} m ({}): E_s = {} settled after {ts}", s.d, s.region, s.report.e_steady)?,
            None => writeln!(stderr, "segment d = {} m ({}): not settled, last E = {}", s.d, s.region, s.report.e_steady)?,
        }
    }
    let doc = to_json(&report::StepJson::new(&params, &response));
    let bytes = match format_of(&a.common, &cfg) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_step(&mut buf, &formats::step_rows(&response))?;
            buf
        }
        Format::Json => doc.clone().into_bytes(),
    };
    emit(out_path(&a.common, &cfg), &bytes, stdout)?;
    if let Some(r) = a.report.as_deref().or(cfg.output.report.as_deref()) {
        emit(Some(r), doc.as_bytes(), stdout)?;
    }
    Ok(())
}

fn circuit_params(a: &CircuitArgs, cfg: &RunConfig) -> Result<CircuitParams> {
    let s = &cfg.circuit;
    let network = a.network.or(s.network).ok_or_else(|| CliError::Usage("missing --network (buffer, diode or none)".into()))?;
    let r_b = match (a.r_b.or(s.r_b), network) {
        (Some(r), _) => r,
        (None, Network::None) => f64::INFINITY,
        (None, _) => return Err(CliError::Usage("missing --r-b".into())),
    };
    let d = DiodeParams::default();
    let gain_network = match network {
        Network::Buffer => GainNetwork::LinearBuffer { r_f: a.r_f.or(s.r_f).unwrap_or(1e3), r_g: a.r_g.or(s.r_g).unwrap_or(1e3) },
        Network::Diode => GainNetwork::DiodeNetwork {
            r_1: a.r_1.or(s.r_1).unwrap_or(500.0),
            r_2: a.r_2.or(s.r_2).unwrap_or(1e4),
            r_g: a.r_g.or(s.r_g).unwrap_or(5e3),
            diode: DiodeParams { i_s: s.i_s.unwrap_or(d.i_s), v_t: s.v_t.unwrap_or(d.v_t), n: s.n.unwrap_or(d.n) },
        },
        Network::None => GainNetwork::None,
    };
    let cp = CircuitParams {
        l: a.l.or(s.l).unwrap_or(2.32e-3),
        c: a.c.or(s.c).unwrap_or(10.7e-9),
        m_over_l: a.m_over_l.or(s.m_over_l).unwrap_or(0.2),
        r_b,
        gain_network,
        rails: a.rails.or(s.rails),
    };
    cp.validate()?;
    Ok(cp)
}

pub fn cmd_circuit(a: CircuitArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = load_config("circuit", &a.common, None)?;
    let cp = circuit_params(&a, &cfg)?;
    let s = &cfg.circuit;
    let t_end = a.t_end.or(s.t_end).unwrap_or(2e-3);
    let dt_max = a.dt_max.or(s.dt_max).unwrap_or_else(|| cp.default_dt_max());
    let validate = !a.no_validate && s.validate.unwrap_or(true);
    let initial = CircuitState { u_a: a.u_a0.or(s.u_a0).unwrap_or(1.0), ..CircuitState::default() };
    let waveform = simulate_circuit(&cp, initial, t_end, dt_max)?;

    let cv = match compare_with_coupled_mode(&cp, &waveform) {
        Ok(cv) => Some(cv),
        Err(e) if !validate => {
            writeln!(stderr, "warning: no cross-validation: {e}")?;
            None
        }
        Err(e) => return Err(e.into()),
    };
    let doc = cv.as_ref().map(|cv| to_json(&report::CircuitJson::from(cv)));
    if let Some(cv) = &cv {
        for m in &cv.metrics {
            let budget = m.budget.map_or("informational".to_string(), |b| format!("budget {b}"));
            writeln!(stderr, "{}: circuit {} vs {} (error {:.4}, {budget})", m.name, m.circuit, m.predicted.unwrap_or(m.coupled_mode), m.rel_error)?;
        }
    }
    let bytes = match format_of(&a.common, &cfg) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_waveform(&mut buf, &waveform)?;
            buf
        }
        Format::Json => doc.clone().unwrap_or_else(|| "null\n".into()).into_bytes(),
    };
    emit(out_path(&a.common, &cfg), &bytes, stdout)?;
    if let (Some(r), Some(doc)) = (a.report.as_deref().or(cfg.output.report.as_deref()), &doc) {
        emit(Some(r), doc.as_bytes(), stdout)?;
    }
    match cv {
        Some(cv) if validate && !cv.pass => Err(CliError::Validation("circuit is outside the coupled-mode error budget".into())),
        _ => Ok(()),
    }
}

pub fn cmd_coupling(a: CouplingArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config("coupling", &a.common, None)?;
    let geom = coil(&a.coil, &cfg)?;
    let d = axis(a.d_range, cfg.coupling.d_range.as_ref())?.unwrap_or_else(|| "0.2:1.2:101".parse::<Range>().expect("valid literal").values());
    let omega0 = a.omega0.or(cfg.coupling.omega0).unwrap_or(1.0);
    let curve = coupling_curve(&geom, &d, omega0)?;
    let bytes = match format_of(&a.common, &cfg) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_coupling(&mut buf, &curve)?;
            buf
        }
        Format::Json => {
            let rows: Vec<_> = curve
                .distances
                .iter()
                .zip(&curve.kappas)
                .map(|(&d_m, &k)| report::CouplingRowJson { d_m, kappa_per_omega0: k / omega0 })
                .collect();
            to_json(&rows).into_bytes()
        }
    };
    emit(out_path(&a.common, &cfg), &bytes, stdout)
}

fn cmd_presets(name: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    match name {
        Some(n) => {
            let text = presets::find(&n).ok_or_else(|| CliError::Usage(format!("unknown preset `{n}`")))?;
            stdout.write_all(text.as_bytes())?;
        }
        None => {
            for (n, text) in presets::PRESETS {
                let cfg = RunConfig::parse(text)?;
                writeln!(stdout, "{n:<18} {:<9} {}", cfg.command.unwrap_or_default(), cfg.description.unwrap_or_default())?;
            }
        }
    }
    Ok(())
}
