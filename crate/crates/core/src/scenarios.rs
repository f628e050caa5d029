//! Distance/loss sweeps, distance-step transients and battery-versus-receiver
//! energy comparisons built on the lower-level modules.
//!
//! Distances are metres and go through [`coupling`](crate::coupling) with
//! `ω0 = 1`; everything else is in units of `ω0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::analytic::LinearSolution;
use crate::coupling::{kappa_of_distance, min_separation, self_inductance, mutual_inductance, CoilGeometry};
use crate::dynamics::{
    detect_steady_state, integrate, IntegrationConfig, KappaSchedule, SteadyStateReport, Trajectory,
    DEFAULT_STEADY_THRESHOLD, DEFAULT_STEADY_WINDOW,
};
use crate::error::{Error, Result};
use crate::model::{classify_region, AmplitudeState, GainModel, SpectralRegion, SystemParams, DEFAULT_EP_TOL};
use crate::spectral::exceptional_arc;

/// Horizon used for linear-family sweeps.
pub const LINEAR_SWEEP_T_END: f64 = 20.0;
/// Default duration of each distance-step segment.
pub const DEFAULT_SEGMENT_DURATION: f64 = 100.0;
/// Tolerance on `|κ(d*) − γ|` when locating the exceptional arc.
pub const ARC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainFamily {
    /// Linear gain balanced against the loss, `g = γ`.
    LinearPt,
    NonlinearSaturable { g1: f64, gamma1: f64 },
}

impl GainFamily {
    pub fn is_linear(&self) -> bool {
        matches!(self, GainFamily::LinearPt)
    }

    pub fn params(&self, kappa: f64, gamma: f64) -> SystemParams {
        match *self {
            GainFamily::LinearPt => SystemParams::pt_linear(kappa, gamma),
            GainFamily::NonlinearSaturable { g1, gamma1 } => SystemParams::saturable(kappa, gamma, g1, gamma1),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub d_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub gain_family: GainFamily,
}

impl SweepGrid {
    /// 61 × 61 over `d ∈ [0.2, 1.2]` m and `γ ∈ (0, 0.12]`.
    pub fn default_nonlinear(g1: f64, gamma1: f64) -> Self {
        Self {
            d_values: linspace(0.2, 1.2, 61),
            gamma_values: (1..=61).map(|i| 0.12 * i as f64 / 61.0).collect(),
            gain_family: GainFamily::NonlinearSaturable { g1, gamma1 },
        }
    }

    /// 61 × 61 over `d ∈ [0.2, 1.2]` m and `γ ∈ [0, 1]`.
    pub fn default_linear() -> Self {
        Self { d_values: linspace(0.2, 1.2, 61), gamma_values: linspace(0.0, 1.0, 61), gain_family: GainFamily::LinearPt }
    }

    pub fn validate(&self, geom: &CoilGeometry) -> Result<()> {
        if self.d_values.is_empty() || self.gamma_values.is_empty() {
            return Err(Error::invalid("grid", "axes must be nonempty"));
        }
        if self.d_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("d_values", "must be strictly increasing"));
        }
        if self.gamma_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("gamma_values", "must be strictly increasing"));
        }
        if !(self.d_values[0] >= min_separation(geom, geom)) || !self.d_values.iter().all(|d| d.is_finite()) {
            return Err(Error::invalid("d_values", "distances must be finite and keep the coils apart"));
        }
        if !(self.gamma_values[0] >= 0.0) || !self.gamma_values.iter().all(|g| g.is_finite()) {
            return Err(Error::invalid("gamma_values", "loss rates must be finite and >= 0"));
        }
        if let GainFamily::NonlinearSaturable { g1, gamma1 } = self.gain_family {
            GainModel::NonlinearSaturable { g1, gamma1 }.validate()?;
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.d_values.len() * self.gamma_values.len()
    }
}

/// Result for one `(d, γ)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub region: SpectralRegion,
    pub e_max: f64,
    pub e_s: Option<f64>,
    pub p_max: f64,
    /// Why the cell is not trustworthy, if it is not.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellDiagnostic {
    pub d: f64,
    pub gamma: f64,
    pub message: String,
}

/// Matrices are indexed `[i_d][i_gamma]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub kappas: Vec<f64>,
    pub e_max: Vec<Vec<f64>>,
    pub e_s: Option<Vec<Vec<f64>>>,
    pub p_max: Vec<Vec<f64>>,
    pub region_mask: Vec<Vec<SpectralRegion>>,
    /// `(γ, d*)` with `κ(d*) = γ`, for each γ whose crossing lies inside the
    /// distance axis.
    pub arc: Vec<(f64, f64)>,
    pub diagnostics: Vec<CellDiagnostic>,
}

/// `κ(d)` along the distance axis.
pub fn sweep_kappas(grid: &SweepGrid, geom: &CoilGeometry) -> Result<Vec<f64>> {
    grid.validate(geom)?;
    let l = self_inductance(geom)?;
    grid.d_values.iter().map(|&d| Ok(0.5 * mutual_inductance(geom, geom, d)? / l)).collect()
}

/// Max of `E(t)/t` on the output grid `t = k·stride`, `0 < t ≤ t_end`.
fn linear_max_power(sol: &LinearSolution, t_end: f64, stride: f64) -> f64 {
    let mut best = 0.0f64;
    let mut k = 1u64;
    loop {
        let t = (k as f64 * stride).min(t_end);
        best = best.max(sol.transfer_energy(t) / t);
        if t >= t_end {
            return best;
        }
        k += 1;
    }
}

/// One sweep cell. Linear cells use the closed forms over `[0, cfg.t_end]`;
/// nonlinear cells integrate and run the steady-state detector.
pub fn sweep_cell(kappa: f64, gamma: f64, family: GainFamily, cfg: &IntegrationConfig) -> CellOutcome {
    let region = classify_region(kappa, gamma, DEFAULT_EP_TOL);
    match family {
        GainFamily::LinearPt => match LinearSolution::new(kappa, gamma, 1.0) {
            Ok(sol) => CellOutcome {
                region,
                e_max: sol.max_transfer_energy(cfg.t_end),
                e_s: None,
                p_max: linear_max_power(&sol, cfg.t_end, cfg.record_stride),
                diagnostic: None,
            },
            Err(e) => failed_cell(region, format!("{e}")),
        },
        GainFamily::NonlinearSaturable { .. } => {
            let params = family.params(kappa, gamma);
            let traj = match integrate(&params, AmplitudeState::default(), cfg, None) {
                Ok(t) => t,
                Err(e) => return failed_cell(region, format!("{e}")),
            };
            let report = match detect_steady_state(&traj, DEFAULT_STEADY_WINDOW, DEFAULT_STEADY_THRESHOLD) {
                Ok(r) => r,
                Err(e) => return failed_cell(region, format!("{e}")),
            };
            let diagnostic = nonlinear_diagnostic(kappa, gamma, region, &report);
            CellOutcome {
                region,
                e_max: traj.max_energy(),
                e_s: Some(report.e_steady),
                p_max: traj.max_power(),
                diagnostic,
            }
        }
    }
}

fn failed_cell(region: SpectralRegion, message: String) -> CellOutcome {
    CellOutcome { region, e_max: f64::NAN, e_s: None, p_max: f64::NAN, diagnostic: Some(message) }
}

/// Flags unsettled cells and unbroken cells parked on the `ω0` mode.
///
/// Started from `ψ_B = 0`, the unbroken system first approaches the `ω0`
/// mode, a saddle whose unstable direction is seeded only by round-off; the
/// escape slows to a halt as `κ → γ`, so cells near the arc can stay there
/// for the whole run.
fn nonlinear_diagnostic(kappa: f64, gamma: f64, region: SpectralRegion, r: &SteadyStateReport) -> Option<String> {
    if !r.converged {
        return Some(String::from("did not settle within t_end"));
    }
    if region == SpectralRegion::Unbroken {
        let split = ((kappa - gamma) * (kappa + gamma)).sqrt();
        if let Some(w) = r.mode_frequency {
            if (w - 1.0).abs() < 0.5 * split {
                return Some(String::from("unbroken cell settled on the metastable ω0 mode"));
            }
        }
    }
    None
}

/// Combine per-cell outcomes (row-major, `d` outer) into a [`SweepResult`].
pub fn assemble_sweep(grid: &SweepGrid, geom: &CoilGeometry, kappas: Vec<f64>, cells: Vec<CellOutcome>) -> Result<SweepResult> {
    let (nd, ng) = (grid.d_values.len(), grid.gamma_values.len());
    if cells.len() != nd * ng || kappas.len() != nd {
        return Err(Error::invalid("cells", "outcome count does not match the grid"));
    }
    let nonlinear = !grid.gain_family.is_linear();
    let mut e_max = Vec::with_capacity(nd);
    let mut e_s = Vec::with_capacity(nd);
    let mut p_max = Vec::with_capacity(nd);
    let mut region_mask = Vec::with_capacity(nd);
    let mut diagnostics = Vec::new();
    let mut it = cells.into_iter();
    for &d in &grid.d_values {
        let (mut em, mut es, mut pm, mut rm) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &gamma in &grid.gamma_values {
            let c = it.next().expect("length checked above");
            em.push(c.e_max);
            es.push(c.e_s.unwrap_or(f64::NAN));
            pm.push(c.p_max);
            rm.push(c.region);
            if let Some(message) = c.diagnostic {
                diagnostics.push(CellDiagnostic { d, gamma, message });
            }
        }
        e_max.push(em);
        e_s.push(es);
        p_max.push(pm);
        region_mask.push(rm);
    }
    let d_range = (grid.d_values[0], grid.d_values[nd - 1]);
    let mut arc = Vec::new();
    if nd > 1 {
        let l = self_inductance(geom)?;
        let curve = |d: f64| mutual_inductance(geom, geom, d).map_or(f64::NAN, |m| 0.5 * m / l);
        for &gamma in &grid.gamma_values {
            if let Ok(d_star) = exceptional_arc(curve, gamma, d_range, ARC_TOL) {
                arc.push((gamma, d_star));
            }
        }
    }
    Ok(SweepResult {
        grid: grid.clone(),
        kappas,
        e_max,
        e_s: nonlinear.then_some(e_s),
        p_max,
        region_mask,
        arc,
        diagnostics,
    })
}

/// Sequential sweep over every cell.
pub fn run_sweep(grid: &SweepGrid, geom: &CoilGeometry, cfg: &IntegrationConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let kappas = sweep_kappas(grid, geom)?;
    let mut cells = Vec::with_capacity(grid.cells());
    for &kappa in &kappas {
        for &gamma in &grid.gamma_values {
            cells.push(sweep_cell(kappa, gamma, grid.gain_family, cfg));
        }
    }
    assemble_sweep(grid, geom, kappas, cells)
}

/// Piecewise-constant distance `d(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub segments: Vec<(f64, f64)>,
}

impl StepSchedule {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| Error::invalid("segments", "need at least one segment"))?;
        if first.0 != 0.0 {
            return Err(Error::invalid("segments", "first segment must start at t = 0"));
        }
        if segments.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("segments", "start times must be strictly increasing"));
        }
        if segments.iter().any(|&(t, d)| !t.is_finite() || !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("segments", "times and distances must be finite, distances > 0"));
        }
        Ok(Self { segments })
    }

    /// Back-to-back segments of equal duration.
    pub fn uniform(distances: &[f64], duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::invalid("duration", "must be > 0"));
        }
        Self::new(distances.iter().enumerate().map(|(i, &d)| (i as f64 * duration, d)).collect())
    }

    pub fn last_start(&self) -> f64 {
        self.segments[self.segments.len() - 1].0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub t_start: f64,
    pub t_end: f64,
    pub d: f64,
    pub kappa: f64,
    pub region: SpectralRegion,
    pub report: SteadyStateReport,
    /// Settling time measured from the segment start.
    pub settle_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResponse {
    pub trajectory: Trajectory,
    /// Distance in force at each trajectory sample.
    pub distances: Vec<f64>,
    pub segments: Vec<SegmentReport>,
}

/// Integrate through the distance steps without resetting the state, then
/// run the steady-state detector on each segment separately. The last
/// segment ends at `cfg.t_end`.
pub fn run_step_response(schedule: &StepSchedule, geom: &CoilGeometry, params: &SystemParams, cfg: &IntegrationConfig) -> Result<StepResponse> {
    if params.gain.is_linear() {
        return Err(Error::Unsupported("step response needs a saturable gain"));
    }
    if !(cfg.t_end > schedule.last_start()) {
        return Err(Error::invalid("t_end", "must lie after the last segment start"));
    }
    let sep = min_separation(geom, geom);
    if schedule.segments.iter().any(|&(_, d)| d < sep) {
        return Err(Error::invalid("segments", "a distance makes the coils overlap"));
    }
    let kappas = schedule
        .segments
        .iter()
        .map(|&(_, d)| kappa_of_distance(geom, d, params.omega_a))
        .collect::<Result<Vec<_>>>()?;
    let ks = KappaSchedule::new(schedule.segments.iter().zip(&kappas).map(|(&(t, _), &k)| (t, k)).collect())?;
    let trajectory = integrate(params, AmplitudeState::default(), cfg, Some(&ks))?;

    let n_seg = schedule.segments.len();
    let mut segments = Vec::with_capacity(n_seg);
    for (i, (&(t_start, d), &kappa)) in schedule.segments.iter().zip(&kappas).enumerate() {
        let t_end = if i + 1 < n_seg { schedule.segments[i + 1].0 } else { cfg.t_end };
        let samples = trajectory
            .samples
            .iter()
            .filter(|s| s.t() >= t_start && (s.t() < t_end || (i + 1 == n_seg && s.t() <= t_end)))
            .copied()
            .collect();
        let part = Trajectory { samples };
        let report = detect_steady_state(&part, DEFAULT_STEADY_WINDOW, DEFAULT_STEADY_THRESHOLD).unwrap_or_else(|_| {
            // too short for the detector
            let last = part.last();
            SteadyStateReport {
                converged: false,
                t_settle: None,
                e_steady: last.map_or(f64::NAN, |s| s.e),
                g_measured: last.map_or(f64::NAN, |s| s.gain),
                mode_frequency: None,
            }
        });
        segments.push(SegmentReport {
            t_start,
            t_end,
            d,
            kappa,
            region: classify_region(kappa, params.gamma, DEFAULT_EP_TOL),
            settle_after: report.t_settle.map(|t| t - t_start),
            report,
        });
    }
    let distances = trajectory
        .samples
        .iter()
        .map(|s| {
            let idx = schedule.segments.iter().rposition(|&(t, _)| t <= s.t()).unwrap_or(0);
            schedule.segments[idx].1
        })
        .collect();
    Ok(StepResponse { trajectory, distances, segments })
}

/// Receiver and battery energies side by side, with closed forms where the
/// system is PT-balanced and linear.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageComparison {
    pub trajectory: Trajectory,
    /// `(E, E_A)` from the closed forms at each trajectory time.
    pub closed_form: Option<Vec<(f64, f64)>>,
}

impl StorageComparison {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.trajectory.samples.iter().map(|s| s.t())
    }
}

pub fn run_storage_comparison(params: &SystemParams, cfg: &IntegrationConfig) -> Result<StorageComparison> {
    let trajectory = integrate(params, AmplitudeState::default(), cfg, None)?;
    let balanced = matches!(params.gain, GainModel::Linear { g } if g == params.gamma) && params.omega_a == params.omega_b;
    let closed_form = if balanced {
        let sol = LinearSolution::new(params.kappa, params.gamma, params.omega_a)?;
        Some(trajectory.samples.iter().map(|s| (sol.transfer_energy(s.t()), sol.storage_energy(s.t()))).collect())
    } else {
        None
    };
    Ok(StorageComparison { trajectory, closed_form })
}

/// Steady receiver energy of the saturable model from the fixed-point
/// algebra: `κ`-free below the arc, `(κ/γ)²`-scaled above it.
pub fn steady_energy_oracle(kappa: f64, gamma: f64, g1: f64, gamma1: f64) -> f64 {
    if gamma < kappa {
        2.0 * (g1 + gamma1) / (gamma + gamma1) - 1.0
    } else {
        let g_sat = kappa * kappa / gamma;
        (kappa / gamma).powi(2) * (2.0 * (g1 + gamma1) / (g_sat + gamma1) - 1.0)
    }
}
