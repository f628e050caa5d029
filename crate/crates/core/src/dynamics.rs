//! Time integration of the coupled-mode equations
//!
//! ```text
//! dψ_A/dt = (−iω_A + g(|ψ_A|)) ψ_A − iκ ψ_B
//! dψ_B/dt = (−iω_B − γ) ψ_B − iκ ψ_A
//! ```
//!
//! for any [`Gain`], with optional piecewise-constant coupling schedules,
//! plus steady-state and mode-frequency measurements on the result.

use alloc::boxed::Box;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{transfer_energy, AmplitudeState, Gain, SystemParams};
use crate::ode::{Dopri5, Tolerances};
use crate::{Complex, Error, Result};

pub const DEFAULT_STEADY_WINDOW: f64 = 20.0;
pub const DEFAULT_STEADY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Absolute end time.
    pub t_end: f64,
    pub max_step: f64,
    pub record_stride: f64,
    /// `|ψ|` above which the run is abandoned as divergent.
    pub divergence_limit: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_end: 200.0,
            max_step: 0.5,
            record_stride: 0.01,
            divergence_limit: 1e150,
        }
    }
}

impl IntegrationConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_stride(mut self, record_stride: f64) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("t_end", self.t_end),
            ("max_step", self.max_step),
            ("record_stride", self.record_stride),
            ("divergence_limit", self.divergence_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant coupling `κ(t)`: `segments[i] = (t_start, κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaSchedule {
    segments: Vec<(f64, f64)>,
}

impl KappaSchedule {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::invalid("schedule", "needs at least one segment"));
        };
        if first.0 != 0.0 {
            return Err(Error::invalid("schedule", "first segment must start at t = 0"));
        }
        for w in segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid("schedule", "segment start times must increase strictly"));
            }
        }
        if segments.iter().any(|&(t, k)| !t.is_finite() || !(k >= 0.0 && k.is_finite())) {
            return Err(Error::invalid("schedule", "times must be finite and kappa >= 0"));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn kappa_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|&(ts, _)| ts <= t);
        self.segments[idx.saturating_sub(1)].1
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: AmplitudeState,
    pub kappa: f64,
    /// Instantaneous gain `g(|ψ_A|)`.
    pub gain: f64,
    /// Receiver energy `ω_B |ψ_B|²`.
    pub e: f64,
    /// Battery energy `ω_A |ψ_A|²`.
    pub e_a: f64,
    /// Average power `E/t`, reported as 0 at `t = 0`.
    pub p: f64,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t() - a.t(),
            _ => 0.0,
        }
    }

    /// Samples with `t >= t_from`.
    pub fn tail_from(&self, t_from: f64) -> &[Sample] {
        let i = self.samples.partition_point(|s| s.t() < t_from);
        &self.samples[i..]
    }

    pub fn max_energy(&self) -> f64 {
        self.samples.iter().map(|s| s.e).fold(0.0, f64::max)
    }

    pub fn max_power(&self) -> f64 {
        self.samples.iter().map(|s| s.p).fold(0.0, f64::max)
    }
}

fn pack(s: &AmplitudeState) -> [f64; 4] {
    [s.psi_a.re, s.psi_a.im, s.psi_b.re, s.psi_b.im]
}

fn unpack(y: &[f64; 4], t: f64) -> AmplitudeState {
    AmplitudeState::new(Complex::new(y[0], y[1]), Complex::new(y[2], y[3]), t)
}

fn make_sample<G: Gain>(params: &SystemParams, gain: &G, kappa: f64, state: AmplitudeState) -> Sample {
    let e = transfer_energy(&state, params.omega_b);
    let t = state.t;
    Sample {
        state,
        kappa,
        gain: gain.rate(state.psi_a.norm()),
        e,
        e_a: params.omega_a * state.psi_a.norm_sqr(),
        p: if t > 0.0 { e / t } else { 0.0 },
    }
}

/// Integrate with the gain model carried by `params`.
pub fn integrate(
    params: &SystemParams,
    initial: AmplitudeState,
    cfg: &IntegrationConfig,
    schedule: Option<&KappaSchedule>,
) -> Result<Trajectory> {
    params.validate()?;
    integrate_with_gain(params, &params.gain, initial, cfg, schedule)
}

/// Integrate with an arbitrary gain law; `params.gain` is ignored.
pub fn integrate_with_gain<G: Gain>(
    params: &SystemParams,
    gain: &G,
    initial: AmplitudeState,
    cfg: &IntegrationConfig,
    schedule: Option<&KappaSchedule>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !initial.is_finite() {
        return Err(Error::invalid("initial", "state must be finite"));
    }
    let t0 = initial.t;
    if !(cfg.t_end > t0) {
        return Err(Error::invalid("t_end", "must lie after the initial time"));
    }
    let (wa, wb, gamma) = (params.omega_a, params.omega_b, params.gamma);
    let kappa_at = |t: f64| schedule.map_or(params.kappa, |s| s.kappa_at(t));
    // coupling switch times strictly inside the run
    let boundaries: Vec<f64> = schedule
        .map(|s| s.segments().iter().map(|&(ts, _)| ts).filter(|&ts| ts > t0 && ts < cfg.t_end).collect())
        .unwrap_or_default();

    let tol = Tolerances {
        rel: cfg.rel_tol,
        abs: cfg.abs_tol,
        max_step: cfg.max_step,
    };
    let limit_sqr = cfg.divergence_limit * cfg.divergence_limit;

    let mut kappa = kappa_at(t0);
    let rhs = move |_t: f64, y: &[f64; 4], kappa: f64| -> [f64; 4] {
        let (ar, ai, br, bi) = (y[0], y[1], y[2], y[3]);
        let g = gain.rate((ar * ar + ai * ai).sqrt());
        // (−iω + g)(ar + i ai) − iκ(br + i bi)
        [
            g * ar + wa * ai + kappa * bi,
            g * ai - wa * ar - kappa * br,
            -gamma * br + wb * bi + kappa * ai,
            -gamma * bi - wb * br - kappa * ar,
        ]
    };

    let mut traj = Trajectory::default();
    traj.samples.push(make_sample(params, gain, kappa, initial));

    let mut f = |t: f64, y: &[f64; 4]| rhs(t, y, kappa);
    let mut stepper = Dopri5::new(&mut f, t0, pack(&initial), tol);
    let mut next_boundary = 0usize;
    let mut k = 1u64;
    loop {
        let t_sample = (t0 + k as f64 * cfg.record_stride).min(cfg.t_end);
        // cross any coupling switches before the next output time
        while next_boundary < boundaries.len() && boundaries[next_boundary] <= t_sample {
            let tb = boundaries[next_boundary];
            let mut f = |t: f64, y: &[f64; 4]| rhs(t, y, kappa);
            if let Err(u) = stepper.advance_to(&mut f, tb) {
                return Err(Error::StepUnderflow { t: u.t, partial: Box::new(traj) });
            }
            kappa = kappa_at(tb);
            let mut f = |t: f64, y: &[f64; 4]| rhs(t, y, kappa);
            stepper = restart(stepper, &mut f, tol);
            next_boundary += 1;
        }
        let mut f = |t: f64, y: &[f64; 4]| rhs(t, y, kappa);
        if let Err(u) = stepper.advance_to(&mut f, t_sample) {
            return Err(Error::StepUnderflow { t: u.t, partial: Box::new(traj) });
        }
        let state = unpack(stepper.y(), t_sample);
        let n = state.norm_sqr();
        if !(n <= limit_sqr) {
            return Err(Error::Divergence {
                t: t_sample,
                limit: cfg.divergence_limit,
                partial: Box::new(traj),
            });
        }
        traj.samples.push(make_sample(params, gain, kappa, state));
        if t_sample >= cfg.t_end {
            break;
        }
        k += 1;
    }
    Ok(traj)
}

fn restart<F>(old: Dopri5<4>, rhs: &mut F, tol: Tolerances) -> Dopri5<4>
where
    F: FnMut(f64, &[f64; 4]) -> [f64; 4],
{
    Dopri5::new(rhs, old.t(), *old.y(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateReport {
    pub converged: bool,
    /// Earliest time after which `|ψ_B|²` stays inside the relative band.
    pub t_settle: Option<f64>,
    /// Trailing-window mean of `ω_B |ψ_B|²`.
    pub e_steady: f64,
    /// Trailing-window mean of the instantaneous gain.
    pub g_measured: f64,
    /// Oscillation frequency of `ψ_B`, when a steady single mode is present.
    pub mode_frequency: Option<f64>,
}

fn relative_spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        n += 1;
    }
    let mean = sum / n as f64;
    if mean > 0.0 {
        (hi - lo) / mean
    } else {
        f64::INFINITY
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Check whether `|ψ_B|²` has flattened out over the trailing `window`.
pub fn detect_steady_state(traj: &Trajectory, window: f64, threshold: f64) -> Result<SteadyStateReport> {
    if !(window > 0.0) || !(threshold > 0.0) {
        return Err(Error::invalid("window/threshold", "must be > 0"));
    }
    if traj.duration() < 2.0 * window {
        return Err(Error::MeasurementUnavailable("trajectory shorter than two detector windows"));
    }
    let end = traj.last().map(|s| s.t()).unwrap_or(0.0);
    let tail = traj.tail_from(end - window);
    let converged = relative_spread(tail.iter().map(|s| s.state.psi_b.norm_sqr())) < threshold;

    let t_settle = converged.then(|| settle_time(&traj.samples, threshold));
    let mode_frequency = if converged {
        measure_mode_frequency(traj, window).ok()
    } else {
        None
    };
    Ok(SteadyStateReport {
        converged,
        t_settle,
        e_steady: mean(tail.iter().map(|s| s.e)),
        g_measured: mean(tail.iter().map(|s| s.gain)),
        mode_frequency,
    })
}

/// Earliest sample time from which every later `|ψ_B|²` lies in the band.
fn settle_time(samples: &[Sample], threshold: f64) -> f64 {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mut settle = samples.last().map(|s| s.t()).unwrap_or(0.0);
    for (n, s) in samples.iter().rev().enumerate() {
        let v = s.state.psi_b.norm_sqr();
        let (lo2, hi2, sum2) = (lo.min(v), hi.max(v), sum + v);
        let m = sum2 / (n + 1) as f64;
        if !(m > 0.0 && (hi2 - lo2) / m < threshold) {
            break;
        }
        (lo, hi, sum) = (lo2, hi2, sum2);
        settle = s.t();
    }
    settle
}

/// Mean of `−d(arg ψ_B)/dt` over the trailing `window`, by a least-squares
/// line through the unwrapped phase.
pub fn measure_mode_frequency(traj: &Trajectory, window: f64) -> Result<f64> {
    let end = traj.last().map(|s| s.t()).ok_or(Error::MeasurementUnavailable("empty trajectory"))?;
    let tail = traj.tail_from(end - window);
    if tail.len() < 3 {
        return Err(Error::MeasurementUnavailable("too few samples in window"));
    }
    if !(relative_spread(tail.iter().map(|s| s.state.psi_b.norm_sqr())) < DEFAULT_STEADY_THRESHOLD) {
        return Err(Error::MeasurementUnavailable("no steady single-mode segment"));
    }
    let t_ref = tail[0].t();
    let mut phase = tail[0].state.psi_b.arg();
    let mut prev = phase;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (i, s) in tail.iter().enumerate() {
        let raw = s.state.psi_b.arg();
        if i > 0 {
            let mut d = raw - prev;
            while d > core::f64::consts::PI {
                d -= 2.0 * core::f64::consts::PI;
            }
            while d <= -core::f64::consts::PI {
                d += 2.0 * core::f64::consts::PI;
            }
            phase += d;
        }
        prev = raw;
        let x = s.t() - t_ref;
        sx += x;
        sy += phase;
        sxx += x * x;
        sxy += x * phase;
    }
    let n = tail.len() as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(-slope)
}
