//! Two magnetically coupled LC tanks with an op-amp negative resistor on
//! tank A and a load resistor on tank B, integrated without the rotating
//! wave approximation, plus the map onto the coupled-mode parameters and a
//! cross-check of the two pictures.
//!
//! Everything here is SI (volts, amperes, seconds, ohms) except the mapped
//! [`SystemParams`] and the frequency and rate metrics of
//! [`CrossValidation`], which are in units of `ω0 = 1/√(LC)`.
//!
//! State equations, with `I_inj(U_A)` the current the gain network pushes
//! into node A:
//!
//! ```text
//! L İ_A − M İ_B = U_A        C U̇_A = −I_A + I_inj(U_A)
//! L İ_B − M İ_A = U_B        C U̇_B = −I_B − U_B/R_B
//! ```

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::{integrate_with_gain, IntegrationConfig, Trajectory};
use crate::envelope::extract_envelope_every;
use crate::error::{Error, Result};
use crate::model::{classify_region, AmplitudeState, Gain, GainModel, SpectralRegion, SystemParams, DEFAULT_EP_TOL};
use crate::Complex;

/// Relative error allowed between circuit and coupled-mode metrics.
pub const RWA_BUDGET: f64 = 0.03;
/// Time steps per carrier period used when no step is given.
pub const STEPS_PER_PERIOD: f64 = 200.0;
/// Newton tolerance on the node voltage update.
pub const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 40;
/// Relative band for envelope settling.
pub const SETTLE_TOL: f64 = 0.01;
const DIVERGENCE_LIMIT: f64 = 1e100;

/// Shockley diode law parameters, one diode per polarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeParams {
    pub i_s: f64,
    pub v_t: f64,
    pub n: f64,
}

impl Default for DiodeParams {
    /// Small-signal silicon diode: 2.52 nA, n = 1.752, 25.85 mV.
    fn default() -> Self {
        Self { i_s: 2.52e-9, v_t: 0.02585, n: 1.752 }
    }
}

impl DiodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_s > 0.0 && self.i_s.is_finite()) {
            return Err(Error::invalid("i_s", "must be positive"));
        }
        if !(self.v_t > 0.0 && self.v_t.is_finite()) {
            return Err(Error::invalid("v_t", "must be positive"));
        }
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(Error::invalid("n", "ideality factor must be >= 1"));
        }
        Ok(())
    }

    /// Voltage across the antiparallel pair carrying current `i`.
    fn pair_voltage(&self, i: f64) -> (f64, f64) {
        let nvt = self.n * self.v_t;
        let s = 2.0 * self.i_s;
        (nvt * (i / s).asinh(), nvt / (i * i + s * s).sqrt())
    }

    /// Small-signal resistance of the antiparallel pair.
    pub fn small_signal_resistance(&self) -> f64 {
        self.n * self.v_t / (2.0 * self.i_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainNetwork {
    /// Non-inverting buffer with gain `1 + R_f/R_g` driving node A through a
    /// resistor equal to `R_B`: a negative resistance `−R_B R_g/R_f`.
    LinearBuffer { r_f: f64, r_g: f64 },
    /// Op-amp with an antiparallel diode pair in the feedback path.
    DiodeNetwork { r_1: f64, r_2: f64, r_g: f64, diode: DiodeParams },
    /// Tank A left passive and lossless.
    None,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub l: f64,
    pub c: f64,
    pub m_over_l: f64,
    /// Load resistance; `f64::INFINITY` leaves tank B lossless.
    pub r_b: f64,
    pub gain_network: GainNetwork,
    /// Op-amp output rails (±V); `None` for an unbounded output.
    pub rails: Option<f64>,
}

impl CircuitParams {
    pub fn linear(l: f64, c: f64, m_over_l: f64, r_b: f64, r_f: f64, r_g: f64) -> Self {
        Self { l, c, m_over_l, r_b, gain_network: GainNetwork::LinearBuffer { r_f, r_g }, rails: None }
    }

    pub fn diode(l: f64, c: f64, m_over_l: f64, r_b: f64, r_1: f64, r_2: f64, r_g: f64) -> Self {
        Self {
            l,
            c,
            m_over_l,
            r_b,
            gain_network: GainNetwork::DiodeNetwork { r_1, r_2, r_g, diode: DiodeParams::default() },
            rails: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("l", self.l)?;
        positive("c", self.c)?;
        if !(self.m_over_l > 0.0 && self.m_over_l < 1.0) {
            return Err(Error::invalid("m_over_l", "must lie in (0, 1)"));
        }
        if !(self.r_b > 0.0) || self.r_b.is_nan() {
            return Err(Error::invalid("r_b", "must be positive (infinite allowed)"));
        }
        match self.gain_network {
            GainNetwork::LinearBuffer { r_f, r_g } => {
                positive("r_f", r_f)?;
                positive("r_g", r_g)?;
                if self.r_b.is_infinite() {
                    return Err(Error::invalid("r_b", "the buffer network needs a finite R_B"));
                }
            }
            GainNetwork::DiodeNetwork { r_1, r_2, r_g, diode } => {
                positive("r_1", r_1)?;
                positive("r_2", r_2)?;
                positive("r_g", r_g)?;
                diode.validate()?;
            }
            GainNetwork::None => {}
        }
        if let Some(r) = self.rails {
            positive("rails", r)?;
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        1.0 / (self.l * self.c).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0()
    }

    pub fn default_dt_max(&self) -> f64 {
        self.period() / STEPS_PER_PERIOD
    }

    pub fn mutual(&self) -> f64 {
        self.m_over_l * self.l
    }

    /// Current injected into node A and its slope `dI/dU_A`.
    pub fn injected_current(&self, u: f64) -> (f64, f64) {
        let clip = |v: f64| match self.rails {
            Some(r) if v.abs() > r => (r.copysign(v), true),
            _ => (v, false),
        };
        match self.gain_network {
            GainNetwork::LinearBuffer { r_f, r_g } => {
                let (out, clipped) = clip((1.0 + r_f / r_g) * u);
                let slope = if clipped { -1.0 } else { r_f / r_g };
                ((out - u) / self.r_b, slope / self.r_b)
            }
            GainNetwork::DiodeNetwork { r_1, r_2, r_g, diode } => {
                let (v_d, dv) = diode.pair_voltage(u / r_g);
                let (out, clipped) = clip(u + v_d);
                let d_out = if clipped { 0.0 } else { 1.0 + dv / r_g };
                ((out - u) / r_1 - u / r_2, (d_out - 1.0) / r_1 - 1.0 / r_2)
            }
            GainNetwork::None => (0.0, 0.0),
        }
    }

    fn load_conductance(&self) -> f64 {
        if self.r_b.is_infinite() {
            0.0
        } else {
            1.0 / self.r_b
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitState {
    pub u_a: f64,
    pub u_b: f64,
    pub i_a: f64,
    pub i_b: f64,
    pub t: f64,
}

impl Default for CircuitState {
    /// `U_A = 1 V`, everything else zero.
    fn default() -> Self {
        Self { u_a: 1.0, u_b: 0.0, i_a: 0.0, i_b: 0.0, t: 0.0 }
    }
}

impl CircuitState {
    fn vector(&self) -> [f64; 4] {
        [self.u_a, self.u_b, self.i_a, self.i_b]
    }

    fn from_vector(x: &[f64; 4], t: f64) -> Self {
        Self { u_a: x[0], u_b: x[1], i_a: x[2], i_b: x[3], t }
    }

    /// Stored tank energy (J).
    pub fn energy(&self, cp: &CircuitParams) -> f64 {
        let m = cp.mutual();
        0.5 * cp.c * (self.u_a * self.u_a + self.u_b * self.u_b)
            + 0.5 * cp.l * (self.i_a * self.i_a + self.i_b * self.i_b)
            - m * self.i_a * self.i_b
    }

    fn is_finite(&self) -> bool {
        self.vector().iter().all(|v| v.is_finite())
    }
}

struct Rhs<'a> {
    cp: &'a CircuitParams,
    l: f64,
    m: f64,
    det: f64,
    g_b: f64,
}

impl<'a> Rhs<'a> {
    fn new(cp: &'a CircuitParams) -> Self {
        let (l, m) = (cp.l, cp.mutual());
        Self { cp, l, m, det: l * l - m * m, g_b: cp.load_conductance() }
    }

    /// Derivative and the one state-dependent Jacobian entry `∂f0/∂U_A`.
    fn eval(&self, x: &[f64; 4]) -> ([f64; 4], f64) {
        let c = self.cp.c;
        let (i_inj, di) = self.cp.injected_current(x[0]);
        (
            [
                (-x[2] + i_inj) / c,
                (-x[3] - x[1] * self.g_b) / c,
                (self.l * x[0] + self.m * x[1]) / self.det,
                (self.m * x[0] + self.l * x[1]) / self.det,
            ],
            di / c,
        )
    }

    fn jacobian(&self, j00: f64) -> [[f64; 4]; 4] {
        let c = self.cp.c;
        [
            [j00, 0.0, -1.0 / c, 0.0],
            [0.0, -self.g_b / c, 0.0, -1.0 / c],
            [self.l / self.det, self.m / self.det, 0.0, 0.0],
            [self.m / self.det, self.l / self.det, 0.0, 0.0],
        ]
    }
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let mut s = b[row];
        for k in row + 1..4 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// One trapezoidal step by Newton iteration; `None` if Newton stalls.
fn trapezoid_step(rhs: &Rhs, x: &[f64; 4], f_x: &[f64; 4], h: f64) -> Option<[f64; 4]> {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = x[i] + h * f_x[i];
    }
    for _ in 0..NEWTON_MAX_ITER {
        let (f_y, j00) = rhs.eval(&y);
        let mut r = [0.0; 4];
        for i in 0..4 {
            r[i] = -(y[i] - x[i] - 0.5 * h * (f_x[i] + f_y[i]));
        }
        let jac = rhs.jacobian(j00);
        let mut a = [[0.0; 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                a[i][k] = if i == k { 1.0 } else { 0.0 } - 0.5 * h * jac[i][k];
            }
        }
        let d = solve4(a, r)?;
        for i in 0..4 {
            y[i] += d[i];
        }
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        let tol_u = NEWTON_TOL.max(1e-13 * y[0].abs().max(y[1].abs()));
        if d[0].abs() <= tol_u && d[1].abs() <= tol_u {
            return Some(y);
        }
    }
    None
}

/// Transient simulation from `initial` to `t_end` (both in seconds).
///
/// Steps are `dt_max` long except for the final landing step; a step whose
/// Newton iteration stalls is retried at half the size.
pub fn simulate_circuit(cp: &CircuitParams, initial: CircuitState, t_end: f64, dt_max: f64) -> Result<Vec<CircuitState>> {
    cp.validate()?;
    positive("dt_max", dt_max)?;
    if !initial.is_finite() {
        return Err(Error::invalid("initial", "state must be finite"));
    }
    if !(t_end > initial.t) || !t_end.is_finite() {
        return Err(Error::invalid("t_end", "must lie after the initial time"));
    }
    let rhs = Rhs::new(cp);
    let dt_floor = dt_max * 1e-9;
    let steps_hint = ((t_end - initial.t) / dt_max).ceil() as usize + 1;
    let mut out = Vec::with_capacity(steps_hint.min(1 << 24));
    out.push(initial);
    let mut x = initial.vector();
    let (mut f_x, _) = rhs.eval(&x);
    let mut t = initial.t;
    let mut h = dt_max;
    let mut k = 0u64;
    while t < t_end {
        // nominal grid times avoid accumulating round-off in t
        let t_grid = initial.t + (k + 1) as f64 * dt_max;
        let target = if h < dt_max { (t + h).min(t_end) } else { t_grid.min(t_end) };
        let step = target - t;
        match trapezoid_step(&rhs, &x, &f_x, step) {
            Some(y) => {
                if y.iter().any(|v| v.abs() > DIVERGENCE_LIMIT) {
                    return Err(Error::CircuitStep { t: target, reason: "state diverged" });
                }
                x = y;
                f_x = rhs.eval(&x).0;
                t = target;
                out.push(CircuitState::from_vector(&x, t));
                if h < dt_max {
                    h = (2.0 * h).min(dt_max);
                    // rejoin the nominal grid once back at full size
                    if h == dt_max {
                        k = ((t - initial.t) / dt_max).floor() as u64;
                        if initial.t + (k + 1) as f64 * dt_max <= t {
                            k += 1;
                        }
                    }
                } else {
                    k += 1;
                }
            }
            None => {
                h = 0.5 * step;
                if h < dt_floor {
                    return Err(Error::CircuitStep { t, reason: "Newton iteration failed below the step floor" });
                }
            }
        }
    }
    Ok(out)
}

/// Coupled-mode parameters for a circuit, in units of its `ω0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModeMap {
    pub params: SystemParams,
    /// `1/√(LC)` in rad/s.
    pub omega0: f64,
    /// Voltage at which the fitted saturable gain equals `g1`
    /// (diode network only); `|ψ_A| = U_A/u_ref`.
    pub u_ref: Option<f64>,
}

/// `κ = ω0 M/(2L)`, `γ = 1/(2C R_B)`, `g = 1/(2C R_A)`.
///
/// The buffer maps to a linear gain. The diode network maps to a saturable
/// gain matched at both ends: `2g1 + γ1` is the small-signal gain and `−γ1`
/// the large-amplitude limit where only `R_2` remains. The amplitude scale
/// is fixed where the describing-function gain equals `g1`.
/// That Lorentzian is only a qualitative stand-in for the diode law; use
/// [`DiodeGain`] for quantitative comparisons.
pub fn map_to_coupled_mode(cp: &CircuitParams) -> Result<CoupledModeMap> {
    cp.validate()?;
    let w0 = cp.omega0();
    let rate = |conductance: f64| conductance / (2.0 * cp.c * w0);
    let kappa = 0.5 * cp.m_over_l;
    let gamma = rate(cp.load_conductance());
    let (gain, u_ref) = match cp.gain_network {
        GainNetwork::LinearBuffer { r_f, r_g } => (GainModel::Linear { g: rate(r_f / (cp.r_b * r_g)) }, None),
        GainNetwork::None => (GainModel::Linear { g: 0.0 }, None),
        GainNetwork::DiodeNetwork { r_2, .. } => {
            let dg = DiodeGain::new(cp, 1.0)?;
            let g_ss = dg.small_signal();
            let gamma1 = rate(1.0 / r_2);
            let g1 = 0.5 * (g_ss - gamma1);
            if !(g1 > 0.0) {
                return Err(Error::invalid("gain_network", "diode network has no small-signal gain"));
            }
            let u_ref = dg.amplitude_at(g1)?;
            (GainModel::NonlinearSaturable { g1, gamma1 }, Some(u_ref))
        }
    };
    let params = SystemParams { omega_a: 1.0, omega_b: 1.0, kappa, gamma, gain };
    params.validate()?;
    Ok(CoupledModeMap { params, omega0: w0, u_ref })
}

/// Gain law of the diode network at the describing-function level, in
/// units of the circuit's `ω0`, with `|ψ_A|` measured in units of `u_scale`
/// volts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeGain {
    cp: CircuitParams,
    u_scale: f64,
    inv_2cw0: f64,
}

const DF_NODES: usize = 256;

impl DiodeGain {
    pub fn new(cp: &CircuitParams, u_scale: f64) -> Result<Self> {
        cp.validate()?;
        if !matches!(cp.gain_network, GainNetwork::DiodeNetwork { .. }) {
            return Err(Error::Unsupported("describing-function gain needs the diode network"));
        }
        positive("u_scale", u_scale)?;
        Ok(Self { cp: *cp, u_scale, inv_2cw0: 1.0 / (2.0 * cp.c * cp.omega0()) })
    }

    /// First-harmonic conductance `(1/πA)∮ I(A sin θ) sin θ dθ` (S).
    pub fn describing_conductance(&self, amplitude: f64) -> f64 {
        if amplitude == 0.0 {
            return self.cp.injected_current(0.0).1;
        }
        // odd characteristic: four times the quarter period, Simpson's rule
        let h = 0.5 * PI / DF_NODES as f64;
        let mut acc = 0.0;
        for k in 0..=DF_NODES {
            let th = k as f64 * h;
            let w = if k == 0 || k == DF_NODES { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.cp.injected_current(amplitude * th.sin()).0 * th.sin();
        }
        4.0 * acc * h / 3.0 / (PI * amplitude)
    }

    pub fn small_signal(&self) -> f64 {
        self.describing_conductance(0.0) * self.inv_2cw0
    }

    /// Voltage amplitude where the gain equals `target` (units of ω0).
    pub fn amplitude_at(&self, target: f64) -> Result<f64> {
        let g = |a: f64| self.describing_conductance(a) * self.inv_2cw0;
        let (mut lo, mut hi) = (1e-12, 1e-12);
        let g_lo = g(lo);
        while g(hi) > target {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoCrossing { target, lo: g(1e12), hi: g_lo });
            }
        }
        if g_lo < target {
            return Err(Error::NoCrossing { target, lo: g(hi), hi: g_lo });
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if g(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-14 {
                break;
            }
        }
        Ok((lo * hi).sqrt())
    }
}

impl Gain for DiodeGain {
    fn rate(&self, psi_a_abs: f64) -> f64 {
        self.describing_conductance(psi_a_abs * self.u_scale) * self.inv_2cw0
    }
}

/// Mean angular frequency from upward zero crossings (rad/s).
pub fn measure_carrier_frequency(samples: &[(f64, f64)]) -> Result<f64> {
    let mut crossings = Vec::new();
    for w in samples.windows(2) {
        let ((t0, x0), (t1, x1)) = (w[0], w[1]);
        if x0 < 0.0 && x1 >= 0.0 {
            crossings.push(t0 + (t1 - t0) * (-x0) / (x1 - x0));
        }
    }
    if crossings.len() < 2 {
        return Err(Error::MeasurementUnavailable("fewer than two zero crossings"));
    }
    let n = crossings.len();
    Ok(2.0 * PI * (n - 1) as f64 / (crossings[n - 1] - crossings[0]))
}

/// Times of the envelope nodes, refined by a parabola through `a²`.
pub fn envelope_nodes(env: &[(f64, f64)]) -> Vec<f64> {
    let peak = env.iter().fold(0.0f64, |m, &(_, a)| m.max(a));
    let mut nodes = Vec::new();
    for k in 1..env.len().saturating_sub(1) {
        let (y0, y1, y2) = (env[k - 1].1.powi(2), env[k].1.powi(2), env[k + 1].1.powi(2));
        if y1 < y0 && y1 <= y2 && env[k].1 < 0.5 * peak {
            let (t0, t1, t2) = (env[k - 1].0, env[k].0, env[k + 1].0);
            // vertex of the parabola through the three points
            let num = (t1 - t0).powi(2) * (y1 - y2) - (t1 - t2).powi(2) * (y1 - y0);
            let den = (t1 - t0) * (y1 - y2) - (t1 - t2) * (y1 - y0);
            nodes.push(if den != 0.0 { t1 - 0.5 * num / den } else { t1 });
        }
    }
    nodes
}

/// Envelope beat `Ω` (rad/s) with nodes `π/Ω` apart.
pub fn beat_frequency(env: &[(f64, f64)]) -> Result<f64> {
    let nodes = envelope_nodes(env);
    if nodes.len() < 2 {
        return Err(Error::MeasurementUnavailable("fewer than two envelope nodes"));
    }
    let n = nodes.len();
    Ok(PI * (n - 1) as f64 / (nodes[n - 1] - nodes[0]))
}

/// Least-squares slope of `ln a` over `t ∈ [t_from, t_to]` (1/s).
pub fn log_growth_rate(env: &[(f64, f64)], t_from: f64, t_to: f64) -> Result<f64> {
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, a) in env.iter().filter(|(t, a)| *t >= t_from && *t <= t_to && *a > 0.0) {
        let x = t - t_from;
        let y = a.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1.0;
    }
    if n < 3.0 {
        return Err(Error::MeasurementUnavailable("too few envelope samples for a growth fit"));
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settling {
    pub converged: bool,
    /// Mean envelope over the trailing fifth of the record.
    pub final_value: f64,
    pub t_settle: Option<f64>,
}

/// Whether the envelope has flattened to within `tol` (relative) over its
/// trailing fifth, and since when it stays in that band.
pub fn envelope_settling(env: &[(f64, f64)], tol: f64) -> Result<Settling> {
    let (t_first, t_last) = match (env.first(), env.last()) {
        (Some(a), Some(b)) if b.0 > a.0 => (a.0, b.0),
        _ => return Err(Error::MeasurementUnavailable("envelope too short")),
    };
    let cut = t_last - 0.2 * (t_last - t_first);
    let tail: Vec<f64> = env.iter().filter(|(t, _)| *t >= cut).map(|&(_, a)| a).collect();
    let final_value = tail.iter().sum::<f64>() / tail.len() as f64;
    let band = tol * final_value;
    let converged = final_value > 0.0 && tail.iter().all(|a| (a - final_value).abs() <= band);
    let t_settle = if converged {
        let mut t_s = t_last;
        for &(t, a) in env.iter().rev() {
            if (a - final_value).abs() > band {
                break;
            }
            t_s = t;
        }
        Some(t_s)
    } else {
        None
    };
    Ok(Settling { converged, final_value, t_settle })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub name: &'static str,
    /// Measured on the circuit waveform.
    pub circuit: f64,
    /// Closed-form coupled-mode value, where one exists.
    pub predicted: Option<f64>,
    /// Measured on the integrated coupled-mode trajectory.
    pub coupled_mode: f64,
    /// Relative error of `circuit` against `predicted` (or `coupled_mode`).
    pub rel_error: f64,
    pub budget: Option<f64>,
}

impl Metric {
    fn new(name: &'static str, circuit: f64, predicted: Option<f64>, coupled_mode: f64, budget: Option<f64>) -> Self {
        let reference = predicted.unwrap_or(coupled_mode);
        Self { name, circuit, predicted, coupled_mode, rel_error: (circuit / reference - 1.0).abs(), budget }
    }

    pub fn pass(&self) -> bool {
        self.budget.is_none_or(|b| self.rel_error <= b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub mapped: CoupledModeMap,
    pub region: SpectralRegion,
    pub metrics: Vec<Metric>,
    /// Settling of the `U_B` envelope, reported for the diode network.
    pub circuit_settling: Option<Settling>,
    pub coupled_mode_settling: Option<Settling>,
    pub pass: bool,
}

/// Simulate and compare against the coupled-mode model.
pub fn crossvalidate(cp: &CircuitParams, t_end: f64) -> Result<CrossValidation> {
    let waveform = simulate_circuit(cp, CircuitState::default(), t_end, cp.default_dt_max())?;
    compare_with_coupled_mode(cp, &waveform)
}

fn u_b_envelope(cp: &CircuitParams, waveform: &[CircuitState]) -> Result<Vec<(f64, f64)>> {
    let series: Vec<(f64, f64)> = waveform.iter().map(|s| (s.t, s.u_b)).collect();
    let period = cp.period();
    let dt = (series[series.len() - 1].0 - series[0].0) / (series.len() - 1) as f64;
    // roughly 40 envelope points per carrier period is plenty for the fits
    let every = ((period / 40.0 / dt).floor() as usize).max(1);
    extract_envelope_every(&series, cp.omega0(), every)
}

/// Coupled-mode run in SI time with `|ψ_B|` in volts.
fn coupled_mode_envelope(map: &CoupledModeMap, gain: &dyn Gain, initial: &CircuitState, duration: f64, cp: &CircuitParams) -> Result<Vec<(f64, f64)>> {
    let w0 = map.omega0;
    let wl = w0 * cp.l;
    let state = AmplitudeState::new(
        Complex::new(initial.u_a, -wl * initial.i_a),
        Complex::new(initial.u_b, -wl * initial.i_b),
        0.0,
    );
    let t_end = w0 * duration;
    let cfg = IntegrationConfig::default()
        .with_t_end(t_end)
        .with_stride((t_end / 20_000.0).max(0.01))
        .with_tolerances(1e-10, 1e-13);
    let traj: Trajectory = integrate_with_gain(&map.params, &gain, state, &cfg, None)?;
    Ok(traj.samples.iter().map(|s| (initial.t + s.t() / w0, s.state.psi_b.norm())).collect())
}

struct LinearGain(f64);

impl Gain for LinearGain {
    fn rate(&self, _: f64) -> f64 {
        self.0
    }
}

/// Compare an existing waveform (starting at its first sample) with the
/// coupled-mode model of the same circuit.
pub fn compare_with_coupled_mode(cp: &CircuitParams, waveform: &[CircuitState]) -> Result<CrossValidation> {
    let map = map_to_coupled_mode(cp)?;
    let (first, last) = match (waveform.first(), waveform.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::MeasurementUnavailable("empty waveform")),
    };
    let duration = last.t - first.t;
    let w0 = map.omega0;
    let p = map.params;
    let env = u_b_envelope(cp, waveform)?;
    let ua: Vec<(f64, f64)> = waveform.iter().map(|s| (s.t, s.u_a)).collect();

    let mut metrics = Vec::new();
    // zero crossings of a beating signal are biased, so this one is informational
    let carrier = measure_carrier_frequency(&ua)? / w0;
    metrics.push(Metric::new("carrier_frequency", carrier, Some(1.0), 1.0, None));

    let (region, circuit_settling, coupled_mode_settling) = match cp.gain_network {
        GainNetwork::LinearBuffer { .. } | GainNetwork::None => {
            let g = match p.gain {
                GainModel::Linear { g } => g,
                GainModel::NonlinearSaturable { .. } => unreachable!("linear networks map to linear gains"),
            };
            let cm = coupled_mode_envelope(&map, &LinearGain(g), &first, duration, cp)?;
            // eigenvalues: 1 + i(g − γ)/2 ± √(κ² − ((g + γ)/2)²)
            let mean = 0.5 * (g + p.gamma);
            let region = classify_region(p.kappa, mean, DEFAULT_EP_TOL);
            let disc = p.kappa * p.kappa - mean * mean;
            if region == SpectralRegion::Unbroken {
                let predicted = disc.sqrt();
                // need a couple of nodes inside the record
                if 2.5 * PI / predicted < w0 * duration {
                    let circuit = beat_frequency(&env)? / w0;
                    let sim = beat_frequency(&cm)? / w0;
                    metrics.push(Metric::new("beat_frequency", circuit, Some(predicted), sim, Some(RWA_BUDGET)));
                }
            } else {
                let predicted = 0.5 * (g - p.gamma) + (-disc).max(0.0).sqrt();
                let (t_from, t_to) = (first.t + 0.5 * duration, last.t);
                let circuit = log_growth_rate(&env, t_from, t_to)? / w0;
                let sim = log_growth_rate(&cm, t_from, t_to)? / w0;
                metrics.push(Metric::new("growth_rate", circuit, Some(predicted), sim, Some(RWA_BUDGET)));
            }
            (region, None, None)
        }
        GainNetwork::DiodeNetwork { .. } => {
            let gain = DiodeGain::new(cp, 1.0)?;
            let cm = coupled_mode_envelope(&map, &gain, &first, duration, cp)?;
            let c_set = envelope_settling(&env, SETTLE_TOL)?;
            let m_set = envelope_settling(&cm, SETTLE_TOL)?;
            metrics.push(Metric::new("steady_amplitude_b", c_set.final_value, None, m_set.final_value, Some(RWA_BUDGET)));
            if let (Some(tc), Some(tm)) = (c_set.t_settle, m_set.t_settle) {
                metrics.push(Metric::new("settle_time", tc - first.t, None, tm - first.t, None));
            }
            (classify_region(p.kappa, p.gamma, DEFAULT_EP_TOL), Some(c_set), Some(m_set))
        }
    };
    let settled = circuit_settling.is_none_or(|s| s.converged);
    let pass = settled && metrics.iter().all(Metric::pass);
    Ok(CrossValidation { mapped: map, region, metrics, circuit_settling, coupled_mode_settling, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    const L: f64 = 2.32e-3;
    const C: f64 = 10.7e-9;

    #[test]
    fn mapping_of_reference_tanks() {
        let cp = CircuitParams::linear(L, C, 0.2, 3000.0, 1000.0, 1000.0);
        let map = map_to_coupled_mode(&cp).unwrap();
        let f0 = map.omega0 / (2.0 * PI);
        assert!((f0 - 31.9e3).abs() < 0.1e3, "{f0}");
        assert!((map.params.kappa - 0.1).abs() < 1e-15);
        let gamma_si = 1.0 / (2.0 * C * 3000.0);
        assert!((map.params.gamma * map.omega0 - gamma_si).abs() < 1e-9 * gamma_si);
        assert_eq!(map.params.gain, GainModel::Linear { g: map.params.gamma });
        assert!(map.params.gamma < map.params.kappa);

        let broken = map_to_coupled_mode(&CircuitParams { r_b: 2000.0, ..cp }).unwrap();
        let gamma_si = 1.0 / (2.0 * C * 2000.0);
        assert!((gamma_si - 2.336e4).abs() < 0.001e4);
        assert!((broken.params.gamma - 0.116).abs() < 0.001);
        assert!(broken.params.gamma > broken.params.kappa);
    }

    #[test]
    fn buffer_ratio_sets_gain() {
        let cp = CircuitParams::linear(L, C, 0.2, 3000.0, 2000.0, 1000.0);
        let map = map_to_coupled_mode(&cp).unwrap();
        match map.params.gain {
            GainModel::Linear { g } => assert!((g - 2.0 * map.params.gamma).abs() < 1e-15),
            _ => panic!(),
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let good = CircuitParams::linear(L, C, 0.2, 3000.0, 1000.0, 1000.0);
        assert!(good.validate().is_ok());
        assert!(CircuitParams { l: 0.0, ..good }.validate().is_err());
        assert!(CircuitParams { m_over_l: 1.0, ..good }.validate().is_err());
        assert!(CircuitParams { r_b: -1.0, ..good }.validate().is_err());
        assert!(CircuitParams { r_b: f64::INFINITY, ..good }.validate().is_err());
        assert!(CircuitParams { r_b: f64::INFINITY, gain_network: GainNetwork::None, ..good }.validate().is_ok());
        assert!(CircuitParams { rails: Some(0.0), ..good }.validate().is_err());
        let bad_diode = GainNetwork::DiodeNetwork {
            r_1: 500.0,
            r_2: 1e4,
            r_g: 5e3,
            diode: DiodeParams { n: 0.5, ..DiodeParams::default() },
        };
        assert!(CircuitParams { gain_network: bad_diode, ..good }.validate().is_err());
    }

    #[test]
    fn diode_pair_inverts_shockley_law() {
        let d = DiodeParams::default();
        for v in [-0.7, -0.2, 0.0, 1e-4, 0.3, 0.65] {
            let nvt = d.n * d.v_t;
            let i = d.i_s * ((v / nvt).exp() - 1.0) - d.i_s * ((-v / nvt).exp() - 1.0);
            let (back, _) = d.pair_voltage(i);
            assert!((back - v).abs() < 1e-12, "{v} -> {back}");
        }
        assert!((d.small_signal_resistance() - 1.752 * 0.02585 / 5.04e-9).abs() < 1e-3);
    }

    #[test]
    fn injected_current_slopes() {
        let diode = CircuitParams::diode(L, C, 0.2, 1000.0, 500.0, 1e4, 5e3);
        let buffer = CircuitParams { rails: Some(15.0), ..CircuitParams::linear(L, C, 0.2, 3000.0, 1000.0, 1000.0) };
        for cp in [diode, buffer] {
            for u in [-9.0, -1.0, -1e-6, 0.0, 3e-5, 0.4, 2.0, 8.0] {
                let h = 1e-7 * (1.0 + u.abs());
                let fd = (cp.injected_current(u + h).0 - cp.injected_current(u - h).0) / (2.0 * h);
                let (_, d) = cp.injected_current(u);
                assert!((fd - d).abs() < 1e-5 * d.abs().max(1e-3), "u={u}: {fd} vs {d}");
            }
        }
        // rails clip the buffer at 7.5 V input for unit gain ratio
        assert_eq!(buffer.injected_current(10.0).0, (15.0 - 10.0) / 3000.0);
    }

    #[test]
    fn describing_function_limits() {
        let cp = CircuitParams::diode(L, C, 0.2, 1000.0, 500.0, 1e4, 5e3);
        let dg = DiodeGain::new(&cp, 1.0).unwrap();
        let d = DiodeParams::default();
        let g_ss = d.small_signal_resistance() / (500.0 * 5e3) - 1e-4;
        assert!((dg.describing_conductance(1e-9) / g_ss - 1.0).abs() < 1e-6);
        // large amplitude: only −1/R_2 survives
        assert!((dg.describing_conductance(1e9) + 1e-4).abs() < 1e-7);
        let mut prev = f64::INFINITY;
        for amp in [1e-6, 1e-4, 1e-2, 1.0, 10.0] {
            let g = dg.describing_conductance(amp);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn buffer_has_no_describing_gain() {
        let cp = CircuitParams::linear(L, C, 0.2, 3000.0, 1000.0, 1000.0);
        assert!(matches!(DiodeGain::new(&cp, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn diode_map_is_saturable() {
        let cp = CircuitParams::diode(L, C, 0.2, 1000.0, 500.0, 1e4, 5e3);
        let map = map_to_coupled_mode(&cp).unwrap();
        let u_ref = map.u_ref.unwrap();
        match map.params.gain {
            GainModel::NonlinearSaturable { g1, gamma1 } => {
                assert!((gamma1 - 1.0 / (2.0 * C * 1e4 * map.omega0)).abs() < 1e-15);
                let dg = DiodeGain::new(&cp, 1.0).unwrap();
                assert!((dg.rate(u_ref) / g1 - 1.0).abs() < 1e-9);
                assert!((dg.small_signal() - (2.0 * g1 + gamma1)).abs() < 1e-9 * g1);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn newton_solver_exact_for_linear_system() {
        let a = [[4.0, 1.0, 0.0, 2.0], [1.0, 3.0, 0.5, 0.0], [0.0, 0.5, 2.0, 1.0], [2.0, 0.0, 1.0, 5.0]];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = [0.0; 4];
        for i in 0..4 {
            for k in 0..4 {
                b[i] += a[i][k] * x[k];
            }
        }
        let got = solve4(a, b).unwrap();
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-13);
        }
        assert!(solve4([[0.0; 4]; 4], b).is_none());
    }

    #[test]
    fn lossless_tank_conserves_energy() {
        let cp = CircuitParams {
            l: L,
            c: C,
            m_over_l: 0.2,
            r_b: f64::INFINITY,
            gain_network: GainNetwork::None,
            rails: None,
        };
        let t_end = 100.0 * cp.period();
        let w = simulate_circuit(&cp, CircuitState::default(), t_end, cp.default_dt_max()).unwrap();
        let e0 = w[0].energy(&cp);
        let worst = w.iter().map(|s| (s.energy(&cp) / e0 - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        assert_eq!(w.last().unwrap().t, t_end);
    }

    #[test]
    fn grid_lands_on_end() {
        let cp = CircuitParams::linear(L, C, 0.2, 3000.0, 1000.0, 1000.0);
        let dt = cp.default_dt_max();
        let w = simulate_circuit(&cp, CircuitState::default(), 10.3 * dt, dt).unwrap();
        assert_eq!(w.len(), 12);
        assert_eq!(w.last().unwrap().t, 10.3 * dt);
        for pair in w.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }

    #[test]
    fn deterministic() {
        let cp = CircuitParams::diode(L, C, 0.2, 1000.0, 500.0, 1e4, 5e3);
        let run = || simulate_circuit(&cp, CircuitState::default(), 2e-4, cp.default_dt_max()).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn simulate_rejects_bad_input() {
        let cp = CircuitParams::linear(L, C, 0.2, 3000.0, 1000.0, 1000.0);
        assert!(simulate_circuit(&cp, CircuitState::default(), 0.0, 1e-7).is_err());
        assert!(simulate_circuit(&cp, CircuitState::default(), 1e-3, 0.0).is_err());
        let nan = CircuitState { u_a: f64::NAN, ..CircuitState::default() };
        assert!(simulate_circuit(&cp, nan, 1e-3, 1e-7).is_err());
    }

    #[test]
    fn measurement_helpers() {
        let w: Vec<(f64, f64)> = (0..20_000).map(|i| {
            let t = i as f64 * 1e-3;
            (t, (3.0 * t + 0.2).sin())
        }).collect();
        assert!((measure_carrier_frequency(&w).unwrap() - 3.0).abs() < 1e-6);
        let env: Vec<(f64, f64)> = (0..5000).map(|i| {
            let t = i as f64 * 0.01;
            (t, (0.5 * t).sin().abs())
        }).collect();
        assert!((beat_frequency(&env).unwrap() - 0.5).abs() < 1e-6);
        let grow: Vec<(f64, f64)> = (0..100).map(|i| {
            let t = i as f64 * 0.1;
            (t, 2.0 * (0.3 * t).exp())
        }).collect();
        assert!((log_growth_rate(&grow, 0.0, 10.0).unwrap() - 0.3).abs() < 1e-12);
        let settle: Vec<(f64, f64)> = (0..1000).map(|i| {
            let t = i as f64 * 0.01;
            (t, 1.0 - (-t).exp())
        }).collect();
        let s = envelope_settling(&settle, 0.01).unwrap();
        assert!(s.converged);
        let ts = s.t_settle.unwrap();
        assert!(ts > 4.0 && ts < 5.0, "{ts}");
    }
}
