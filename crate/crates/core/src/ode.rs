//! Dormand–Prince 5(4) with PI step-size control over fixed-size real state
//! vectors.
//!
//! Callers advance the solution to chosen output times with
//! [`Dopri5::advance_to`]; the last internal step is shortened to land on the
//! target exactly, and the controller's proposed step is kept so that output
//! spacing does not throttle the step size.

#[allow(unused_imports)]
use num_traits::Float;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

/// Step size collapsed below the floating-point floor at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepUnderflow {
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    t: f64,
    y: [f64; N],
    dy: [f64; N],
    h: f64,
    err_prev: f64,
    tol: Tolerances,
    accepted: usize,
    rejected: usize,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

impl<const N: usize> Dopri5<N> {
    pub fn new<F>(rhs: &mut F, t0: f64, y0: [f64; N], tol: Tolerances) -> Self
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let dy = rhs(t0, &y0);
        let mut s = Self {
            t: t0,
            y: y0,
            dy,
            h: 0.0,
            err_prev: 1e-4,
            tol,
            accepted: 0,
            rejected: 0,
        };
        s.h = s.initial_step(rhs);
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Derivative at the current point (first-same-as-last stage).
    pub fn dy(&self) -> &[f64; N] {
        &self.dy
    }

    pub fn steps(&self) -> (usize, usize) {
        (self.accepted, self.rejected)
    }

    fn scale(&self, i: usize, a: &[f64; N], b: &[f64; N]) -> f64 {
        self.tol.abs + self.tol.rel * a[i].abs().max(b[i].abs())
    }

    // Hairer, Nørsett & Wanner, starting step heuristic.
    fn initial_step<F>(&self, rhs: &mut F) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..N {
            let sc = self.scale(i, &self.y, &self.y);
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.dy[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.tol.max_step);
        let y1 = axpy(&self.y, &[(h0, &self.dy)]);
        let f1 = rhs(self.t + h0, &y1);
        let mut d2 = 0.0;
        for i in 0..N {
            d2 += ((f1[i] - self.dy[i]) / self.scale(i, &self.y, &self.y)).powi(2);
        }
        let d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.tol.max_step)
    }

    /// Integrate until `t == t_target` exactly.
    pub fn advance_to<F>(&mut self, rhs: &mut F, t_target: f64) -> Result<(), StepUnderflow>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        while self.t < t_target {
            let remaining = t_target - self.t;
            let clamped = self.h >= remaining;
            let h = if clamped { remaining } else { self.h };
            if h <= 4.0 * f64::EPSILON * self.t.abs().max(1.0) {
                if clamped {
                    // remaining gap is below time resolution
                    self.t = t_target;
                    return Ok(());
                }
                return Err(StepUnderflow { t: self.t });
            }
            let (y_new, dy_new, err) = self.attempt(rhs, h);
            if err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-ALPHA) * self.err_prev.powf(BETA)).clamp(FAC_MIN, FAC_MAX)
                };
                self.err_prev = err.max(1e-4);
                self.t = if clamped { t_target } else { self.t + h };
                self.y = y_new;
                self.dy = dy_new;
                self.accepted += 1;
                let proposed = (h * fac).min(self.tol.max_step);
                // a shortened landing step says nothing about the natural step size
                self.h = if clamped { self.h.max(proposed) } else { proposed };
            } else {
                self.rejected += 1;
                let fac = if err.is_finite() {
                    (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0)
                } else {
                    FAC_MIN
                };
                self.h = h * fac;
            }
        }
        Ok(())
    }

    fn attempt<F>(&self, rhs: &mut F, h: f64) -> ([f64; N], [f64; N], f64)
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let (t, y, k1) = (self.t, &self.y, &self.dy);
        let k2 = rhs(t + C2 * h, &axpy(y, &[(h * A21, k1)]));
        let k3 = rhs(t + C3 * h, &axpy(y, &[(h * A31, k1), (h * A32, &k2)]));
        let k4 = rhs(t + C4 * h, &axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]));
        let k5 = rhs(
            t + C5 * h,
            &axpy(y, &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(y, &[(h * A61, k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)]),
        );
        let y_new = axpy(y, &[(h * A71, k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)]);
        let k7 = rhs(t + h, &y_new);
        let mut acc = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            acc += (e / self.scale(i, y, &y_new)).powi(2);
        }
        let err = (acc / N as f64).sqrt();
        (y_new, k7, if err.is_nan() { f64::INFINITY } else { err })
    }
}
