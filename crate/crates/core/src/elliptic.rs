//! Complete elliptic integrals by the arithmetic-geometric mean.
//!
//! All functions take the parameter `m = k²`.

use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

const AGM_TOL: f64 = 1e-15;
const AGM_MAX_ITER: usize = 40;

/// AGM sequence summary: `K(m)` and `Σ_{n≥1} 2^n c_n²`.
fn agm(m: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut weight = 1.0;
    let mut tail = 0.0;
    for _ in 0..AGM_MAX_ITER {
        let c = 0.5 * (a - b);
        weight *= 2.0;
        tail += weight * c * c;
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = a_next;
        if c.abs() <= AGM_TOL * a {
            break;
        }
    }
    (FRAC_PI_2 / a, 0.5 * tail)
}

/// `K(m)`, `m ∈ [0, 1)`; `NaN` outside, `+∞` at 1.
pub fn ellip_k(m: f64) -> f64 {
    if !(0.0..=1.0).contains(&m) {
        return f64::NAN;
    }
    if m == 1.0 {
        return f64::INFINITY;
    }
    agm(m).0
}

/// `E(m)`, `m ∈ [0, 1]`; `NaN` outside.
pub fn ellip_e(m: f64) -> f64 {
    if !(0.0..=1.0).contains(&m) {
        return f64::NAN;
    }
    if m == 1.0 {
        return 1.0;
    }
    let (k, tail) = agm(m);
    // E = K (1 − m/2 − Σ_{n≥1} 2^{n−1} c_n²)
    k * (1.0 - 0.5 * m - tail)
}

/// `(2 − m) K(m) − 2 E(m)`, evaluated without cancellation.
///
/// This combination controls the mutual inductance of coaxial loops and
/// vanishes like `π m²/16` as `m → 0`, where the naive difference loses all
/// significant digits.
pub fn maxwell_combination(m: f64) -> f64 {
    if !(0.0..1.0).contains(&m) {
        return if m == 1.0 { f64::INFINITY } else { f64::NAN };
    }
    let (k, tail) = agm(m);
    // 2E = K(2 − m − 2·tail)
    2.0 * k * tail
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint-rule quadrature of the defining integrals.
    fn quad(m: f64) -> (f64, f64) {
        let n = 200_000;
        let h = FRAC_PI_2 / n as f64;
        let (mut k, mut e) = (0.0, 0.0);
        for i in 0..n {
            let th = (i as f64 + 0.5) * h;
            let s = 1.0 - m * th.sin().powi(2);
            k += h / s.sqrt();
            e += h * s.sqrt();
        }
        (k, e)
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(ellip_k(0.0), FRAC_PI_2);
        assert_eq!(ellip_e(0.0), FRAC_PI_2);
        assert_eq!(maxwell_combination(0.0), 0.0);
    }

    #[test]
    fn matches_quadrature() {
        for m in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let (k, e) = quad(m);
            assert!((ellip_k(m) - k).abs() < 1e-10, "K({m})");
            assert!((ellip_e(m) - e).abs() < 1e-10, "E({m})");
        }
    }

    #[test]
    fn legendre_relation() {
        for i in 1..=99 {
            let m = i as f64 / 100.0;
            let mp = 1.0 - m;
            let (k, e, kp, ep) = (ellip_k(m), ellip_e(m), ellip_k(mp), ellip_e(mp));
            let lhs = e * kp + ep * k - k * kp;
            assert!((lhs - FRAC_PI_2).abs() < 1e-12, "m = {m}: {lhs}");
        }
    }

    #[test]
    fn combination_matches_direct_form() {
        for m in [0.05, 0.2, 0.5, 0.8, 0.99] {
            let direct = (2.0 - m) * ellip_k(m) - 2.0 * ellip_e(m);
            // the direct difference itself cancels, so compare at its own accuracy
            assert!((maxwell_combination(m) - direct).abs() < 16.0 * f64::EPSILON * ellip_k(m));
        }
    }

    #[test]
    fn combination_small_parameter() {
        // leading terms: π m²/16 (1 + 3m/4 + ...)
        for m in [1e-4, 1e-6, 1e-8] {
            let series = core::f64::consts::PI * m * m / 16.0 * (1.0 + 0.75 * m);
            let got = maxwell_combination(m);
            assert!((got - series).abs() < 1e-6 * series, "{m}: {got} vs {series}");
        }
    }

    #[test]
    fn domain() {
        assert!(ellip_k(-0.1).is_nan());
        assert!(ellip_k(1.0).is_infinite());
        assert_eq!(ellip_e(1.0), 1.0);
        assert!(ellip_e(1.1).is_nan());
    }
}
