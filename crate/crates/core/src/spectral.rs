//! Eigenfrequencies of the two-mode system, saturated gain of the
//! saturable-gain system, and location of the exceptional arc `γ = κ(d)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{classify_region, GainModel, SpectralRegion, SystemParams, DEFAULT_EP_TOL};
use crate::{Complex, Error, Result};

/// Eigenfrequencies together with the gain each one requires.
///
/// For the linear system every mode carries `g = γ`. For the saturable
/// system the modes `ω0 ± √(κ² − γ²)` carry `g_sat = γ`, while the `ω0` mode
/// only solves the characteristic equation at `g = κ²/γ` and is absent when
/// `γ = 0`. Residual checks must pair each frequency with its own entry of
/// `mode_gains`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub frequencies: Vec<Complex>,
    pub mode_gains: Vec<f64>,
    pub region: SpectralRegion,
    pub g_sat: Option<f64>,
}

fn require_resonant(params: &SystemParams) -> Result<f64> {
    if !params.is_resonant() {
        return Err(Error::Unsupported("detuned resonators (omega_a != omega_b)"));
    }
    Ok(params.omega_a)
}

/// `√(κ² − γ²)` on the principal branch, `i√(γ² − κ²)` when `γ > κ`.
fn detuning_root(kappa: f64, gamma: f64) -> Complex {
    let s = (kappa - gamma) * (kappa + gamma);
    if s >= 0.0 {
        Complex::new(s.sqrt(), 0.0)
    } else {
        Complex::new(0.0, (-s).sqrt())
    }
}

/// Eigenfrequencies of the PT-balanced linear system (`g = γ`).
pub fn linear_eigenfrequencies(params: &SystemParams) -> Result<EigenSet> {
    params.validate()?;
    let omega0 = require_resonant(params)?;
    let (kappa, gamma) = (params.kappa, params.gamma);
    match params.gain {
        GainModel::Linear { g } if (g - gamma).abs() <= 1e-12 * gamma.abs().max(1.0) => {}
        GainModel::Linear { .. } => return Err(Error::Unsupported("linear gain must equal the loss (g = gamma)")),
        GainModel::NonlinearSaturable { .. } => return Err(Error::Unsupported("expected a linear gain model")),
    }
    let root = detuning_root(kappa, gamma);
    Ok(EigenSet {
        frequencies: vec![omega0 + root, omega0 - root],
        mode_gains: vec![gamma, gamma],
        region: classify_region(kappa, gamma, DEFAULT_EP_TOL),
        g_sat: None,
    })
}

/// Saturated gain of the saturable-gain system: `γ` below the exceptional
/// point, `κ²/γ` above it.
pub fn saturated_gain(kappa: f64, gamma: f64) -> f64 {
    if gamma == 0.0 || classify_region(kappa, gamma, DEFAULT_EP_TOL) == SpectralRegion::Unbroken {
        gamma
    } else {
        kappa * kappa / gamma
    }
}

/// Steady-state eigenfrequencies and saturated gain for saturable gain.
pub fn nonlinear_eigenfrequencies(params: &SystemParams) -> Result<EigenSet> {
    params.validate()?;
    let omega0 = require_resonant(params)?;
    if params.gain.is_linear() {
        return Err(Error::Unsupported("expected a saturable gain model"));
    }
    let (kappa, gamma) = (params.kappa, params.gamma);
    let region = classify_region(kappa, gamma, DEFAULT_EP_TOL);
    let w0 = Complex::new(omega0, 0.0);

    if gamma == 0.0 || region == SpectralRegion::Unbroken {
        let root = detuning_root(kappa, gamma);
        if gamma == 0.0 {
            // no finite gain sustains the ω0 mode without loss
            return Ok(EigenSet {
                frequencies: vec![w0 + root, w0 - root],
                mode_gains: vec![0.0, 0.0],
                region,
                g_sat: Some(0.0),
            });
        }
        return Ok(EigenSet {
            frequencies: vec![w0, w0 + root, w0 - root],
            mode_gains: vec![kappa * kappa / gamma, gamma, gamma],
            region,
            g_sat: Some(gamma),
        });
    }

    let g_sat = kappa * kappa / gamma;
    Ok(EigenSet {
        frequencies: vec![w0, w0 + Complex::new(0.0, g_sat - gamma)],
        mode_gains: vec![g_sat, g_sat],
        region,
        g_sat: Some(g_sat),
    })
}

/// `|(ω0 + ig − ω)(ω0 − iγ − ω) − κ²|`.
pub fn characteristic_residual(omega: Complex, g: f64, gamma: f64, kappa: f64, omega0: f64) -> f64 {
    let a = Complex::new(omega0, g) - omega;
    let b = Complex::new(omega0, -gamma) - omega;
    (a * b - kappa * kappa).norm()
}

/// Maximum bisection iterations for [`exceptional_arc`].
pub const ARC_MAX_ITER: usize = 200;

/// Distance `d*` in `d_range` where `coupling(d*) = gamma`, by bisection.
///
/// `tol` bounds `|κ(d*) − γ|`; iteration also stops once the bracket stops
/// shrinking in floating point.
pub fn exceptional_arc<F>(coupling: F, gamma: f64, d_range: (f64, f64), tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = d_range;
    if !(lo < hi) {
        return Err(Error::invalid("d_range", "lower bound must be below upper bound"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    let (k_lo, k_hi) = (coupling(lo), coupling(hi));
    let (f_lo, f_hi) = (k_lo - gamma, k_hi - gamma);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::NoCrossing {
            target: gamma,
            lo: k_lo.min(k_hi),
            hi: k_lo.max(k_hi),
        });
    }
    let lo_sign = f_lo.signum();
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo.abs()) } else { (hi, f_hi.abs()) };
    for _ in 0..ARC_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = coupling(mid) - gamma;
        if f.abs() < best.1 {
            best = (mid, f.abs());
        }
        if f.abs() <= tol {
            return Ok(mid);
        }
        if f.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex, b: Complex, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn linear_unbroken_pair() {
        let e = linear_eigenfrequencies(&SystemParams::pt_linear(0.5, 0.3)).unwrap();
        assert_eq!(e.region, SpectralRegion::Unbroken);
        // √(0.25 − 0.09) = 0.4
        assert!(close(e.frequencies[0], Complex::new(1.4, 0.0), 1e-14));
        assert!(close(e.frequencies[1], Complex::new(0.6, 0.0), 1e-14));
        for w in &e.frequencies {
            assert!(characteristic_residual(*w, 0.3, 0.3, 0.5, 1.0) < 1e-12);
        }
    }

    #[test]
    fn linear_ep_degenerates() {
        let e = linear_eigenfrequencies(&SystemParams::pt_linear(0.5, 0.5)).unwrap();
        assert_eq!(e.region, SpectralRegion::ExceptionalPoint);
        assert_eq!(e.frequencies[0], Complex::new(1.0, 0.0));
        assert_eq!(e.frequencies[1], Complex::new(1.0, 0.0));
    }

    #[test]
    fn linear_broken_conjugates() {
        let e = linear_eigenfrequencies(&SystemParams::pt_linear(0.5, 0.7)).unwrap();
        assert_eq!(e.region, SpectralRegion::Broken);
        let im = 0.24f64.sqrt();
        assert!(close(e.frequencies[0], Complex::new(1.0, im), 1e-14));
        assert!(close(e.frequencies[1], Complex::new(1.0, -im), 1e-14));
        assert!((im - 0.48990).abs() < 1e-5);
        for w in &e.frequencies {
            assert!(characteristic_residual(*w, 0.7, 0.7, 0.5, 1.0) < 1e-12);
        }
    }

    #[test]
    fn linear_rejects_unbalanced_or_detuned() {
        let mut p = SystemParams::pt_linear(0.5, 0.3);
        p.gain = GainModel::Linear { g: 0.2 };
        assert!(matches!(linear_eigenfrequencies(&p), Err(Error::Unsupported(_))));
        let mut p = SystemParams::pt_linear(0.5, 0.3);
        p.omega_b = 1.1;
        assert!(matches!(linear_eigenfrequencies(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nonlinear_unbroken() {
        let e = nonlinear_eigenfrequencies(&SystemParams::saturable(0.5, 0.3, 3.0, 0.05)).unwrap();
        assert_eq!(e.g_sat, Some(0.3));
        assert_eq!(e.frequencies.len(), 3);
        let expect = [1.0, 1.4, 0.6];
        for (w, x) in e.frequencies.iter().zip(expect) {
            assert!(close(*w, Complex::new(x, 0.0), 1e-14));
        }
        for (w, g) in e.frequencies.iter().zip(&e.mode_gains) {
            assert!(characteristic_residual(*w, *g, 0.3, 0.5, 1.0) < 1e-12);
        }
        // the ω0 mode is not a root at g = γ
        assert!(characteristic_residual(e.frequencies[0], 0.3, 0.3, 0.5, 1.0) > 0.1);
    }

    #[test]
    fn nonlinear_broken() {
        let e = nonlinear_eigenfrequencies(&SystemParams::saturable(0.5, 0.7, 3.0, 0.05)).unwrap();
        let g_sat = 0.25 / 0.7;
        assert!((e.g_sat.unwrap() - g_sat).abs() < 1e-15);
        assert!((g_sat - 0.35714).abs() < 1e-5);
        assert_eq!(e.frequencies.len(), 2);
        assert!(close(e.frequencies[1], Complex::new(1.0, g_sat - 0.7), 1e-15));
        for w in &e.frequencies {
            assert!(characteristic_residual(*w, g_sat, 0.7, 0.5, 1.0) < 1e-12);
        }
    }

    #[test]
    fn nonlinear_ep_and_continuity() {
        let e = nonlinear_eigenfrequencies(&SystemParams::saturable(0.5, 0.5, 3.0, 0.05)).unwrap();
        assert!((e.g_sat.unwrap() - 0.5).abs() < 1e-15);
        let k = 0.5;
        let below = saturated_gain(k, k * (1.0 - 1e-6));
        let above = saturated_gain(k, k * (1.0 + 1e-6));
        assert!((below - above).abs() < 1e-5);
    }

    #[test]
    fn nonlinear_lossless_guard() {
        let e = nonlinear_eigenfrequencies(&SystemParams::saturable(0.5, 0.0, 3.0, 0.05)).unwrap();
        assert_eq!(e.region, SpectralRegion::Unbroken);
        assert_eq!(e.g_sat, Some(0.0));
        assert_eq!(e.frequencies.len(), 2);
        for (w, g) in e.frequencies.iter().zip(&e.mode_gains) {
            assert!(characteristic_residual(*w, *g, 0.0, 0.5, 1.0) < 1e-15);
        }
        let e = nonlinear_eigenfrequencies(&SystemParams::saturable(0.0, 0.0, 3.0, 0.05)).unwrap();
        assert_eq!(e.g_sat, Some(0.0));
    }

    #[test]
    fn g_sat_rises_then_falls() {
        let k = 0.5;
        let mut prev = 0.0;
        for i in 1..=100 {
            let g = saturated_gain(k, k * i as f64 / 100.0);
            assert!(g >= prev);
            prev = g;
        }
        for i in 100..=400 {
            let g = saturated_gain(k, k * i as f64 / 100.0);
            assert!(g <= prev + 1e-15);
            prev = g;
        }
    }

    #[test]
    fn residual_trivial() {
        assert_eq!(characteristic_residual(Complex::new(0.0, 0.0), 0.0, 0.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn arc_on_analytic_curves() {
        let gamma = (-1.0f64).exp();
        let d = exceptional_arc(|d| (-d).exp(), gamma, (0.0, 5.0), 1e-12).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        let d = exceptional_arc(|d| 0.5 / (1.0 + d * d), 0.25, (0.0, 10.0), 1e-13).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn arc_out_of_range() {
        let r = exceptional_arc(|d| (-d).exp(), 2.0, (0.0, 5.0), 1e-12);
        assert!(matches!(r, Err(Error::NoCrossing { .. })));
    }

    proptest::proptest! {
        #[test]
        fn every_mode_solves_the_characteristic_equation(k in 0.0f64..2.0, g in 0.0f64..2.0) {
            let linear = linear_eigenfrequencies(&SystemParams::pt_linear(k, g)).unwrap();
            let nonlinear = nonlinear_eigenfrequencies(&SystemParams::saturable(k, g, 3.0, 0.05)).unwrap();
            for set in [&linear, &nonlinear] {
                proptest::prop_assert_eq!(set.frequencies.len(), set.mode_gains.len());
                for (w, m) in set.frequencies.iter().zip(&set.mode_gains) {
                    let r = characteristic_residual(*w, *m, g, k, 1.0);
                    proptest::prop_assert!(r < 1e-10, "{:?} residual {}", set.region, r);
                }
            }
        }

        #[test]
        fn linear_spectrum_real_or_conjugate(k in 0.01f64..2.0, g in 0.0f64..2.0) {
            let e = linear_eigenfrequencies(&SystemParams::pt_linear(k, g)).unwrap();
            let [a, b] = [e.frequencies[0], e.frequencies[1]];
            match e.region {
                SpectralRegion::Unbroken => proptest::prop_assert!(a.im == 0.0 && b.im == 0.0),
                SpectralRegion::Broken => {
                    proptest::prop_assert!(a.im != 0.0);
                    proptest::prop_assert!(close(a, b.conj(), 1e-15));
                    proptest::prop_assert!((a.re - 1.0).abs() < 1e-15);
                }
                SpectralRegion::ExceptionalPoint => proptest::prop_assert!(close(a, b, 1e-4 * k)),
            }
        }

        #[test]
        fn g_sat_unimodal(k in 0.01f64..2.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let (lo, hi) = (u.min(v), u.max(v));
            // below κ
            proptest::prop_assert!(saturated_gain(k, k * lo) <= saturated_gain(k, k * hi));
            // above κ
            proptest::prop_assert!(saturated_gain(k, k / lo.max(1e-3)) <= saturated_gain(k, k / hi.max(1e-3)) + 1e-15);
        }
    }
}
