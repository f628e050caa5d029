//! Coupling rate versus distance for two coaxial multi-turn coils.
//!
//! Lengths and inductances are SI. Each coil is a stack of circular turns
//! centred on its own midpoint; `d` is the axial distance between the two
//! coil centres.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::elliptic::maxwell_combination;
use crate::error::{Error, Result};

/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilGeometry {
    /// Turn radius (m).
    pub radius: f64,
    pub turns: u32,
    /// Axial centre-to-centre spacing of adjacent turns (m).
    pub axial_pitch: f64,
    pub wire_radius: f64,
}

impl Default for CoilGeometry {
    /// 0.29 m radius, three turns at 5 mm pitch, 2.5 mm wire.
    fn default() -> Self {
        Self { radius: 0.29, turns: 3, axial_pitch: 0.005, wire_radius: 0.0025 }
    }
}

impl CoilGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.wire_radius > 0.0 && self.wire_radius.is_finite()) {
            return Err(Error::invalid("wire_radius", "must be positive and finite"));
        }
        if !(self.radius > self.wire_radius && self.radius.is_finite()) {
            return Err(Error::invalid("radius", "must exceed the wire radius"));
        }
        if self.turns == 0 {
            return Err(Error::invalid("turns", "need at least one turn"));
        }
        if !(self.axial_pitch >= 2.0 * self.wire_radius && self.axial_pitch.is_finite()) {
            return Err(Error::invalid("axial_pitch", "turns would overlap (pitch < 2 wire radii)"));
        }
        Ok(())
    }

    /// Axial extent including the wire.
    pub fn length(&self) -> f64 {
        (self.turns - 1) as f64 * self.axial_pitch + 2.0 * self.wire_radius
    }

    fn turn_offset(&self, i: u32) -> f64 {
        (i as f64 - 0.5 * (self.turns - 1) as f64) * self.axial_pitch
    }
}

/// Smallest centre distance at which two coils do not interpenetrate.
pub fn min_separation(a: &CoilGeometry, b: &CoilGeometry) -> f64 {
    0.5 * (a.length() + b.length())
}

/// Mutual inductance of two coaxial circular filaments of radii `a`, `b`
/// separated axially by `z`.
pub fn loop_mutual_inductance(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid("radius", "loop radii must be positive"));
    }
    let m = 4.0 * a * b / ((a + b) * (a + b) + z * z);
    if m >= 1.0 {
        // coincident filaments: logarithmic singularity
        return Err(Error::EllipticDomain(m));
    }
    Ok(MU0 * (a * b).sqrt() / m.sqrt() * maxwell_combination(m))
}

/// Mutual inductance between two coaxial coils whose centres are `d` apart.
pub fn mutual_inductance(geom_a: &CoilGeometry, geom_b: &CoilGeometry, d: f64) -> Result<f64> {
    geom_a.validate()?;
    geom_b.validate()?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid("d", "distance must be positive and finite"));
    }
    if d < min_separation(geom_a, geom_b) {
        return Err(Error::invalid("d", "coils overlap at this distance"));
    }
    let mut total = 0.0;
    for i in 0..geom_a.turns {
        for j in 0..geom_b.turns {
            let z = d + geom_b.turn_offset(j) - geom_a.turn_offset(i);
            total += loop_mutual_inductance(geom_a.radius, geom_b.radius, z)?;
        }
    }
    Ok(total)
}

/// Self inductance: pairwise turn mutuals plus the thin-wire single-loop
/// term `μ0 a (ln(8a/r_w) − 2)` per turn.
pub fn self_inductance(geom: &CoilGeometry) -> Result<f64> {
    geom.validate()?;
    let a = geom.radius;
    let single = MU0 * a * ((8.0 * a / geom.wire_radius).ln() - 2.0);
    let mut total = geom.turns as f64 * single;
    for i in 0..geom.turns {
        for j in 0..geom.turns {
            if i != j {
                let z = (i as f64 - j as f64) * geom.axial_pitch;
                total += loop_mutual_inductance(a, a, z)?;
            }
        }
    }
    Ok(total)
}

/// `κ(d) = (ω0/2)·M(d)/L` for two identical coils.
pub fn kappa_of_distance(geom: &CoilGeometry, d: f64, omega0: f64) -> Result<f64> {
    let l = self_inductance(geom)?;
    kappa_with_self(geom, d, omega0, l)
}

fn kappa_with_self(geom: &CoilGeometry, d: f64, omega0: f64, l: f64) -> Result<f64> {
    Ok(0.5 * omega0 * mutual_inductance(geom, geom, d)? / l)
}

/// Tabulated `κ(d)`, strictly decreasing in `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCurve {
    pub distances: Vec<f64>,
    pub kappas: Vec<f64>,
    pub omega0: f64,
}

impl CouplingCurve {
    pub fn new(distances: Vec<f64>, kappas: Vec<f64>, omega0: f64) -> Result<Self> {
        if distances.is_empty() || distances.len() != kappas.len() {
            return Err(Error::invalid("coupling curve", "need equally many distances and kappas"));
        }
        if distances.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("distances", "must be strictly increasing"));
        }
        if kappas.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::invalid("kappas", "must be positive"));
        }
        if kappas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid("kappas", "must strictly decrease with distance"));
        }
        Ok(Self { distances, kappas, omega0 })
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

pub fn coupling_curve(geom: &CoilGeometry, distances: &[f64], omega0: f64) -> Result<CouplingCurve> {
    let l = self_inductance(geom)?;
    let kappas = distances
        .iter()
        .map(|&d| kappa_with_self(geom, d, omega0, l))
        .collect::<Result<Vec<_>>>()?;
    CouplingCurve::new(distances.to_vec(), kappas, omega0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn single_loop_self_inductance() {
        let g = CoilGeometry { radius: 0.1, turns: 1, axial_pitch: 0.002, wire_radius: 0.001 };
        let l = self_inductance(&g).unwrap();
        let expect = MU0 * 0.1 * (800.0f64.ln() - 2.0);
        assert!((l - expect).abs() < 1e-15);
        assert!((l - 5.88e-7).abs() < 0.01e-7, "{l}");
    }

    #[test]
    fn self_inductance_between_n_and_n_squared() {
        let one = CoilGeometry { radius: 0.2, turns: 1, axial_pitch: 0.004, wire_radius: 0.002 };
        let l1 = self_inductance(&one).unwrap();
        for n in [2u32, 4, 8] {
            let ln = self_inductance(&CoilGeometry { turns: n, ..one }).unwrap();
            let n = n as f64;
            assert!(ln > n * l1 && ln < n * n * l1, "N={n}: {ln} vs {l1}");
        }
    }

    #[test]
    fn reciprocity() {
        let a = CoilGeometry { radius: 0.15, turns: 2, axial_pitch: 0.006, wire_radius: 0.001 };
        let b = CoilGeometry { radius: 0.31, turns: 5, axial_pitch: 0.004, wire_radius: 0.0015 };
        let ab = mutual_inductance(&a, &b, 0.25).unwrap();
        let ba = mutual_inductance(&b, &a, 0.25).unwrap();
        assert!((ab - ba).abs() <= 1e-15 * ab.abs());
    }

    #[test]
    fn dipole_limit() {
        let g = CoilGeometry::default();
        let n = g.turns as f64;
        let a = g.radius;
        let l = self_inductance(&g).unwrap();
        for factor in [20.0, 30.0, 50.0] {
            let d = factor * a;
            let m = mutual_inductance(&g, &g, d).unwrap();
            let dipole = MU0 * PI * a.powi(4) * n * n / (2.0 * d.powi(3));
            assert!((m / dipole - 1.0).abs() < 0.01, "d = {factor}a: {}", m / dipole);
            let k = kappa_of_distance(&g, d, 1.0).unwrap();
            assert!((k / (0.5 * dipole / l) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn overlapping_and_bad_distances_rejected() {
        let g = CoilGeometry::default();
        assert!(mutual_inductance(&g, &g, 0.0).is_err());
        assert!(mutual_inductance(&g, &g, -1.0).is_err());
        assert!(mutual_inductance(&g, &g, 0.5 * g.length()).is_err());
        assert!(matches!(loop_mutual_inductance(0.1, 0.1, 0.0), Err(Error::EllipticDomain(_))));
    }

    #[test]
    fn geometry_validation() {
        let good = CoilGeometry::default();
        assert!(good.validate().is_ok());
        assert!(CoilGeometry { turns: 0, ..good }.validate().is_err());
        assert!(CoilGeometry { axial_pitch: 0.004, ..good }.validate().is_err());
        assert!(CoilGeometry { radius: 0.002, ..good }.validate().is_err());
        assert!(CoilGeometry { wire_radius: 0.0, ..good }.validate().is_err());
    }

    #[test]
    fn ratio_one_fifth_gives_tenth_omega0() {
        // bisect for the distance with M/L = 0.2, then read off κ
        let g = CoilGeometry::default();
        let l = self_inductance(&g).unwrap();
        let ratio = |d: f64| mutual_inductance(&g, &g, d).unwrap() / l;
        let (mut lo, mut hi) = (min_separation(&g, &g) * 1.01, 2.0);
        assert!(ratio(lo) > 0.2 && ratio(hi) < 0.2);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) > 0.2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k = kappa_of_distance(&g, 0.5 * (lo + hi), 1.0).unwrap();
        assert!((k - 0.1).abs() < 1e-12);
    }

    #[test]
    fn default_curve_decreasing() {
        let ds: Vec<f64> = (0..=50).map(|i| 0.2 + 0.02 * i as f64).collect();
        let c = coupling_curve(&CoilGeometry::default(), &ds, 1.0).unwrap();
        assert!(c.kappas[0] > 0.05 && c.kappas[0] < 0.15, "κ(0.2) = {}", c.kappas[0]);
        assert!(c.kappas[50] < 0.1 * c.kappas[0]);
    }

    #[test]
    fn curve_constructor_checks_shape() {
        assert!(CouplingCurve::new(alloc::vec![0.2, 0.3], alloc::vec![0.1, 0.2], 1.0).is_err());
        assert!(CouplingCurve::new(alloc::vec![0.3, 0.2], alloc::vec![0.2, 0.1], 1.0).is_err());
        assert!(CouplingCurve::new(alloc::vec![0.2], alloc::vec![0.1, 0.05], 1.0).is_err());
        assert!(CouplingCurve::new(alloc::vec![0.2, 0.3], alloc::vec![0.2, 0.1], 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn kappa_strictly_decreasing(
            radius in 0.05f64..0.5,
            turns in 1u32..6,
            wire in 0.0005f64..0.003,
            extra_pitch in 0.0f64..0.01,
            step in 0.001f64..0.2,
        ) {
            let g = CoilGeometry { radius, turns, axial_pitch: 2.0 * wire + extra_pitch, wire_radius: wire };
            let d0 = min_separation(&g, &g) + 0.01;
            let ds: Vec<f64> = (0..20).map(|i| d0 + step * i as f64).collect();
            let c = coupling_curve(&g, &ds, 1.0);
            prop_assert!(c.is_ok());
        }
    }
}
