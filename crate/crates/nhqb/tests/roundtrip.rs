use nhqb::formats::{self, EigenRow, StepRow, SweepRow, TrajectoryRow};
use nhqb_core::circuit::CircuitState;
use nhqb_core::coupling::{coupling_curve, CoilGeometry};
use nhqb_core::dynamics::IntegrationConfig;
use nhqb_core::scenarios::{run_sweep, GainFamily, SweepGrid};
use nhqb_core::{Complex, SpectralRegion};
use proptest::prelude::*;

fn float() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>(),
        1 => -1e3..1e3f64,
        1 => Just(0.0),
        1 => Just(-0.0),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
    ]
}

fn region() -> impl Strategy<Value = SpectralRegion> {
    prop_oneof![Just(SpectralRegion::Unbroken), Just(SpectralRegion::ExceptionalPoint), Just(SpectralRegion::Broken)]
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn same_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => same(a, b),
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn floats_survive_text(x in float()) {
        let back = formats::parse_f64(&formats::fmt_f64(x)).unwrap();
        prop_assert!(same(x, back), "{x:e} came back as {back:e}");
    }

    #[test]
    fn trajectory_rows_roundtrip(v in prop::collection::vec(prop::array::uniform9(float()), 0..20)) {
        let rows: Vec<TrajectoryRow> = v
            .iter()
            .map(|a| TrajectoryRow {
                t: a[0],
                psi_a: Complex::new(a[1], a[2]),
                psi_b: Complex::new(a[3], a[4]),
                g: a[5],
                e: a[6],
                e_a: a[7],
                p: a[8],
            })
            .collect();
        let mut buf = Vec::new();
        formats::write_trajectory(&mut buf, &rows).unwrap();
        let back = formats::read_trajectory(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (r, b) in rows.iter().zip(&back) {
            let x = [r.t, r.psi_a.re, r.psi_a.im, r.psi_b.re, r.psi_b.im, r.g, r.e, r.e_a, r.p];
            let y = [b.t, b.psi_a.re, b.psi_a.im, b.psi_b.re, b.psi_b.im, b.g, b.e, b.e_a, b.p];
            prop_assert!(x.iter().zip(&y).all(|(&x, &y)| same(x, y)));
        }
    }

    #[test]
    fn sweep_rows_roundtrip(v in prop::collection::vec((float(), float(), region(), float(), prop::option::of(float()), float()), 0..20)) {
        let rows: Vec<SweepRow> = v
            .iter()
            .map(|&(d, gamma, region, e_max, e_s, p_max)| SweepRow { d, gamma, region, e_max, e_s, p_max })
            .collect();
        let mut buf = Vec::new();
        formats::write_sweep(&mut buf, &rows).unwrap();
        let back = formats::read_sweep(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (r, b) in rows.iter().zip(&back) {
            prop_assert!(same(r.d, b.d) && same(r.gamma, b.gamma) && r.region == b.region);
            prop_assert!(same(r.e_max, b.e_max) && same_opt(r.e_s, b.e_s) && same(r.p_max, b.p_max));
        }
    }

    #[test]
    fn step_rows_roundtrip(v in prop::collection::vec(prop::array::uniform7(float()), 0..20)) {
        let rows: Vec<StepRow> = v
            .iter()
            .map(|a| StepRow { t: a[0], d: a[1], kappa: a[2], e: a[3], e_a: a[4], g: a[5], p: a[6] })
            .collect();
        let mut buf = Vec::new();
        formats::write_step(&mut buf, &rows).unwrap();
        let back = formats::read_step(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (r, b) in rows.iter().zip(&back) {
            let x = [r.t, r.d, r.kappa, r.e, r.e_a, r.g, r.p];
            let y = [b.t, b.d, b.kappa, b.e, b.e_a, b.g, b.p];
            prop_assert!(x.iter().zip(&y).all(|(&x, &y)| same(x, y)));
        }
    }

    #[test]
    fn waveform_roundtrip(v in prop::collection::vec(prop::array::uniform5(float()), 0..20)) {
        let states: Vec<CircuitState> = v
            .iter()
            .map(|a| CircuitState { t: a[0], u_a: a[1], u_b: a[2], i_a: a[3], i_b: a[4] })
            .collect();
        let mut buf = Vec::new();
        formats::write_waveform(&mut buf, &states).unwrap();
        let back = formats::read_waveform(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), states.len());
        for (r, b) in states.iter().zip(&back) {
            prop_assert!(same(r.t, b.t) && same(r.u_a, b.u_a) && same(r.u_b, b.u_b));
            prop_assert!(same(r.i_a, b.i_a) && same(r.i_b, b.i_b));
        }
    }

    #[test]
    fn eigen_rows_roundtrip(
        v in prop::collection::vec(
            (float(), region(), prop::collection::vec((float(), float()), 1..4), prop::option::of(float())),
            1..12,
        ),
        kappa in prop::option::of(float()),
    ) {
        let rows: Vec<EigenRow> = v
            .iter()
            .map(|(gamma, region, modes, g_sat)| EigenRow {
                kappa,
                gamma: *gamma,
                region: *region,
                frequencies: modes.iter().map(|&(re, im)| Complex::new(re, im)).collect(),
                g_sat: *g_sat,
            })
            .collect();
        let mut buf = Vec::new();
        formats::write_eigen(&mut buf, &rows).unwrap();
        let back = formats::read_eigen(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (r, b) in rows.iter().zip(&back) {
            prop_assert!(same_opt(r.kappa, b.kappa) && same(r.gamma, b.gamma) && r.region == b.region);
            prop_assert!(same_opt(r.g_sat, b.g_sat));
            prop_assert_eq!(r.frequencies.len(), b.frequencies.len());
            for (x, y) in r.frequencies.iter().zip(&b.frequencies) {
                prop_assert!(same(x.re, y.re) && same(x.im, y.im));
            }
        }
    }
}

#[test]
fn coupling_roundtrip() {
    let d: Vec<f64> = (0..31).map(|i| 0.2 + i as f64 / 30.0).collect();
    let curve = coupling_curve(&CoilGeometry::default(), &d, 1.0).unwrap();
    let mut buf = Vec::new();
    formats::write_coupling(&mut buf, &curve).unwrap();
    let back = formats::read_coupling(buf.as_slice()).unwrap();
    assert_eq!(back.len(), d.len());
    for (i, &(dd, k)) in back.iter().enumerate() {
        assert_eq!(dd.to_bits(), curve.distances[i].to_bits());
        assert_eq!(k.to_bits(), curve.kappas[i].to_bits());
    }
}

#[test]
fn wrong_header_is_rejected() {
    let text = "t,d_m,kappa,e,e_a,g,p\n0,0.2,0.1,1,1,0,0\n";
    assert!(matches!(formats::read_trajectory(text.as_bytes()), Err(formats::FormatError::Header { .. })));
    assert!(formats::read_step(text.as_bytes()).is_ok());
    let bad = "t,d_m,kappa,e,e_a,g,p\n0,0.2,oops,1,1,0,0\n";
    assert!(matches!(formats::read_step(bad.as_bytes()), Err(formats::FormatError::Row { row: 0, .. })));
}

fn small_grid(family: GainFamily) -> SweepGrid {
    SweepGrid {
        d_values: vec![0.2, 0.35, 0.5, 0.8, 1.2],
        gamma_values: vec![0.01, 0.04, 0.08, 0.12],
        gain_family: family,
    }
}

#[test]
fn parallel_sweep_matches_sequential_bit_for_bit() {
    let geom = CoilGeometry::default();
    let cfg = IntegrationConfig::default().with_t_end(60.0);
    for family in [GainFamily::LinearPt, GainFamily::NonlinearSaturable { g1: 0.5, gamma1: 0.01 }] {
        let grid = small_grid(family);
        let seq = run_sweep(&grid, &geom, &cfg).unwrap();
        let par = nhqb::parallel::run_sweep_parallel(&grid, &geom, &cfg).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        formats::write_sweep(&mut a, &formats::sweep_rows(&seq)).unwrap();
        formats::write_sweep(&mut b, &formats::sweep_rows(&par)).unwrap();
        assert_eq!(a, b);
        assert_eq!(seq.arc, par.arc);
        assert_eq!(seq.diagnostics.len(), par.diagnostics.len());
    }
}
