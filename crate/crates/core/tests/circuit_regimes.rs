use std::f64::consts::PI;

use nhqb_core::circuit::*;
use nhqb_core::SpectralRegion;

const L: f64 = 2.32e-3;
const C: f64 = 10.7e-9;

fn beat_error(cp: &CircuitParams, periods: f64) -> (f64, f64) {
    let cv = crossvalidate(cp, periods * cp.period()).unwrap();
    let m = cv.metrics.iter().find(|m| m.name == "beat_frequency").expect("beat metric");
    (m.rel_error, (m.coupled_mode / m.predicted.unwrap() - 1.0).abs())
}

#[test]
fn rwa_error_shrinks_with_weaker_coupling_and_loss() {
    let mut errors = Vec::new();
    for s in [1.0, 0.5, 0.25] {
        // scale κ and γ together so √(κ² − γ²)/κ stays fixed
        let cp = CircuitParams::linear(L, C, 0.2 * s, 3e3 / s, 1e3, 1e3);
        let omega = {
            let p = map_to_coupled_mode(&cp).unwrap().params;
            (p.kappa * p.kappa - p.gamma * p.gamma).sqrt()
        };
        let (e, cm) = beat_error(&cp, 8.0 * PI / omega / (2.0 * PI));
        println!("scale {s}: circuit beat error {e:.4}, coupled-mode {cm:.2e}");
        assert!(cm < 5e-3);
        errors.push(e);
    }
    // second order in the coupling and loss rates
    assert!(errors[1] < 0.35 * errors[0] && errors[2] < 0.35 * errors[1], "{errors:?}");
    assert!(errors[2] < RWA_BUDGET);
}

#[test]
fn small_signal_diode_network_acts_linear() {
    let gamma = 0.005;
    let w0 = 1.0 / (L * C).sqrt();
    let r_b = 1.0 / (2.0 * C * w0 * gamma);
    let (r_2, r_g) = (1e6, 5e3);
    // conductance is A/R_1 − 1/R_2 at the origin; solve for g_ss = γ
    let probe = CircuitParams::diode(L, C, 0.02, r_b, 1e5, r_2, r_g);
    let a = (probe.injected_current(0.0).1 + 1.0 / r_2) * 1e5;
    let r_1 = a / (2.0 * C * w0 * gamma + 1.0 / r_2);
    let cp = CircuitParams::diode(L, C, 0.02, r_b, r_1, r_2, r_g);
    let g_ss = DiodeGain::new(&cp, 1.0).unwrap().small_signal();
    assert!((g_ss / gamma - 1.0).abs() < 1e-9);

    let start = CircuitState { u_a: 1e-9, ..CircuitState::default() };
    let wave = simulate_circuit(&cp, start, 240.0 * cp.period(), cp.default_dt_max()).unwrap();
    let series: Vec<(f64, f64)> = wave.iter().map(|s| (s.t, s.u_b)).collect();
    let env = nhqb_core::envelope::extract_envelope_every(&series, w0, 5).unwrap();
    let beat = beat_frequency(&env).unwrap() / w0;
    let predicted = (0.01f64 * 0.01 - gamma * gamma).sqrt();
    println!("small-signal beat {beat:.6} vs {predicted:.6}");
    assert!((beat / predicted - 1.0).abs() < 0.01);
    // balanced gain and loss keep the amplitude at the seed scale
    let peak = wave.iter().map(|s| s.u_a.abs().max(s.u_b.abs())).fold(0.0, f64::max);
    assert!(peak < 3e-9, "{peak:e}");
}

#[test]
fn weak_coupling_limit_recovers_bare_resonance() {
    let cp = CircuitParams { l: L, c: C, m_over_l: 1e-4, r_b: f64::INFINITY, gain_network: GainNetwork::None, rails: None };
    let wave = simulate_circuit(&cp, CircuitState::default(), 50.0 * cp.period(), cp.default_dt_max()).unwrap();
    let ua: Vec<(f64, f64)> = wave.iter().map(|s| (s.t, s.u_a)).collect();
    let w = measure_carrier_frequency(&ua).unwrap();
    println!("carrier rel error {:.2e}", w / cp.omega0() - 1.0);
    assert!((w / cp.omega0() - 1.0).abs() < 1e-3);
    let e0 = wave[0].energy(&cp);
    assert!(wave.iter().all(|s| (s.energy(&cp) / e0 - 1.0).abs() < 1e-6));
    let map = map_to_coupled_mode(&cp).unwrap();
    assert_eq!(map.params.gamma, 0.0);
    assert!((map.params.kappa - 5e-5).abs() < 1e-18);
}

#[test]
fn broken_buffer_circuit_grows() {
    let cp = CircuitParams::linear(L, C, 0.2, 2e3, 1e3, 1e3);
    let cv = crossvalidate(&cp, 40.0 * cp.period()).unwrap();
    assert_eq!(cv.region, SpectralRegion::Broken);
    let m = cv.metrics.iter().find(|m| m.name == "growth_rate").unwrap();
    assert!(m.circuit > 0.0 && m.coupled_mode > 0.0);
    // the integrated coupled-mode model agrees with its own closed form
    assert!((m.coupled_mode / m.predicted.unwrap() - 1.0).abs() < 5e-3);
}
