//! JSON documents. Field order is fixed by the struct layouts, so equal
//! inputs serialize to equal bytes.

use serde::Serialize;

use nhqb_core::circuit::{CrossValidation, Metric, Settling};
use nhqb_core::scenarios::{StepResponse, SweepResult};
use nhqb_core::{GainModel, SystemParams};

use crate::formats::{EigenRow, SweepRow, TrajectoryRow};

#[derive(Debug, Serialize)]
pub struct ModeJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Serialize)]
pub struct EigenRowJson {
    pub kappa: Option<f64>,
    pub gamma: f64,
    pub region: &'static str,
    pub modes: Vec<ModeJson>,
    pub mode_gains: Vec<f64>,
    pub g_sat: Option<f64>,
}

impl EigenRowJson {
    pub fn new(row: &EigenRow, mode_gains: Vec<f64>) -> Self {
        Self {
            kappa: row.kappa,
            gamma: row.gamma,
            region: row.region.as_str(),
            modes: row.frequencies.iter().map(|z| ModeJson { re: z.re, im: z.im }).collect(),
            mode_gains,
            g_sat: row.g_sat,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrajectoryRowJson {
    pub t: f64,
    pub re_psi_a: f64,
    pub im_psi_a: f64,
    pub re_psi_b: f64,
    pub im_psi_b: f64,
    pub g: f64,
    pub e: f64,
    pub e_a: f64,
    pub p: f64,
}

impl From<&TrajectoryRow> for TrajectoryRowJson {
    fn from(r: &TrajectoryRow) -> Self {
        Self {
            t: r.t,
            re_psi_a: r.psi_a.re,
            im_psi_a: r.psi_a.im,
            re_psi_b: r.psi_b.re,
            im_psi_b: r.psi_b.im,
            g: r.g,
            e: r.e,
            e_a: r.e_a,
            p: r.p,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepCellJson {
    pub d_m: f64,
    pub gamma: f64,
    pub region: &'static str,
    pub e_max: f64,
    pub e_s: Option<f64>,
    pub p_max: f64,
}

#[derive(Debug, Serialize)]
pub struct ArcPointJson {
    pub gamma: f64,
    pub d_m: f64,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticJson {
    pub d_m: f64,
    pub gamma: f64,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct SweepJson {
    pub family: &'static str,
    pub d_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub kappas: Vec<f64>,
    pub cells: Vec<SweepCellJson>,
    pub arc: Vec<ArcPointJson>,
    pub diagnostics: Vec<DiagnosticJson>,
}

impl SweepJson {
    pub fn new(r: &SweepResult, rows: &[SweepRow]) -> Self {
        Self {
            family: if r.grid.gain_family.is_linear() { "linear" } else { "nonlinear" },
            d_values: r.grid.d_values.clone(),
            gamma_values: r.grid.gamma_values.clone(),
            kappas: r.kappas.clone(),
            cells: rows
                .iter()
                .map(|c| SweepCellJson { d_m: c.d, gamma: c.gamma, region: c.region.as_str(), e_max: c.e_max, e_s: c.e_s, p_max: c.p_max })
                .collect(),
            arc: r.arc.iter().map(|&(gamma, d_m)| ArcPointJson { gamma, d_m }).collect(),
            diagnostics: r
                .diagnostics
                .iter()
                .map(|d| DiagnosticJson { d_m: d.d, gamma: d.gamma, message: d.message.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SegmentJson {
    pub t_start: f64,
    pub t_end: f64,
    pub d_m: f64,
    pub kappa: f64,
    pub region: &'static str,
    pub converged: bool,
    pub t_settle: Option<f64>,
    pub settle_after: Option<f64>,
    pub e_steady: f64,
    pub g_measured: f64,
    pub mode_frequency: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct StepJson {
    pub gamma: f64,
    pub g1: f64,
    pub gamma1: f64,
    pub segments: Vec<SegmentJson>,
}

impl StepJson {
    pub fn new(params: &SystemParams, r: &StepResponse) -> Self {
        let (g1, gamma1) = match params.gain {
            GainModel::NonlinearSaturable { g1, gamma1 } => (g1, gamma1),
            GainModel::Linear { .. } => (f64::NAN, f64::NAN),
        };
        Self {
            gamma: params.gamma,
            g1,
            gamma1,
            segments: r
                .segments
                .iter()
                .map(|s| SegmentJson {
                    t_start: s.t_start,
                    t_end: s.t_end,
                    d_m: s.d,
                    kappa: s.kappa,
                    region: s.region.as_str(),
                    converged: s.report.converged,
                    t_settle: s.report.t_settle,
                    settle_after: s.settle_after,
                    e_steady: s.report.e_steady,
                    g_measured: s.report.g_measured,
                    mode_frequency: s.report.mode_frequency,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainJson {
    Linear { g: f64 },
    Saturable { g1: f64, gamma1: f64 },
}

impl From<GainModel> for GainJson {
    fn from(g: GainModel) -> Self {
        match g {
            GainModel::Linear { g } => GainJson::Linear { g },
            GainModel::NonlinearSaturable { g1, gamma1 } => GainJson::Saturable { g1, gamma1 },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MappedJson {
    pub omega0_rad_s: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gain: GainJson,
    pub u_ref_v: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct MetricJson {
    pub name: &'static str,
    pub circuit: f64,
    pub predicted: Option<f64>,
    pub coupled_mode: f64,
    pub rel_error: f64,
    pub budget: Option<f64>,
    pub pass: bool,
}

impl From<&Metric> for MetricJson {
    fn from(m: &Metric) -> Self {
        Self {
            name: m.name,
            circuit: m.circuit,
            predicted: m.predicted,
            coupled_mode: m.coupled_mode,
            rel_error: m.rel_error,
            budget: m.budget,
            pass: m.pass(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SettlingJson {
    pub converged: bool,
    pub final_value: f64,
    pub t_settle_s: Option<f64>,
}

impl From<&Settling> for SettlingJson {
    fn from(s: &Settling) -> Self {
        Self { converged: s.converged, final_value: s.final_value, t_settle_s: s.t_settle }
    }
}

#[derive(Debug, Serialize)]
pub struct CircuitJson {
    pub mapped: MappedJson,
    pub region: &'static str,
    pub metrics: Vec<MetricJson>,
    pub circuit_settling: Option<SettlingJson>,
    pub coupled_mode_settling: Option<SettlingJson>,
    pub pass: bool,
}

impl From<&CrossValidation> for CircuitJson {
    fn from(cv: &CrossValidation) -> Self {
        let p = cv.mapped.params;
        Self {
            mapped: MappedJson {
                omega0_rad_s: cv.mapped.omega0,
                kappa: p.kappa,
                gamma: p.gamma,
                gain: p.gain.into(),
                u_ref_v: cv.mapped.u_ref,
            },
            region: cv.region.as_str(),
            metrics: cv.metrics.iter().map(MetricJson::from).collect(),
            circuit_settling: cv.circuit_settling.as_ref().map(SettlingJson::from),
            coupled_mode_settling: cv.coupled_mode_settling.as_ref().map(SettlingJson::from),
            pass: cv.pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CouplingRowJson {
    pub d_m: f64,
    pub kappa_per_omega0: f64,
}

/// Pretty-printed with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}
