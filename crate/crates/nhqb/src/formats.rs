//! CSV writers and readers for every table the tool emits.
//!
//! Floats are written in their shortest round-trip form, so reading a file
//! back yields bit-identical values and identical inputs give identical
//! bytes.

use std::io::{Read, Write};

use nhqb_core::circuit::CircuitState;
use nhqb_core::coupling::CouplingCurve;
use nhqb_core::dynamics::Trajectory;
use nhqb_core::scenarios::{StepResponse, SweepResult};
use nhqb_core::spectral::EigenSet;
use nhqb_core::{Complex, SpectralRegion};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-5, 1e16)` so tiny and huge values stay short.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input)
}

/// Checks the header and returns the data records.
fn records<R: Read>(input: R, header: &str) -> Result<Vec<csv::StringRecord>> {
    let mut rd = reader(input);
    let mut rows = rd.records();
    let found = match rows.next() {
        Some(r) => r?.iter().collect::<Vec<_>>().join(","),
        None => String::new(),
    };
    if found != header {
        return Err(FormatError::Header { expected: header.into(), found });
    }
    rows.map(|r| r.map_err(FormatError::from)).collect()
}

fn field(rec: &csv::StringRecord, row: usize, i: usize) -> Result<f64> {
    let s = rec.get(i).ok_or_else(|| FormatError::Row { row, reason: format!("missing column {i}") })?;
    parse_f64(s).ok_or_else(|| FormatError::Row { row, reason: format!("`{s}` is not a number") })
}

fn opt_field(rec: &csv::StringRecord, row: usize, i: usize) -> Result<Option<f64>> {
    match rec.get(i) {
        None | Some("") => Ok(None),
        Some(_) => field(rec, row, i).map(Some),
    }
}

fn region_field(rec: &csv::StringRecord, row: usize, i: usize) -> Result<SpectralRegion> {
    let s = rec.get(i).unwrap_or("");
    SpectralRegion::parse(s).ok_or_else(|| FormatError::Row { row, reason: format!("unknown region `{s}`") })
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, cells: &[String]) -> Result<()> {
    w.write_record(cells)?;
    Ok(())
}

fn nums(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}

pub const TRAJECTORY_HEADER: &str = "t,re_psi_a,im_psi_a,re_psi_b,im_psi_b,g,e,e_a,p";

/// One line of the trajectory table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub psi_a: Complex,
    pub psi_b: Complex,
    pub g: f64,
    pub e: f64,
    pub e_a: f64,
    pub p: f64,
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    traj.samples
        .iter()
        .map(|s| TrajectoryRow {
            t: s.t(),
            psi_a: s.state.psi_a,
            psi_b: s.state.psi_b,
            g: s.gain,
            e: s.e,
            e_a: s.e_a,
            p: s.p,
        })
        .collect()
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(TRAJECTORY_HEADER.split(','))?;
    for r in rows {
        write_row(&mut w, &nums(&[r.t, r.psi_a.re, r.psi_a.im, r.psi_b.re, r.psi_b.im, r.g, r.e, r.e_a, r.p]))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    records(input, TRAJECTORY_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            let f = |i| field(rec, row, i);
            Ok(TrajectoryRow {
                t: f(0)?,
                psi_a: Complex::new(f(1)?, f(2)?),
                psi_b: Complex::new(f(3)?, f(4)?),
                g: f(5)?,
                e: f(6)?,
                e_a: f(7)?,
                p: f(8)?,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "d_m,gamma,region,e_max,e_s,p_max";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d: f64,
    pub gamma: f64,
    pub region: SpectralRegion,
    pub e_max: f64,
    /// Empty for linear sweeps.
    pub e_s: Option<f64>,
    pub p_max: f64,
}

/// Long format, `d` outer and `γ` inner.
pub fn sweep_rows(r: &SweepResult) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(r.grid.cells());
    for (i, &d) in r.grid.d_values.iter().enumerate() {
        for (j, &gamma) in r.grid.gamma_values.iter().enumerate() {
            rows.push(SweepRow {
                d,
                gamma,
                region: r.region_mask[i][j],
                e_max: r.e_max[i][j],
                e_s: r.e_s.as_ref().map(|m| m[i][j]),
                p_max: r.p_max[i][j],
            });
        }
    }
    rows
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(SWEEP_HEADER.split(','))?;
    for r in rows {
        let e_s = r.e_s.map(fmt_f64).unwrap_or_default();
        write_row(&mut w, &[fmt_f64(r.d), fmt_f64(r.gamma), r.region.to_string(), fmt_f64(r.e_max), e_s, fmt_f64(r.p_max)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    records(input, SWEEP_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            Ok(SweepRow {
                d: field(rec, row, 0)?,
                gamma: field(rec, row, 1)?,
                region: region_field(rec, row, 2)?,
                e_max: field(rec, row, 3)?,
                e_s: opt_field(rec, row, 4)?,
                p_max: field(rec, row, 5)?,
            })
        })
        .collect()
}

pub const STEP_HEADER: &str = "t,d_m,kappa,e,e_a,g,p";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRow {
    pub t: f64,
    pub d: f64,
    pub kappa: f64,
    pub e: f64,
    pub e_a: f64,
    pub g: f64,
    pub p: f64,
}

pub fn step_rows(r: &StepResponse) -> Vec<StepRow> {
    r.trajectory
        .samples
        .iter()
        .zip(&r.distances)
        .map(|(s, &d)| StepRow { t: s.t(), d, kappa: s.kappa, e: s.e, e_a: s.e_a, g: s.gain, p: s.p })
        .collect()
}

pub fn write_step<W: Write>(out: W, rows: &[StepRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(STEP_HEADER.split(','))?;
    for r in rows {
        write_row(&mut w, &nums(&[r.t, r.d, r.kappa, r.e, r.e_a, r.g, r.p]))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_step<R: Read>(input: R) -> Result<Vec<StepRow>> {
    records(input, STEP_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            let f = |i| field(rec, row, i);
            Ok(StepRow { t: f(0)?, d: f(1)?, kappa: f(2)?, e: f(3)?, e_a: f(4)?, g: f(5)?, p: f(6)? })
        })
        .collect()
}

pub const WAVEFORM_HEADER: &str = "t_s,u_a_V,u_b_V,i_a_A,i_b_A";

pub fn write_waveform<W: Write>(out: W, states: &[CircuitState]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(WAVEFORM_HEADER.split(','))?;
    for s in states {
        write_row(&mut w, &nums(&[s.t, s.u_a, s.u_b, s.i_a, s.i_b]))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_waveform<R: Read>(input: R) -> Result<Vec<CircuitState>> {
    records(input, WAVEFORM_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            let f = |i| field(rec, row, i);
            Ok(CircuitState { t: f(0)?, u_a: f(1)?, u_b: f(2)?, i_a: f(3)?, i_b: f(4)? })
        })
        .collect()
}

pub const COUPLING_HEADER: &str = "d_m,kappa_per_omega0";

pub fn write_coupling<W: Write>(out: W, curve: &CouplingCurve) -> Result<()> {
    let mut w = writer(out);
    w.write_record(COUPLING_HEADER.split(','))?;
    for (&d, &k) in curve.distances.iter().zip(&curve.kappas) {
        write_row(&mut w, &nums(&[d, k / curve.omega0]))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `(d, κ/ω0)` pairs.
pub fn read_coupling<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    records(input, COUPLING_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| Ok((field(rec, row, 0)?, field(rec, row, 1)?)))
        .collect()
}

/// One `γ` row of the eigenfrequency table.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    /// Present when the table spans several couplings.
    pub kappa: Option<f64>,
    pub gamma: f64,
    pub region: SpectralRegion,
    pub frequencies: Vec<Complex>,
    pub g_sat: Option<f64>,
}

impl EigenRow {
    pub fn new(kappa: Option<f64>, gamma: f64, set: &EigenSet) -> Self {
        Self { kappa, gamma, region: set.region, frequencies: set.frequencies.clone(), g_sat: set.g_sat }
    }
}

/// Header for a table with `modes` frequency columns, with or without the
/// leading `kappa` column.
pub fn eigen_header(modes: usize, with_kappa: bool) -> String {
    let mut cols: Vec<String> = Vec::new();
    if with_kappa {
        cols.push("kappa".into());
    }
    cols.push("gamma".into());
    cols.push("region".into());
    for m in 1..=modes {
        cols.push(format!("re_w{m}"));
        cols.push(format!("im_w{m}"));
    }
    cols.push("g_sat".into());
    cols.join(",")
}

/// Rows with fewer modes than the widest one leave the extra cells empty.
pub fn write_eigen<W: Write>(out: W, rows: &[EigenRow]) -> Result<()> {
    let modes = rows.iter().map(|r| r.frequencies.len()).max().unwrap_or(2).max(2);
    let with_kappa = rows.iter().any(|r| r.kappa.is_some());
    let mut w = writer(out);
    w.write_record(eigen_header(modes, with_kappa).split(','))?;
    for r in rows {
        let mut cells = Vec::with_capacity(3 + 2 * modes + 1);
        if with_kappa {
            cells.push(r.kappa.map(fmt_f64).unwrap_or_default());
        }
        cells.push(fmt_f64(r.gamma));
        cells.push(r.region.to_string());
        for m in 0..modes {
            match r.frequencies.get(m) {
                Some(z) => {
                    cells.push(fmt_f64(z.re));
                    cells.push(fmt_f64(z.im));
                }
                None => {
                    cells.push(String::new());
                    cells.push(String::new());
                }
            }
        }
        cells.push(r.g_sat.map(fmt_f64).unwrap_or_default());
        write_row(&mut w, &cells)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_eigen<R: Read>(input: R) -> Result<Vec<EigenRow>> {
    let mut rd = reader(input);
    let mut it = rd.records();
    let header: Vec<String> = match it.next() {
        Some(r) => r?.iter().map(String::from).collect(),
        None => return Err(FormatError::Header { expected: eigen_header(2, false), found: String::new() }),
    };
    let with_kappa = header.first().map(String::as_str) == Some("kappa");
    let offset = usize::from(with_kappa);
    let modes = header.len().saturating_sub(3 + offset) / 2;
    let expected = eigen_header(modes, with_kappa);
    if header.join(",") != expected || modes < 2 {
        return Err(FormatError::Header { expected, found: header.join(",") });
    }
    let mut rows = Vec::new();
    for (row, rec) in it.enumerate() {
        let rec = rec?;
        let kappa = if with_kappa { Some(field(&rec, row, 0)?) } else { None };
        let mut frequencies = Vec::new();
        for m in 0..modes {
            let (re, im) = (opt_field(&rec, row, offset + 2 + 2 * m)?, opt_field(&rec, row, offset + 3 + 2 * m)?);
            match (re, im) {
                (Some(re), Some(im)) => frequencies.push(Complex::new(re, im)),
                (None, None) => {}
                _ => return Err(FormatError::Row { row, reason: format!("half-empty mode {}", m + 1) }),
            }
        }
        rows.push(EigenRow {
            kappa,
            gamma: field(&rec, row, offset)?,
            region: region_field(&rec, row, offset + 1)?,
            frequencies,
            g_sat: opt_field(&rec, row, offset + 2 + 2 * modes)?,
        });
    }
    Ok(rows)
}
