//! TOML run configuration.
//!
//! One file may carry sections for several commands; each command reads
//! only the sections it needs. Unknown keys are rejected. Presets are the
//! same format, and a config file given alongside a preset is merged on top
//! of it key by key.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// `lo:hi:n` inclusive, `n` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 }).collect()
    }
}

impl FromStr for Range {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError(format!("range `{s}` is not of the form lo:hi:n"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if n == 0 || !lo.is_finite() || !hi.is_finite() || (n > 1 && !(hi > lo)) {
            return Err(ConfigError(format!("range `{s}` needs n >= 1 and hi > lo")));
        }
        Ok(Range { lo, hi, n })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

/// Axis given either as `"lo:hi:n"` or as an explicit list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Spec(String),
    List(Vec<f64>),
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            Axis::Spec(s) => Ok(s.parse::<Range>()?.values()),
            Axis::List(v) if v.is_empty() => Err(ConfigError("axis list is empty".into())),
            Axis::List(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Buffer,
    Diode,
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub family: Option<Family>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub g1: Option<f64>,
    pub gamma1: Option<f64>,
    /// Coil separation (m); sets κ through the coil model.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub t_end: Option<f64>,
    pub max_step: Option<f64>,
    pub record_stride: Option<f64>,
    pub divergence_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilSection {
    pub radius: Option<f64>,
    pub turns: Option<u32>,
    pub axial_pitch: Option<f64>,
    pub wire_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    pub gamma_range: Option<Axis>,
    pub kappa_range: Option<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub analytic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub d_range: Option<Axis>,
    pub gamma_range: Option<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    /// `[t_start, d]` pairs.
    pub segments: Option<Vec<[f64; 2]>>,
    /// Back-to-back segments of `segment_duration`; ignored when
    /// `segments` is set.
    pub distances: Option<Vec<f64>>,
    pub segment_duration: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub l: Option<f64>,
    pub c: Option<f64>,
    pub m_over_l: Option<f64>,
    pub r_b: Option<f64>,
    pub network: Option<Network>,
    pub r_f: Option<f64>,
    pub r_g: Option<f64>,
    pub r_1: Option<f64>,
    pub r_2: Option<f64>,
    pub i_s: Option<f64>,
    pub v_t: Option<f64>,
    pub n: Option<f64>,
    pub rails: Option<f64>,
    /// Seconds.
    pub t_end: Option<f64>,
    pub dt_max: Option<f64>,
    pub u_a0: Option<f64>,
    pub validate: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub d_range: Option<Axis>,
    pub omega0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<String>,
    pub report: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the file is meant for, checked when present.
    pub command: Option<String>,
    pub description: Option<String>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub integration: IntegrationSection,
    #[serde(default)]
    pub coil: CoilSection,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub step: StepSection,
    #[serde(default)]
    pub circuit: CircuitSection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse TOML documents in order, later ones overriding earlier ones.
pub fn load_layers(layers: &[(&str, &str)]) -> Result<RunConfig, ConfigError> {
    let mut table = toml::Table::new();
    for (name, text) in layers {
        let t: toml::Table = text.parse().map_err(|e| ConfigError(format!("{name}: {e}")))?;
        merge(&mut table, t);
    }
    RunConfig::deserialize(table).map_err(|e| ConfigError(format!("config: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        load_layers(&[("config", text)])
    }

    pub fn check_command(&self, command: &str) -> Result<(), ConfigError> {
        match &self.command {
            Some(c) if c != command => Err(ConfigError(format!("configuration is for `{c}`, not `{command}`"))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r: Range = "0:1:5".parse().unwrap();
        assert_eq!(r.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("0.2:1.2:1".parse::<Range>().unwrap().values(), vec![0.2]);
        assert_eq!("0.005:0.12:24".parse::<Range>().unwrap().values().len(), 24);
        let v = "0.2:1.2:61".parse::<Range>().unwrap().values();
        assert_eq!(v[60], 1.2);
        for bad in ["", "1:2", "1:2:0", "2:1:3", "a:1:2", "0:1:2:3"] {
            assert!(bad.parse::<Range>().is_err(), "{bad}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[system]\nkapa = 0.5\n").is_err());
        assert!(RunConfig::parse("colour = 1\n").is_err());
        assert!(RunConfig::parse("[system]\nfamily = \"quadratic\"\n").is_err());
        let ok = RunConfig::parse("[system]\nfamily = \"linear\"\nkappa = 0.5\n[sweep]\nd_range = [0.2, 0.3]\n").unwrap();
        assert_eq!(ok.system.family, Some(Family::Linear));
        assert_eq!(ok.sweep.d_range.unwrap().values().unwrap(), vec![0.2, 0.3]);
    }

    #[test]
    fn layers_merge_per_key() {
        let base = "command = \"simulate\"\n[system]\nkappa = 0.5\ngamma = 0.3\n";
        let top = "[system]\ngamma = 0.7\n";
        let c = load_layers(&[("a", base), ("b", top)]).unwrap();
        assert_eq!(c.system.kappa, Some(0.5));
        assert_eq!(c.system.gamma, Some(0.7));
        assert!(c.check_command("simulate").is_ok());
        assert!(c.check_command("sweep").is_err());
    }
}
