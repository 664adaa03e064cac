//! Run configuration: JSON ingestion, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use clockinterf::noise::NoiseConfig;
use clockinterf::numerics::DoubleWord;
use clockinterf::qutrit::ClockFrequencies;
use clockinterf::redshift::{self, RedshiftContext, MAX_PHYSICAL_SHIFT, MAX_SCALED_SHIFT};
use clockinterf::sequence::Preparation;
use clockinterf::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_N_PHASES: usize = 64;
pub const DEFAULT_GRID_POINTS: usize = 601;
pub const DEFAULT_GRID_PERIODS: f64 = 3.0;
pub const DEFAULT_STACK_PERIODS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fringe,
    Visibility,
    RedshiftCompare,
    Stack,
    Montecarlo,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fringe => "fringe",
            Mode::Visibility => "visibility",
            Mode::RedshiftCompare => "redshift-compare",
            Mode::Stack => "stack",
            Mode::Montecarlo => "montecarlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Hz, metres, seconds.
    Physical,
    /// Dimensionless frequencies and exaggerated shifts.
    #[default]
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.start + i as f64 * step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedshiftSpec {
    #[serde(default = "default_g")]
    pub g: f64,
    pub delta_h: f64,
}

fn default_g() -> f64 {
    9.8
}

/// Lifetimes left out (or `null`) are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms_per_point: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_coherence_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_clock_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_trap_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSpec {
    #[serde(default = "default_stack_periods")]
    pub n_periods: u64,
    /// Interrogation time of the physical-scale check; `n_periods/Δf` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<f64>,
}

fn default_stack_periods() -> u64 {
    DEFAULT_STACK_PERIODS
}

impl Default for StackSpec {
    fn default() -> Self {
        Self {
            n_periods: DEFAULT_STACK_PERIODS,
            tau_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    #[serde(default = "default_atoms")]
    pub atoms: Vec<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
}

fn default_atoms() -> Vec<u64> {
    vec![100, 10_000, 1_000_000]
}

fn default_replicates() -> u32 {
    100
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            atoms: default_atoms(),
            replicates: default_replicates(),
        }
    }
}

/// Fully defaulted configuration. Serializing it gives a config file that
/// parses back to the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub units: Units,
    pub f1: f64,
    pub f2: f64,
    #[serde(default)]
    pub preparation: Preparation,
    #[serde(default = "default_n_phases")]
    pub n_phases: usize,
    #[serde(default)]
    pub seed: u64,
    /// Free-evolution time of single-fringe modes.
    #[serde(default)]
    pub interrogation_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redshift: Option<RedshiftSpec>,
    /// Fractional shift given directly instead of through `redshift`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub stack: StackSpec,
    #[serde(default)]
    pub montecarlo: MonteCarloSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_n_phases() -> usize {
    DEFAULT_N_PHASES
}

/// A configuration problem tied to a key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.path, self.message)
        }
    }
}

fn issue(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config(ConfigIssue {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| issue("", format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        issue(&path, e.into_inner().to_string())
    })?;
    config.fill_defaults();
    config.resolve()?;
    Ok(config)
}

/// Derived physical quantities of a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub freqs: ClockFrequencies,
    pub eps: Option<DoubleWord>,
    pub redshift: Option<RedshiftContext>,
    pub noise: NoiseConfig,
}

fn lifetime(path: &str, tau: Option<f64>) -> Result<f64, CliError> {
    match tau {
        None => Ok(f64::INFINITY),
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(issue(path, format!("lifetime must be positive, got {t}"))),
    }
}

impl RunConfig {
    fn fill_defaults(&mut self) {
        if self.t_grid.is_none() && self.f2 > self.f1 && self.f1 > 0.0 {
            self.t_grid = Some(GridSpec {
                start: 0.0,
                stop: DEFAULT_GRID_PERIODS / (self.f2 - self.f1),
                points: DEFAULT_GRID_POINTS,
            });
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.t_grid.map(|g| g.values()).unwrap_or_default()
    }

    /// Checks every invariant and derives frequencies, shift and noise.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if !(self.f1.is_finite() && self.f2.is_finite()) {
            return Err(issue("f1", "frequencies must be finite"));
        }
        let freqs = ClockFrequencies::new(self.f1, self.f2).map_err(|e| match e {
            CoreError::FrequencyOrder { .. } => issue("f2", e.to_string()),
            other => issue("f1", other.to_string()),
        })?;
        if self.n_phases < clockinterf::fringe::MIN_FRINGE_POINTS {
            return Err(issue(
                "n_phases",
                format!(
                    "at least {} phases are needed, got {}",
                    clockinterf::fringe::MIN_FRINGE_POINTS,
                    self.n_phases
                ),
            ));
        }
        if !(self.interrogation_s >= 0.0 && self.interrogation_s.is_finite()) {
            return Err(issue(
                "interrogation_s",
                format!("must be finite and non-negative, got {}", self.interrogation_s),
            ));
        }
        if let Some(g) = &self.t_grid {
            if g.points == 0 {
                return Err(issue("t_grid.points", "must be at least 1"));
            }
            if !(g.start >= 0.0 && g.start.is_finite() && g.stop.is_finite()) {
                return Err(issue("t_grid.start", "grid bounds must be finite, start ≥ 0"));
            }
            if g.points > 1 && !(g.stop > g.start) {
                return Err(issue("t_grid.stop", "stop must exceed start"));
            }
        }

        let limit = match self.units {
            Units::Physical => MAX_PHYSICAL_SHIFT,
            Units::Scaled => MAX_SCALED_SHIFT,
        };
        let (eps, redshift, eps_path) = match (self.redshift, self.eps) {
            (Some(_), Some(_)) => {
                return Err(issue("eps", "give either `eps` or `redshift`, not both"));
            }
            (Some(spec), None) => {
                let ctx = RedshiftContext::new(spec.g, spec.delta_h)
                    .map_err(|e| issue("redshift", e.to_string()))?;
                (Some(redshift::redshift_factor(&ctx)), Some(ctx), "redshift.delta_h")
            }
            (None, Some(e)) => {
                if !e.is_finite() {
                    return Err(issue("eps", "must be finite"));
                }
                (Some(DoubleWord::from_f64(e)), None, "eps")
            }
            (None, None) => (None, None, "eps"),
        };
        if let Some(e) = eps {
            let e = e.to_f64();
            if !(e.abs() < limit) {
                return Err(issue(
                    eps_path,
                    format!(
                        "fractional shift {e:e} is outside the {} units limit |eps| < {limit:e}",
                        match self.units {
                            Units::Physical => "physical",
                            Units::Scaled => "scaled",
                        }
                    ),
                ));
            }
        }

        let atoms = self.noise.atoms_per_point.unwrap_or(1);
        if atoms == 0 {
            return Err(issue("noise.atoms_per_point", "must be at least 1"));
        }
        let tau_coherence = lifetime("noise.tau_coherence_s", self.noise.tau_coherence_s)?;
        let tau_clock = lifetime("noise.tau_clock_s", self.noise.tau_clock_s)?;
        let tau_trap = lifetime("noise.tau_trap_s", self.noise.tau_trap_s)?;
        let noise = NoiseConfig::default()
            .with_atoms(atoms, self.seed)
            .and_then(|n| n.with_lifetimes(tau_coherence, tau_clock, tau_trap))
            .map_err(|e| issue("noise", e.to_string()))?;

        if self.stack.n_periods == 0 {
            return Err(issue("stack.n_periods", "must be at least 1"));
        }
        if let Some(t) = self.stack.tau_s {
            if !(t > 0.0 && t.is_finite()) {
                return Err(issue("stack.tau_s", format!("must be positive, got {t}")));
            }
        }
        if self.montecarlo.atoms.is_empty() || self.montecarlo.atoms.contains(&0) {
            return Err(issue("montecarlo.atoms", "needs one or more positive atom numbers"));
        }
        if self.montecarlo.replicates < 2 {
            return Err(issue("montecarlo.replicates", "at least 2 replicates are needed"));
        }
        Ok(Resolved {
            freqs,
            eps,
            redshift,
            noise,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> ConfigIssue {
        match parse_config_str(text).unwrap_err() {
            CliError::Config(i) => i,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(r#"{"mode": "visibility", "f1": 1.0, "f2": 1.25}"#).unwrap();
        assert_eq!(c.n_phases, 64);
        assert_eq!(c.seed, 0);
        assert_eq!(c.mode, Some(Mode::Visibility));
        assert_eq!(c.units, Units::Scaled);
        let g = c.t_grid.unwrap();
        assert_eq!((g.start, g.stop, g.points), (0.0, 12.0, DEFAULT_GRID_POINTS));
    }

    #[test]
    fn frequency_order_cites_constraint() {
        let e = err(r#"{"f1": 1.25, "f2": 1.0}"#);
        assert_eq!(e.path, "f2");
        assert!(e.message.contains("larger transition frequency"), "{}", e.message);
        assert!(err(r#"{"f1": 1.0, "f2": 1.0}"#).message.contains("larger transition frequency"));
    }

    #[test]
    fn physical_shift_limit() {
        let e = err(
            r#"{"units": "physical", "f1": 4e14, "f2": 4.1e14, "redshift": {"delta_h": 1e13}}"#,
        );
        assert_eq!(e.path, "redshift.delta_h");
        let ok = parse_config_str(
            r#"{"units": "physical", "f1": 4e14, "f2": 4.1e14, "redshift": {"delta_h": 1}}"#,
        )
        .unwrap();
        assert!(ok.resolve().unwrap().eps.is_some());
        assert!(parse_config_str(r#"{"f1": 1, "f2": 2, "eps": 0.05}"#).is_ok());
        assert_eq!(err(r#"{"f1": 1, "f2": 2, "eps": 0.1}"#).path, "eps");
        assert_eq!(err(r#"{"units": "physical", "f1": 1, "f2": 2, "eps": 0.05}"#).path, "eps");
    }

    #[test]
    fn unknown_and_malformed_keys_report_path() {
        let e = err(r#"{"f1": 1, "f2": 2, "noise": {"tau_coherense_s": 1}}"#);
        assert!(e.path.starts_with("noise"), "{e}");
        assert!(e.message.contains("unknown field"));
        let e = err(r#"{"f1": 1, "f2": 2, "t_grid": {"start": 0, "stop": "x", "points": 3}}"#);
        assert_eq!(e.path, "t_grid.stop");
        let e = err(r#"{"f1": 1, "f2": 2, "noise": {"tau_clock_s": -1}}"#);
        assert_eq!(e.path, "noise.tau_clock_s");
        assert!(err("{not json").message.contains("key must be a string"));
        assert!(err(r#"{"f2": 2}"#).message.contains("missing field `f1`"));
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config_str(
            r#"{"mode": "fringe", "f1": 1, "f2": 1.25, "eps": 4e-4, "noise": {"atoms_per_point": 1000}}"#,
        )
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), c);
    }

    #[test]
    fn grid_values() {
        let g = GridSpec {
            start: 0.0,
            stop: 3.0,
            points: 4,
        };
        assert_eq!(g.values(), vec![0.0, 1.0, 2.0, 3.0]);
    }
}
