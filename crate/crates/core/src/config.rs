//! Problem configuration, read from TOML (or from a previously written
//! `summary.json`, which embeds the configuration it was produced from).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{BrownianScheme, Horizon, SimulationConfig};
use crate::model::LevyModel;
use crate::phase_type::PhaseTypeDistribution;
use crate::recursion::{Coordinates, RecursionTolerances, SolveParams};
use crate::spectral::RootTolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub model: ModelConfig,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub sigma: f64,
    pub rho: f64,
    /// Explicit drift `c`. Mutually exclusive with `gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    /// Calibrate the drift so that `psi(1) = alpha_rate - gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub jumps: JumpsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsConfig {
    pub alpha: Vec<f64>,
    /// Rows of the sub-intensity matrix.
    pub t: Vec<Vec<f64>>,
    /// Rescale `alpha` to unit mass when it is off by rounding.
    #[serde(default)]
    pub normalize_alpha: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub strike: f64,
    pub alpha_rate: f64,
    pub delta: f64,
    /// Number of exercise opportunities.
    pub stages: usize,
    /// Erlang shape.
    pub shape: usize,
    #[serde(default)]
    pub coordinates: Coordinates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub continuity: f64,
    pub continuity_offset: f64,
    pub root_separation: f64,
    pub root_residual: f64,
    pub threshold_tolerance: f64,
    pub grid: GridConfig,
    pub mc: McConfig,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let rec = RecursionTolerances::default();
        Self {
            continuity: rec.continuity,
            continuity_offset: rec.continuity_offset,
            root_separation: rec.roots.separation,
            root_residual: rec.roots.residual,
            threshold_tolerance: rec.threshold.tolerance,
            grid: GridConfig::default(),
            mc: McConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: 3.0,
            hi: 8.0,
            points: 101,
        }
    }
}

impl GridConfig {
    /// Parses `lo:hi:n`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || Error::Config(format!("grid must be lo:hi:n, got {spec:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let grid = Self {
            lo: parts[0].trim().parse().map_err(|_| bad())?,
            hi: parts[1].trim().parse().map_err(|_| bad())?,
            points: parts[2].trim().parse().map_err(|_| bad())?,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!("grid needs lo < hi, got {} and {}", self.lo, self.hi)));
        }
        if self.points < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|k| {
                if k == n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    pub steps_per_interarrival: usize,
    pub brownian: BrownianScheme,
    /// Erlang shapes compared by `compare-mc`.
    pub m_list: Vec<usize>,
    /// Also simulate the constant horizon `delta`.
    pub constant: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            seed: 1,
            steps_per_interarrival: 100,
            brownian: BrownianScheme::RandomWalk,
            m_list: vec![1, 2, 3, 4, 5],
            constant: false,
        }
    }
}

impl McConfig {
    pub fn simulation(&self, horizon: Horizon) -> SimulationConfig {
        SimulationConfig {
            paths: self.paths,
            steps_per_interarrival: self.steps_per_interarrival,
            seed: self.seed,
            horizon,
            brownian: self.brownian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    pub thresholds: PathBuf,
    pub values: PathBuf,
    pub summary: PathBuf,
    pub compare: PathBuf,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            thresholds: "thresholds.csv".into(),
            values: "values.csv".into(),
            summary: "summary.json".into(),
            compare: "compare.csv".into(),
        }
    }
}

/// `summary.json` keeps the configuration under this key.
#[derive(Deserialize)]
struct Embedded {
    config: ProblemConfig,
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Accepts either a bare configuration or a summary with a `config` field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let config = if value.get("config").is_some() {
            serde_json::from_value::<Embedded>(value).map(|e| e.config)
        } else {
            serde_json::from_value::<Self>(value)
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.model.drift, self.model.gamma) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(Error::Config("model needs exactly one of drift / gamma".into())),
        }
        let p = &self.problem;
        if !(p.strike > 0.0) {
            return Err(Error::Config("problem.strike must be positive".into()));
        }
        if !(p.delta > 0.0) {
            return Err(Error::Config("problem.delta must be positive".into()));
        }
        if p.stages == 0 || p.shape == 0 {
            return Err(Error::Config("problem.stages and problem.shape must be >= 1".into()));
        }
        let n = &self.numerics;
        for (name, v) in [
            ("continuity", n.continuity),
            ("continuity_offset", n.continuity_offset),
            ("root_separation", n.root_separation),
            ("root_residual", n.root_residual),
            ("threshold_tolerance", n.threshold_tolerance),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("numerics.{name} must be positive")));
            }
        }
        n.grid.validate()?;
        if n.mc.paths == 0 || n.mc.steps_per_interarrival == 0 {
            return Err(Error::Config("mc.paths and mc.steps_per_interarrival must be >= 1".into()));
        }
        if n.mc.m_list.contains(&0) {
            return Err(Error::Config("mc.m_list entries must be >= 1".into()));
        }
        Ok(())
    }

    pub fn jumps(&self) -> Result<PhaseTypeDistribution> {
        let j = &self.model.jumps;
        if j.normalize_alpha {
            PhaseTypeDistribution::normalized(j.alpha.clone(), j.t.clone())
        } else {
            PhaseTypeDistribution::new(j.alpha.clone(), j.t.clone())
        }
    }

    pub fn levy_model(&self) -> Result<LevyModel> {
        let jumps = self.jumps()?;
        let m = &self.model;
        match (m.drift, m.gamma) {
            (Some(drift), None) => LevyModel::new(drift, m.sigma, m.rho, jumps),
            (None, Some(gamma)) => LevyModel::calibrated(m.sigma, m.rho, jumps, self.problem.alpha_rate, gamma),
            _ => Err(Error::Config("model needs exactly one of drift / gamma".into())),
        }
    }

    pub fn solve_params(&self) -> SolveParams {
        let p = &self.problem;
        SolveParams {
            coordinates: p.coordinates,
            ..SolveParams::new(p.alpha_rate, p.strike, p.delta, p.stages, p.shape)
        }
    }

    pub fn tolerances(&self) -> RecursionTolerances {
        let n = &self.numerics;
        let mut tol = RecursionTolerances {
            continuity: n.continuity,
            continuity_offset: n.continuity_offset,
            ..RecursionTolerances::default()
        };
        tol.roots = RootTolerances {
            separation: n.root_separation,
            residual: n.root_residual,
            ..tol.roots
        };
        tol.threshold.tolerance = n.threshold_tolerance;
        tol
    }
}
