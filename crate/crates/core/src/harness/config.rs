//! Run configuration loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{DatumSpec, Grid};
use crate::nonlinearity::{preset_table, table_from_list, CoefficientTable, HomogeneousNonlinearity};
use crate::solver::SolverConfig;
use crate::testfunc::{CutoffFamily, Mollifier};

/// Either a named preset or an explicit `[[n, re, im], ...]` list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinearitySpec {
    Preset { preset: String },
    Coefficients { coefficients: Vec<[f64; 3]> },
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Preset { preset: "constant".into() }
    }
}

impl NonlinearitySpec {
    pub fn table(&self, dim: usize) -> Result<CoefficientTable> {
        match self {
            NonlinearitySpec::Preset { preset } => preset_table(preset, dim),
            NonlinearitySpec::Coefficients { coefficients } => table_from_list(dim, coefficients),
        }
    }

    pub fn build(&self, dim: usize) -> Result<HomogeneousNonlinearity> {
        Ok(HomogeneousNonlinearity::from_table(self.table(dim)?))
    }

    pub fn describe(&self) -> String {
        match self {
            NonlinearitySpec::Preset { preset } => preset.clone(),
            NonlinearitySpec::Coefficients { coefficients } => coefficients
                .iter()
                .map(|[n, re, im]| format!("g[{n}]={re}{im:+}i"))
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.points, self.half_width)
    }
}

/// Log-spaced ladder from `max` down to `min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub max: f64,
    pub min: f64,
    pub points: usize,
}

impl Ladder {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.max];
        }
        let (a, b) = (self.max.ln(), self.min.ln());
        (0..self.points)
            .map(|k| (a + (b - a) * k as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

/// One refinement step for the PDE engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Refinement {
    pub enabled: bool,
    pub points_factor: usize,
    pub dt_factor: f64,
    pub dt_min_factor: f64,
    /// Largest relative change in `t*` counted as stable.
    pub tolerance: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            enabled: true,
            points_factor: 2,
            dt_factor: 0.5,
            dt_min_factor: 0.1,
            tolerance: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdeSettings {
    pub c_ode: f64,
    /// Overrides the margin taken from the nonlinearity.
    pub mu: Option<f64>,
    pub r1: f64,
    pub escape: f64,
    pub rtol: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            c_ode: 0.1,
            mu: None,
            r1: std::f64::consts::E,
            escape: 1e12,
            rtol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    pub grid: GridSpec,
    pub datum: DatumSpec,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Radii for the `I₀(R)` diagnostics and the proof-chain check.
    #[serde(default)]
    pub r_list: Vec<f64>,
    /// Explicit amplitude ladder; takes precedence over `ladder`.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    pub ladder: Option<Ladder>,
    #[serde(default)]
    pub refinement: Refinement,
    #[serde(default)]
    pub ode: OdeSettings,
    #[serde(default)]
    pub mollifier: Mollifier,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Relative tolerance of the quadrature-based checks.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

fn default_tolerance() -> f64 {
    0.05
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            Some("toml") => toml::from_str(&text)?,
            other => {
                return Err(Error::Config(format!(
                    "config extension {other:?} is neither toml nor json"
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn epsilons(&self) -> Vec<f64> {
        if !self.epsilons.is_empty() {
            self.epsilons.clone()
        } else if let Some(l) = self.ladder {
            l.values()
        } else {
            vec![self.datum.epsilon]
        }
    }

    pub fn table(&self) -> Result<CoefficientTable> {
        self.nonlinearity.table(self.grid.dim)
    }

    pub fn cutoffs(&self) -> CutoffFamily {
        CutoffFamily::with_mollifier(self.grid.dim, self.mollifier)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        if self.datum.dim != grid.dim {
            return Err(Error::Config(format!(
                "datum dimension {} differs from grid dimension {}",
                self.datum.dim, grid.dim
            )));
        }
        self.datum.validate()?;
        self.solver.validate()?;
        self.table()?;
        if let Some(l) = self.ladder {
            if !(l.max > 0.0 && l.min > 0.0 && l.max > l.min && l.points >= 1) {
                return Err(Error::Config(format!("ladder {l:?} must satisfy max > min > 0")));
            }
        }
        let eps = self.epsilons();
        if eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("every epsilon must be positive".into()));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("epsilon ladder must be strictly decreasing".into()));
        }
        if self.r_list.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("r_list entries must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.refinement.enabled
            && (self.refinement.points_factor < 1
                || !(self.refinement.dt_factor > 0.0)
                || !(self.refinement.dt_min_factor > 0.0))
        {
            return Err(Error::Config("refinement factors must be positive".into()));
        }
        if !(self.ode.c_ode > 0.0) {
            return Err(Error::Config("ode.c_ode must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
scenario = "demo"
epsilons = [2.0, 1.0]

[grid]
dim = 1
points = 256
half_width = 20.0

[datum]
dim = 1
family = "log_weighted"
alpha = 0.0
epsilon = 1.0
r0 = 1.5
inner_fill = 0.0

[nonlinearity]
coefficients = [[0, 1.0, 0.0], [1, 0.3, 0.0]]

[solver]
t_end = 0.5
"#;

    #[test]
    fn parses_toml_and_round_trips() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.epsilons(), vec![2.0, 1.0]);
        assert!((cfg.table().unwrap().margin_mu() - 0.7).abs() < 1e-15);
        assert_eq!(cfg.solver.nonlinear_substeps, 4);
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_increasing_ladder() {
        let text = SAMPLE.replace("[2.0, 1.0]", "[1.0, 2.0]");
        assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn ladder_is_log_spaced() {
        let v = Ladder { max: 10.0, min: 1.0, points: 8 }.values();
        assert_eq!(v.len(), 8);
        assert!((v[0] - 10.0).abs() < 1e-12 && (v[7] - 1.0).abs() < 1e-12);
        let r = v[0] / v[1];
        assert!(v.windows(2).all(|w| (w[0] / w[1] - r).abs() < 1e-12));
    }
}
