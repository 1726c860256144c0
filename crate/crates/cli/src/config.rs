//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aqc_core::fieldlab::{read_field, Boundary, Field, Grid, DEFAULT_NODE_CAP};
use aqc_core::nfunc::NFunction;
use aqc_core::opsym::{DiffOp, OpDescriptor};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Experiment {
    OpCheck,
    Korn,
    Poincare,
    Hardy,
    Bagby,
    QcScan,
    Minimize,
    NonellipticDemo,
    Excess,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::OpCheck => "op_check",
            Experiment::Korn => "korn",
            Experiment::Poincare => "poincare",
            Experiment::Hardy => "hardy",
            Experiment::Bagby => "bagby",
            Experiment::QcScan => "qc_scan",
            Experiment::Minimize => "minimize",
            Experiment::NonellipticDemo => "nonelliptic_demo",
            Experiment::Excess => "excess",
        }
    }
}

/// A preset name, a preset with dimensions, or explicit coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Name(String),
    Preset {
        preset: String,
        #[serde(default = "two")]
        n: usize,
        #[serde(default, rename = "dimV")]
        dim_v: Option<usize>,
    },
    Explicit(OpDescriptor),
}

fn two() -> usize {
    2
}

impl OperatorSpec {
    pub fn build(&self) -> Result<DiffOp> {
        Ok(match self {
            OperatorSpec::Name(name) => DiffOp::preset(name, 2, None)?,
            OperatorSpec::Preset { preset, n, dim_v } => DiffOp::preset(preset, *n, *dim_v)?,
            OperatorSpec::Explicit(d) => DiffOp::from_descriptor(d)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<f64>>,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Must agree with the experiment named on the command line when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nfunction: Option<NFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Largest admissible number of grid nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_cap_nodes: Option<usize>,
    /// Experiment-specific parameters.
    #[serde(default)]
    pub params: serde_json::Value,
    /// Directory of the config file, against which relative paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            bail!("unsupported config schema_version {} (expected {CONFIG_SCHEMA_VERSION})", cfg.schema_version);
        }
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn operator(&self) -> Result<DiffOp> {
        self.operator.as_ref().context("config needs an 'operator'")?.build()
    }

    pub fn nfunction_or(&self, default: NFunction) -> NFunction {
        self.nfunction.clone().unwrap_or(default)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self.grid.as_ref().context("config needs a 'grid'")?;
        let extent = g.extent.clone().unwrap_or_else(|| vec![1.0; g.shape.len()]);
        let cap = self.memory_cap_nodes.unwrap_or(DEFAULT_NODE_CAP);
        Ok(Grid::with_cap(g.shape.clone(), extent, g.boundary.clone(), cap)?)
    }

    /// Parses `params`, with defaults for absent keys.
    pub fn params<T: DeserializeOwned + Default>(&self) -> Result<T> {
        if self.params.is_null() {
            return Ok(T::default());
        }
        serde_json::from_value(self.params.clone()).context("malformed 'params'")
    }
}

/// `coef * prod_i x_i^powers_i * exp(<exp, x>) * sin(<wave, x> + phase)` in
/// one component; empty vectors drop the corresponding factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryTerm {
    #[serde(default)]
    pub component: usize,
    #[serde(default = "one")]
    pub coef: f64,
    #[serde(default)]
    pub powers: Vec<i32>,
    #[serde(default)]
    pub exp: Vec<f64>,
    #[serde(default)]
    pub wave: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

impl BoundaryTerm {
    fn eval(&self, x: &[f64]) -> f64 {
        let dot = |k: &[f64]| k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut v = self.coef;
        for (xi, &p) in x.iter().zip(&self.powers) {
            v *= xi.powi(p);
        }
        if !self.exp.is_empty() {
            v *= dot(&self.exp).exp();
        }
        if !self.wave.is_empty() {
            v *= (dot(&self.wave) + self.phase).sin();
        }
        v
    }
}

/// Boundary data of a minimization, sampled on the whole grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Terms { terms: Vec<BoundaryTerm> },
    File { path: PathBuf },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Terms { terms: Vec::new() }
    }
}

impl BoundarySpec {
    pub fn field(&self, cfg: &ExperimentConfig, grid: &Grid, dim: usize) -> Result<Field> {
        match self {
            BoundarySpec::Terms { terms } => {
                if let Some(t) = terms.iter().find(|t| t.component >= dim) {
                    bail!("boundary term component {} out of range for {dim} components", t.component);
                }
                Ok(Field::from_fn(grid.clone(), dim, |x, o| {
                    o.fill(0.0);
                    for t in terms {
                        o[t.component] += t.eval(x);
                    }
                }))
            }
            BoundarySpec::File { path } => {
                let f = read_field(cfg.resolve(path))?;
                if f.grid() != grid || f.dim() != dim {
                    bail!("boundary field {} does not match the configured grid and operator", path.display());
                }
                Ok(f)
            }
        }
    }
}
