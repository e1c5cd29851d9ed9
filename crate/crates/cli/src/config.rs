//! Experiment configuration: JSON schema, parsing, and eager validation.
//!
//! Matrices are arrays of row arrays. The `gains` block is optional; when
//! absent a stabilizing pair is searched for automatically. The ensemble's
//! free initial inputs may be listed explicitly or drawn from the seeded
//! uniform rule.

use mflqr_core::ensemble::InitialStateEnsemble;
use mflqr_core::riccati::find_stabilizing_gains;
use mflqr_core::system::{validate_weights, GainPair, MfSystem, WeightSpec};
use mflqr_core::{Mat64, Vec64};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub system: SystemBlock,
    pub weights: WeightsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsBlock>,
    pub ensemble: EnsembleBlock,
    pub run: RunBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub a1: Vec<Vec<f64>>,
    pub a1_bar: Vec<Vec<f64>>,
    pub a2: Vec<Vec<f64>>,
    pub a2_bar: Vec<Vec<f64>>,
    pub b1: Vec<Vec<f64>>,
    pub b1_bar: Vec<Vec<f64>>,
    pub b2: Vec<Vec<f64>>,
    pub b2_bar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    pub q: Vec<Vec<f64>>,
    pub q_bar: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub r_bar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsBlock {
    pub f0: Vec<Vec<f64>>,
    pub f0_bar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub means: Vec<Vec<f64>>,
    pub deviations: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_means: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_deviations: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pi,
    Pd,
    Pdmf,
    Compare,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Pi => write!(f, "pi"),
            Algorithm::Pd => write!(f, "pd"),
            Algorithm::Pdmf => write!(f, "pdmf"),
            Algorithm::Compare => write!(f, "compare"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTag {
    Normal,
    Rademacher,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DataTag {
    Sampled,
    Exact,
}

fn default_eps() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    500
}

fn default_horizon() -> usize {
    100
}

fn default_rollouts() -> usize {
    30
}

fn default_noise() -> NoiseTag {
    NoiseTag::Normal
}

fn default_data() -> DataTag {
    DataTag::Sampled
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub algorithm: Algorithm,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_rollouts")]
    pub rollouts: usize,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: NoiseTag,
    #[serde(default = "default_data")]
    pub data: DataTag,
}

/// Config errors mapped to CLI exit codes 1 (parse/schema) and 2
/// (invariant).
#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Schema(String),
    Invariant(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "parse error: {m}"),
            ConfigError::Schema(m) => write!(f, "schema error: {m}"),
            ConfigError::Invariant(m) => write!(f, "invariant error: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// The config lifted into solver types, with every invariant checked.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: MfSystem<f64>,
    pub weights: WeightSpec<f64>,
    /// Supplied gains, if any; validated for shape but not stability
    /// (stability is a run-time concern with its own exit code).
    pub gains: Option<GainPair<f64>>,
    pub ensemble: InitialStateEnsemble<f64>,
}

fn to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<Mat64, ConfigError> {
    if rows.is_empty() {
        return Err(ConfigError::Schema(format!("{name}: empty matrix")));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(ConfigError::Schema(format!("{name}: empty rows")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(ConfigError::Schema(format!(
                "{name}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::Schema(format!("{name}: non-finite entry in row {i}")));
        }
    }
    Ok(Mat64::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn to_vectors(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<Vec<Vec64>, ConfigError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim {
                return Err(ConfigError::Schema(format!(
                    "{name}: vector {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            Ok(Vec64::from_row_slice(row))
        })
        .collect()
}

/// Read and validate a config file.
pub fn parse_config(path: &Path) -> Result<Experiment, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<Experiment, ConfigError> {
    let config: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| ConfigError::Parse(format!("line {}: {e}", e.line())))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::Schema(format!(
            "schema_version {} unsupported (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }

    let s = &config.system;
    let system = MfSystem::new(
        to_matrix("system.a1", &s.a1)?,
        to_matrix("system.a1_bar", &s.a1_bar)?,
        to_matrix("system.a2", &s.a2)?,
        to_matrix("system.a2_bar", &s.a2_bar)?,
        to_matrix("system.b1", &s.b1)?,
        to_matrix("system.b1_bar", &s.b1_bar)?,
        to_matrix("system.b2", &s.b2)?,
        to_matrix("system.b2_bar", &s.b2_bar)?,
    )
    .map_err(|e| ConfigError::Invariant(format!("system: {e}")))?;

    let wb = &config.weights;
    let weights = WeightSpec::new(
        to_matrix("weights.q", &wb.q)?,
        to_matrix("weights.q_bar", &wb.q_bar)?,
        to_matrix("weights.r", &wb.r)?,
        to_matrix("weights.r_bar", &wb.r_bar)?,
    )
    .map_err(|e| ConfigError::Invariant(format!("weights: {e}")))?;
    if weights.n() != system.n || weights.m() != system.m {
        return Err(ConfigError::Invariant(format!(
            "weights sized {}x{} but the system has n={}, m={}",
            weights.n(),
            weights.m(),
            system.n,
            system.m
        )));
    }
    validate_weights(&weights)
        .map_err(|e| ConfigError::Invariant(format!("weight condition: {e}")))?;

    let gains = match &config.gains {
        None => None,
        Some(g) => Some(
            GainPair::new(
                to_matrix("gains.f0", &g.f0)?,
                to_matrix("gains.f0_bar", &g.f0_bar)?,
            )
            .and_then(|g| {
                if g.f.nrows() != system.m || g.f.ncols() != system.n {
                    Err(mflqr_core::Error::DimensionMismatch(format!(
                        "gains must be {}x{}",
                        system.m, system.n
                    )))
                } else {
                    Ok(g)
                }
            })
            .map_err(|e| ConfigError::Invariant(format!("gains: {e}")))?,
        ),
    };

    let eb = &config.ensemble;
    let means = to_vectors("ensemble.means", &eb.means, system.n)?;
    let devs = to_vectors("ensemble.deviations", &eb.deviations, system.n)?;
    if means.len() != devs.len() {
        return Err(ConfigError::Schema(format!(
            "ensemble: {} means but {} deviations",
            means.len(),
            devs.len()
        )));
    }
    let ensemble = match (&eb.input_means, &eb.input_deviations) {
        (Some(im), Some(id)) => InitialStateEnsemble::new(
            means,
            devs,
            to_vectors("ensemble.input_means", im, system.m)?,
            to_vectors("ensemble.input_deviations", id, system.m)?,
        ),
        (None, None) => InitialStateEnsemble::with_seeded_inputs(
            means,
            devs,
            system.m,
            config.run.seed,
        ),
        _ => {
            return Err(ConfigError::Schema(
                "ensemble: input_means and input_deviations must be given together".into(),
            ))
        }
    }
    .map_err(|e| ConfigError::Invariant(format!("ensemble: {e}")))?;

    if config.run.eps <= 0.0 || !config.run.eps.is_finite() {
        return Err(ConfigError::Schema("run.eps must be positive".into()));
    }
    if config.run.max_iter == 0 {
        return Err(ConfigError::Schema("run.max_iter must be positive".into()));
    }
    if config.run.horizon == 0 {
        return Err(ConfigError::Schema("run.horizon must be positive".into()));
    }
    if config.run.rollouts < 2 {
        return Err(ConfigError::Schema("run.rollouts must be at least 2".into()));
    }

    Ok(Experiment {
        config,
        system,
        weights,
        gains,
        ensemble,
    })
}

impl Experiment {
    /// Supplied gains, or a searched stabilizing pair.
    pub fn initial_gains(&self) -> Result<GainPair<f64>, mflqr_core::Error> {
        match &self.gains {
            Some(g) => Ok(g.clone()),
            None => find_stabilizing_gains(&self.system, self.config.run.seed, 400),
        }
    }
}

pub fn matrix_to_rows(m: &Mat64) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
