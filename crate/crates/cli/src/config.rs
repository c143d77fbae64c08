//! The experiment configuration file.
//!
//! One JSON document holds a block per command plus the seed list. Blocks a
//! command does not use may be omitted. After parsing, [`ExperimentConfig::check`]
//! runs every numeric validation of the underlying modules and reports the
//! offending field by its path in the document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qew_core::bound::BoundParams;
use qew_core::disorder::ObstacleDistribution;
use qew_core::dynamics::{DynamicsError, SimConfig};
use qew_core::oracle::{SuiteConfig, DEFAULT_BUDGET};

use crate::error::CliError;

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_lambda() -> f64 {
    1.0
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub simulation: Option<SimulationBlock>,
    #[serde(default)]
    pub bound: Option<BoundBlock>,
    #[serde(default)]
    pub enumerate: Option<EnumerateBlock>,
    #[serde(default)]
    pub oracle: Option<SuiteConfig>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

/// Simulation parameters shared by `simulate` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub dimension: usize,
    pub side: usize,
    pub force: f64,
    /// `null` picks the largest stable step that divides `record_interval`,
    /// shared by all seeds.
    #[serde(default)]
    pub dt: Option<f64>,
    pub final_time: f64,
    pub record_interval: f64,
    pub distribution: ObstacleDistribution,
    /// Defaults to the origin.
    #[serde(default)]
    pub tracked_site: Option<Vec<i64>>,
    /// `lambda` of the reference bound `V(F)`.
    #[serde(default = "default_lambda")]
    pub reference_lambda: f64,
}

impl SimulationBlock {
    /// The core configuration for one seed. `dt` falls back to the record
    /// interval; the caller replaces it once the stable step is known.
    pub fn sim_config(&self, seed: u64, force: f64) -> SimConfig {
        SimConfig {
            dimension: self.dimension,
            side: self.side,
            force,
            dt: self.dt.unwrap_or(self.record_interval),
            final_time: self.final_time,
            record_interval: self.record_interval,
            seed,
            distribution: self.distribution,
            tracked_site: self
                .tracked_site
                .clone()
                .unwrap_or_else(|| vec![0; self.dimension]),
        }
    }

    fn check(&self, prefix: &str) -> Result<(), CliError> {
        self.check_force(prefix, self.force)?;
        if !(self.reference_lambda > 0.0 && self.reference_lambda.is_finite()) {
            return Err(field(
                prefix,
                "reference_lambda",
                "must be positive and finite",
            ));
        }
        self.distribution
            .beta(self.reference_lambda)
            .map_err(|e| field(prefix, "distribution", e.to_string()))?;
        Ok(())
    }

    fn check_force(&self, prefix: &str, force: f64) -> Result<(), CliError> {
        match self.sim_config(0, force).validate() {
            Ok(()) => Ok(()),
            Err(DynamicsError::InvalidConfig { name, reason }) => Err(field(prefix, name, reason)),
            Err(DynamicsError::Disorder(e)) => Err(field(prefix, "distribution", e.to_string())),
            Err(e) => Err(CliError::Config(format!("{prefix}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundBlock {
    pub lambda: f64,
    /// Given directly, or derived from `distribution`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub distribution: Option<ObstacleDistribution>,
    pub dimension: usize,
    pub forces: Vec<f64>,
    /// Use `G = F` (the bound for admissible integer profiles) instead of
    /// `G = floor(F) - 2d`.
    #[serde(default)]
    pub discrete: bool,
}

impl BoundBlock {
    pub fn beta(&self) -> Result<f64, CliError> {
        match (self.beta, &self.distribution) {
            (Some(b), None) => Ok(b),
            (None, Some(d)) => d
                .beta(self.lambda)
                .map_err(|e| field("bound", "distribution", e.to_string())),
            _ => Err(field(
                "bound",
                "beta",
                "give exactly one of `beta` and `distribution`",
            )),
        }
    }

    fn check(&self) -> Result<(), CliError> {
        let beta = self.beta()?;
        if self.forces.is_empty() {
            return Err(field("bound", "forces", "must not be empty"));
        }
        for (i, &force) in self.forces.iter().enumerate() {
            let params = BoundParams {
                lambda: self.lambda,
                beta,
                dimension: self.dimension,
                force,
            };
            params
                .validate()
                .map_err(|e| field("bound", &format!("forces[{i}]"), e.to_string()))?;
            if self.discrete && force.fract() != 0.0 {
                return Err(field(
                    "bound",
                    &format!("forces[{i}]"),
                    "must be an integer when `discrete` is set",
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of `enumerate`: one `(k, d, A, F)` instance on a quenched field
/// seeded by each seed in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateBlock {
    pub radius: usize,
    pub dimension: usize,
    pub cap: i64,
    pub force: i64,
    pub lambda: f64,
    pub mu: f64,
    pub distribution: ObstacleDistribution,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

impl EnumerateBlock {
    fn check(&self) -> Result<(), CliError> {
        if self.radius == 0 {
            return Err(field("enumerate", "radius", "must be >= 1"));
        }
        if self.dimension == 0 {
            return Err(field("enumerate", "dimension", "must be >= 1"));
        }
        if self.cap < 0 {
            return Err(field("enumerate", "cap", "must be >= 0"));
        }
        if self.force < 0 {
            return Err(field("enumerate", "force", "must be >= 0"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(field("enumerate", "lambda", "must be positive and finite"));
        }
        if !(self.mu > self.lambda && self.mu.is_finite()) {
            return Err(field("enumerate", "mu", "must be finite and exceed lambda"));
        }
        self.distribution
            .validate()
            .map_err(|e| field("enumerate", "distribution", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Driving forces; all other parameters come from `simulation`.
    pub forces: Vec<f64>,
}

fn field(block: &str, name: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{block}.{name}: {reason}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Validation shared by every command.
    pub fn check_seeds(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds: must not be empty".into()));
        }
        Ok(())
    }

    pub fn simulation(&self) -> Result<&SimulationBlock, CliError> {
        self.check_seeds()?;
        let block = self
            .simulation
            .as_ref()
            .ok_or_else(|| CliError::Config("simulation: block is required".into()))?;
        block.check("simulation")?;
        Ok(block)
    }

    pub fn bound(&self) -> Result<&BoundBlock, CliError> {
        let block = self
            .bound
            .as_ref()
            .ok_or_else(|| CliError::Config("bound: block is required".into()))?;
        block.check()?;
        Ok(block)
    }

    pub fn enumerate(&self) -> Result<&EnumerateBlock, CliError> {
        self.check_seeds()?;
        let block = self
            .enumerate
            .as_ref()
            .ok_or_else(|| CliError::Config("enumerate: block is required".into()))?;
        block.check()?;
        Ok(block)
    }

    /// The suite configuration; absent means all defaults.
    pub fn oracle(&self) -> Result<SuiteConfig, CliError> {
        let suite = self.oracle.clone().unwrap_or_default();
        suite
            .validate()
            .map_err(|e| CliError::Config(format!("oracle: {e}")))?;
        Ok(suite)
    }

    pub fn sweep(&self) -> Result<(&SimulationBlock, &SweepBlock), CliError> {
        let simulation = self.simulation()?;
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("sweep: block is required".into()))?;
        if sweep.forces.is_empty() {
            return Err(field("sweep", "forces", "must not be empty"));
        }
        for (i, &force) in sweep.forces.iter().enumerate() {
            simulation
                .check_force("sweep", force)
                .map_err(|e| CliError::Config(format!("{e} (at forces[{i}])")))?;
        }
        Ok((simulation, sweep))
    }

    /// Replaces the seed list and the suite seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = vec![seed];
        if let Some(oracle) = self.oracle.as_mut() {
            oracle.seed = seed;
        } else {
            self.oracle = Some(SuiteConfig {
                seed,
                ..SuiteConfig::default()
            });
        }
    }
}
