//! Scenario configuration, the built-in catalog and the Monte-Carlo runner.

mod catalog;
mod kpi;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::UtilitySpec;
use crate::error::{Error, Result};
use crate::rng::replication_seed;
use crate::sim::{run_simulation, Policy, ServerProcess, SimOutput};

pub use catalog::{builtin_names, builtin_scenario, table_rows, BenchTable, TableRow};
pub use kpi::{kpi_from_tasks, KpiSummary};
pub use report::{compare_report, parse_report_csv, Report, ReportRow};

/// Distribution of the per-task mean local latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LocalModel {
    /// Uniform on (2, 10).
    Model1,
    /// Uniform on (4, 15).
    Model2,
    Uniform { low: f64, high: f64 },
}

impl LocalModel {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Self::Model1 => (2.0, 10.0),
            Self::Model2 => (4.0, 15.0),
            Self::Uniform { low, high } => (low, high),
        }
    }
}

fn default_horizon() -> f64 {
    300.0
}
fn default_period() -> f64 {
    1.0
}
fn default_replications() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub arrival_rate: f64,
    pub local_model: LocalModel,
    #[serde(default)]
    pub offload_overhead: f64,
    pub server: ServerProcess,
    pub policy: Policy,
    #[serde(default)]
    pub utility: UtilitySpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return bad(format!("arrival rate must be positive, got {}", self.arrival_rate));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if self.replications == 0 {
            return bad("at least one replication is required".into());
        }
        if !(self.offload_overhead >= 0.0 && self.offload_overhead.is_finite()) {
            return bad(format!("offload overhead must be non-negative, got {}", self.offload_overhead));
        }
        let (low, high) = self.local_model.bounds();
        if !(low > 0.0 && high > low && high.is_finite()) {
            return bad(format!("local model bounds ({low}, {high}) must be positive and ordered"));
        }
        self.utility.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.server.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.policy.validate()?;
        if let ServerProcess::Mmp { spec, .. } = &self.server {
            if spec.period != self.period {
                return bad(format!("server period {} differs from scenario period {}", spec.period, self.period));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_replications(mut self, n: u32) -> Self {
        self.replications = n;
        self
    }
}

/// Runs every replication; results are ordered by replication index whatever the thread count.
pub fn run_replications(config: &ScenarioConfig) -> Result<Vec<SimOutput>> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|i| run_simulation(config, replication_seed(config.master_seed, i)))
        .collect()
}

/// Sequential counterpart of [`run_replications`].
pub fn run_replications_sequential(config: &ScenarioConfig) -> Result<Vec<SimOutput>> {
    config.validate()?;
    (0..config.replications as u64)
        .map(|i| run_simulation(config, replication_seed(config.master_seed, i)))
        .collect()
}

/// Pools all replications of `config` and summarises them.
pub fn run_monte_carlo(config: &ScenarioConfig) -> Result<KpiSummary> {
    Ok(KpiSummary::from_replications(&run_replications(config)?))
}
