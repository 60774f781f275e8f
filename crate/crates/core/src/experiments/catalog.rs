use std::str::FromStr;

use super::{LocalModel, ScenarioConfig};
use crate::belief::MmpSpec;
use crate::dist::UtilitySpec;
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, Stopping};
use crate::sim::{Policy, ServerProcess};

const ARRIVAL_RATE: f64 = 1.5;
const LOW_LOAD_RATE: f64 = 2.0;
const HIGH_LOAD_RATE: f64 = 1.0;

const PERFECT_BASES: [&str; 6] = ["poisson-low", "poisson-high", "mmpA", "mmpB", "mmpC", "mmpC-model2"];
const PERFECT_METHODS: [&str; 7] = ["R0.1", "R10", "T5", "T10", "P3", "P6", "FCFS"];
const IMPERFECT_BASES: [&str; 3] = ["imperfect-low", "imperfect-high", "imperfect-high-model2"];
const IMPERFECT_METHODS: [&str; 4] = ["optlearn", "fixed3", "fixed6", "perfect"];

fn mmp(transition: [[f64; 2]; 2]) -> ServerProcess {
    ServerProcess::Mmp {
        spec: MmpSpec {
            rates: vec![LOW_LOAD_RATE, HIGH_LOAD_RATE],
            transition: transition.iter().map(|r| r.to_vec()).collect(),
            period: 1.0,
        },
        initial_state: 0,
    }
}

fn base(name: &str) -> Option<(ServerProcess, LocalModel)> {
    let poisson = |rate| ServerProcess::Poisson { rate };
    Some(match name {
        "poisson-low" | "imperfect-low" => (poisson(LOW_LOAD_RATE), LocalModel::Model1),
        "poisson-high" | "imperfect-high" => (poisson(HIGH_LOAD_RATE), LocalModel::Model1),
        "imperfect-high-model2" => (poisson(HIGH_LOAD_RATE), LocalModel::Model2),
        "mmpA" => (mmp([[0.9, 0.1], [0.8, 0.2]]), LocalModel::Model1),
        "mmpB" => (mmp([[0.7, 0.3], [0.3, 0.7]]), LocalModel::Model1),
        "mmpC" => (mmp([[0.2, 0.8], [0.1, 0.9]]), LocalModel::Model1),
        "mmpC-model2" => (mmp([[0.2, 0.8], [0.1, 0.9]]), LocalModel::Model2),
        _ => return None,
    })
}

fn perfect_method(name: &str) -> Option<Policy> {
    Some(match name {
        "R0.1" => Policy::RiskPerfect { outage: 0.001 },
        "R10" => Policy::RiskPerfect { outage: 0.1 },
        "T5" => Policy::Truncate { max_len: 5 },
        "T10" => Policy::Truncate { max_len: 10 },
        "P3" => Policy::Preempt { timeout: 3.0 },
        "P6" => Policy::Preempt { timeout: 6.0 },
        "FCFS" => Policy::PatientFcfs,
        _ => return None,
    })
}

fn imperfect_method(name: &str) -> Option<Policy> {
    let learn = |stopping| Policy::RiskImperfect {
        outage: 0.1,
        learner: LearnerConfig { stopping, ..LearnerConfig::default() },
    };
    Some(match name {
        "optlearn" => learn(Stopping::Optimal),
        "fixed3" => learn(Stopping::FixedMinimum(3)),
        "fixed6" => learn(Stopping::FixedMinimum(6)),
        "perfect" => Policy::RiskPerfect { outage: 0.1 },
        _ => return None,
    })
}

/// Every catalog key, `base/method`.
pub fn builtin_names() -> Vec<String> {
    let mut names = Vec::new();
    for b in PERFECT_BASES {
        names.extend(PERFECT_METHODS.iter().map(|m| format!("{b}/{m}")));
    }
    for b in IMPERFECT_BASES {
        names.extend(IMPERFECT_METHODS.iter().map(|m| format!("{b}/{m}")));
    }
    names
}

/// Looks up a built-in experiment such as `poisson-low/R10` or `imperfect-high/fixed3`.
pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig> {
    let unknown = || Error::UnknownScenario { name: name.to_string(), valid: builtin_names() };
    let (b, m) = name.split_once('/').ok_or_else(unknown)?;
    let policy = if IMPERFECT_BASES.contains(&b) {
        imperfect_method(m)
    } else if PERFECT_BASES.contains(&b) {
        perfect_method(m)
    } else {
        None
    }
    .ok_or_else(unknown)?;
    let (server, local_model) = base(b).ok_or_else(unknown)?;
    Ok(ScenarioConfig {
        name: name.to_string(),
        arrival_rate: ARRIVAL_RATE,
        local_model,
        offload_overhead: 0.0,
        server,
        policy,
        utility: UtilitySpec::default(),
        horizon: 300.0,
        period: 1.0,
        replications: 10,
        master_seed: 0,
    })
}

/// Benchmark tables reproduced by the `bench` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchTable {
    /// Poisson service, perfect information, both loads.
    Table2,
    /// MMP service, perfect information.
    Table3,
    /// Poisson service, imperfect information.
    Table4,
}

impl FromStr for BenchTable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table2" => Ok(Self::Table2),
            "table3" => Ok(Self::Table3),
            "table4" => Ok(Self::Table4),
            _ => Err(Error::Config(format!("unknown bench `{s}`; expected table2, table3 or table4"))),
        }
    }
}

impl BenchTable {
    pub fn name(self) -> &'static str {
        match self {
            Self::Table2 => "table2",
            Self::Table3 => "table3",
            Self::Table4 => "table4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    /// Column group, i.e. the scenario base.
    pub group: String,
    pub method: String,
    pub scenario: String,
}

/// Rows of a benchmark table, grouped by scenario and ordered R, T, P within each group.
pub fn table_rows(table: BenchTable) -> Vec<TableRow> {
    let six = &PERFECT_METHODS[..6];
    let (bases, methods): (&[&str], &[&str]) = match table {
        BenchTable::Table2 => (&PERFECT_BASES[..2], six),
        BenchTable::Table3 => (&PERFECT_BASES[2..], six),
        BenchTable::Table4 => (&IMPERFECT_BASES, &IMPERFECT_METHODS),
    };
    bases
        .iter()
        .flat_map(|b| {
            methods.iter().map(move |m| TableRow {
                group: b.to_string(),
                method: m.to_string(),
                scenario: format!("{b}/{m}"),
            })
        })
        .collect()
}
