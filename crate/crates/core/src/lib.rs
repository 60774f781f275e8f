//! Risk-based impatient queuing for edge task offloading.
//!
//! Tasks either compute locally or join a single-server FCFS queue at the edge. Each
//! task compares risk quantiles of its local latency and its remaining queueing delay,
//! balking or reneging when local computation becomes the safer bet. The crate holds
//! the distributions and beliefs behind that rule, an online learner for unknown
//! service rates, a seeded discrete-event simulator and the experiment harness.

// negated comparisons are used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod learner;
pub mod quad;
pub mod rng;
pub mod sim;

pub use belief::{
    decide_offload, entrance_quantile, mmp_cumulative_rate, mmp_evolve, mmp_waiting_cdf, mmp_waiting_quantile,
    waiting_quantile, Choice, MmpBelief, MmpSpec, PoissonBelief,
};
pub use dist::{erlang_cdf, erlang_quantile, exp_quantile, utility, ErlangDist, ExpDist, UtilitySpec};
pub use error::{Error, Result};
pub use experiments::{
    builtin_names, builtin_scenario, compare_report, kpi_from_tasks, run_monte_carlo, BenchTable, KpiSummary,
    LocalModel, Report, ReportRow, ScenarioConfig,
};
pub use learner::{
    critical_rate, estimate_rate, estimator_density, expected_loss, learning_cost, learning_gain, record_observation,
    should_renege, LearnerConfig, LearnerState, ObservationLog, Stopping,
};
pub use sim::{
    draw_service_completion, run_simulation, EventKind, EventRecord, Policy, ServedBy, ServerProcess, SimOutput, Task,
};
