//! Congestion-control policies and their decision hooks.

use serde::{Deserialize, Serialize};

use crate::belief::{decide_offload, local_quantile, Choice, PoissonBelief};
use crate::error::{Error, Result};
use crate::learner::{should_renege, LearnerConfig, LearnerState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Policy {
    /// Risk-quantile balking/reneging with exact position and service knowledge.
    RiskPerfect { outage: f64 },
    /// Risk-quantile reneging driven by an online rate estimate.
    RiskImperfect { outage: f64, #[serde(default)] learner: LearnerConfig },
    /// Arrivals finding `max_len` tasks in the system compute locally.
    Truncate { max_len: usize },
    /// Services longer than `timeout` are cut off and finished locally.
    Preempt { timeout: f64 },
    /// Every task is offloaded and waits.
    PatientFcfs,
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            Self::RiskPerfect { outage } | Self::RiskImperfect { outage, .. } if !(*outage > 0.0 && *outage < 1.0) => {
                bad(format!("outage probability must lie in (0, 1), got {outage}"))
            }
            Self::RiskImperfect { learner, .. } => learner.validate(),
            Self::Truncate { max_len: 0 } => bad("truncation length must be at least 1".into()),
            Self::Preempt { timeout } if !(*timeout > 0.0 && timeout.is_finite()) => {
                bad(format!("preemption timeout must be positive, got {timeout}"))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in reports, e.g. `R10`, `T5`, `P3`.
    pub fn label(&self) -> String {
        match self {
            Self::RiskPerfect { outage } => format!("R{}", fmt_percent(*outage)),
            Self::RiskImperfect { learner, outage } => match learner.stopping {
                crate::learner::Stopping::Optimal => format!("L-opt@{}", fmt_percent(*outage)),
                crate::learner::Stopping::FixedMinimum(n) => format!("L-fix{n}@{}", fmt_percent(*outage)),
            },
            Self::Truncate { max_len } => format!("T{max_len}"),
            Self::Preempt { timeout } => format!("P{timeout}"),
            Self::PatientFcfs => "FCFS".into(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::RiskPerfect { .. } => "R",
            Self::RiskImperfect { .. } => "L",
            Self::Truncate { .. } => "T",
            Self::Preempt { .. } => "P",
            Self::PatientFcfs => "F",
        }
    }
}

fn fmt_percent(p: f64) -> String {
    let v = p * 100.0;
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

/// What the cloud side tells a deciding user.
pub trait CloudView {
    /// Risk quantile of the remaining wait at position `k`, excluding the offload overhead.
    fn waiting_quantile(&mut self, k: u32, outage: f64) -> Result<f64>;
    fn offload_overhead(&self) -> f64;
}

/// Poisson server with a known rate.
#[derive(Debug, Clone, Copy)]
pub struct PoissonCloud {
    pub rate: f64,
    pub offload_overhead: f64,
}

impl CloudView for PoissonCloud {
    fn waiting_quantile(&mut self, k: u32, outage: f64) -> Result<f64> {
        PoissonBelief::new(k, self.rate, self.offload_overhead)?.waiting_quantile(outage)
    }
    fn offload_overhead(&self) -> f64 {
        self.offload_overhead
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalDecision {
    EnterQueue,
    Balk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionDecision {
    Stay,
    Renege,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceDecision {
    Continue,
    PreemptToLocal,
}

/// Why a waiting task re-evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    /// Its position changed (service completion or a renege ahead).
    Position,
    /// The server switched state.
    ServerState,
}

/// Decision of a task generated with `queue_len` tasks already in the system.
pub fn on_arrival(
    policy: &Policy,
    local_mean: f64,
    queue_len: usize,
    cloud: &mut dyn CloudView,
) -> Result<ArrivalDecision> {
    let k = queue_len as u32 + 1;
    let risk_test = |outage: f64, cloud: &mut dyn CloudView| -> Result<ArrivalDecision> {
        let local_q = local_quantile(local_mean, outage)?;
        let cloud_q = cloud.offload_overhead() + cloud.waiting_quantile(k, outage)?;
        Ok(match decide_offload(local_q, cloud_q) {
            Choice::Local => ArrivalDecision::Balk,
            Choice::Cloud => ArrivalDecision::EnterQueue,
        })
    };
    match policy {
        Policy::RiskPerfect { outage } => risk_test(*outage, cloud),
        Policy::RiskImperfect { outage, learner } => match learner.prior_rate {
            None => Ok(ArrivalDecision::EnterQueue),
            Some(rate) => risk_test(*outage, &mut PoissonCloud { rate, offload_overhead: cloud.offload_overhead() }),
        },
        Policy::Truncate { max_len } => Ok(if queue_len >= *max_len {
            ArrivalDecision::Balk
        } else {
            ArrivalDecision::EnterQueue
        }),
        Policy::Preempt { .. } | Policy::PatientFcfs => Ok(ArrivalDecision::EnterQueue),
    }
}

/// Re-evaluation of a waiting task now at position `new_k`, `t_task` after its arrival.
///
/// Imperfect-QSI tasks log the new position before testing.
pub fn on_position_update(
    policy: &Policy,
    local_mean: f64,
    learner: Option<&mut LearnerState>,
    new_k: u32,
    t_task: f64,
    update: UpdateKind,
    cloud: &mut dyn CloudView,
) -> Result<PositionDecision> {
    let renege = match policy {
        Policy::RiskPerfect { outage } => {
            let local_q = local_quantile(local_mean, *outage)?;
            decide_offload(local_q, cloud.waiting_quantile(new_k, *outage)?) == Choice::Local
        }
        Policy::RiskImperfect { learner: cfg, .. } => match (update, learner) {
            (UpdateKind::Position, Some(state)) => {
                state.observe_or_coalesce(new_k, t_task)?;
                should_renege(new_k, t_task, state, cfg.stopping)?
            }
            (UpdateKind::Position, None) => {
                return Err(Error::Contract("imperfect-QSI task without learner state".into()))
            }
            (UpdateKind::ServerState, _) => false,
        },
        _ => false,
    };
    Ok(if renege { PositionDecision::Renege } else { PositionDecision::Stay })
}

/// Whether a task that has been in service for `service_elapsed` keeps the server.
pub fn on_service_tick(policy: &Policy, service_elapsed: f64) -> ServiceDecision {
    match policy {
        Policy::Preempt { timeout } if service_elapsed >= *timeout => ServiceDecision::PreemptToLocal,
        _ => ServiceDecision::Continue,
    }
}
