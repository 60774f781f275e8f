use serde::{Deserialize, Serialize};

use crate::sim::{ServedBy, SimOutput, Task};

/// Key performance indicators over a pool of tasks.
///
/// Utility KPIs are `None` when the pool is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub task_count: usize,
    /// Fraction of tasks whose computation completed at the server.
    pub admission_rate: Option<f64>,
    pub avg_utility: Option<f64>,
    /// Lower midpoint for even counts.
    pub median_utility: Option<f64>,
    /// `(utility, fraction of tasks with utility <= it)` at every distinct utility.
    pub ecdf: Vec<(f64, f64)>,
    pub mec_served_count: usize,
    pub balk_count: usize,
    pub renege_count: usize,
    pub preempt_count: usize,
    /// Mean observation count over tasks that learned while queueing.
    pub mean_observations_per_task: Option<f64>,
    pub replications: usize,
    pub replication_avg_min: Option<f64>,
    pub replication_avg_max: Option<f64>,
}

impl KpiSummary {
    pub fn is_empty(&self) -> bool {
        self.task_count == 0
    }

    /// Pools the tasks of all replications and records the spread of per-replication averages.
    pub fn from_replications(outputs: &[SimOutput]) -> Self {
        let pooled: Vec<&Task> = outputs.iter().flat_map(|o| o.tasks.iter()).collect();
        let mut summary = summarise(&pooled);
        let avgs: Vec<f64> = outputs
            .iter()
            .filter_map(|o| summarise(&o.tasks.iter().collect::<Vec<_>>()).avg_utility)
            .collect();
        summary.replications = outputs.len();
        summary.replication_avg_min = avgs.iter().copied().reduce(f64::min);
        summary.replication_avg_max = avgs.iter().copied().reduce(f64::max);
        summary
    }
}

pub fn kpi_from_tasks(tasks: &[Task]) -> KpiSummary {
    let mut s = summarise(&tasks.iter().collect::<Vec<_>>());
    s.replications = 1;
    s.replication_avg_min = s.avg_utility;
    s.replication_avg_max = s.avg_utility;
    s
}

fn summarise(tasks: &[&Task]) -> KpiSummary {
    let n = tasks.len();
    let count = |how: ServedBy| tasks.iter().filter(|t| t.served_by == how).count();
    let mec = count(ServedBy::MecServer);
    let mut utilities: Vec<f64> = tasks.iter().map(|t| t.end_utility).collect();
    let avg = (n > 0).then(|| utilities.iter().sum::<f64>() / n as f64);
    utilities.sort_by(f64::total_cmp);
    let median = (n > 0).then(|| utilities[(n - 1) / 2]);
    let mut ecdf: Vec<(f64, f64)> = Vec::new();
    for (i, &u) in utilities.iter().enumerate() {
        let frac = (i + 1) as f64 / n as f64;
        match ecdf.last_mut() {
            Some(last) if last.0 == u => last.1 = frac,
            _ => ecdf.push((u, frac)),
        }
    }
    let obs: Vec<usize> = tasks.iter().filter_map(|t| t.observations).collect();
    let mean_obs = (!obs.is_empty()).then(|| obs.iter().sum::<usize>() as f64 / obs.len() as f64);
    KpiSummary {
        task_count: n,
        admission_rate: (n > 0).then(|| mec as f64 / n as f64),
        avg_utility: avg,
        median_utility: median,
        ecdf,
        mec_served_count: mec,
        balk_count: count(ServedBy::LocalDevice),
        renege_count: count(ServedBy::LocalAfterRenege),
        preempt_count: count(ServedBy::LocalAfterPreempt),
        mean_observations_per_task: mean_obs,
        replications: 0,
        replication_avg_min: None,
        replication_avg_max: None,
    }
}
