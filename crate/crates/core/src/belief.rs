//! Beliefs about remaining cloud sojourn and the risk-quantile offloading rule.
//!
//! A task at position `k` needs `k` service completions (those ahead of it plus its
//! own). Under Poisson service the remaining sojourn is Erlang(k, μ). Under
//! Markov-modulated service the server state follows a per-period DTMC and the
//! completion count over `[t, t+x]` is Poisson with mean `Λ = ∫ μ̄_τ dτ`.

use serde::{Deserialize, Serialize};

use crate::dist::{self, bisect_increasing, check_outage, poisson_lower_tail, ErlangDist};
use crate::error::{domain, Result};

/// Where a task is (or will be) computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    Local,
    Cloud,
}

/// Risk-quantile rule: compute locally iff the local risk quantile does not exceed
/// the cloud one. Ties go local.
pub fn decide_offload(local_q: f64, cloud_q: f64) -> Choice {
    if local_q <= cloud_q {
        Choice::Local
    } else {
        Choice::Cloud
    }
}

/// Belief about the remaining sojourn at position `k` of a Poisson(μ) server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonBelief {
    pub position: u32,
    pub rate: f64,
    pub offload_overhead: f64,
}

impl PoissonBelief {
    pub fn new(position: u32, rate: f64, offload_overhead: f64) -> Result<Self> {
        if position == 0 {
            return Err(domain("queue position must be at least 1"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(domain(format!("service rate must be positive, got {rate}")));
        }
        if !(offload_overhead >= 0.0 && offload_overhead.is_finite()) {
            return Err(domain(format!("offload overhead must be non-negative, got {offload_overhead}")));
        }
        Ok(Self { position, rate, offload_overhead })
    }

    /// Risk quantile of the delay seen by a task that has not yet entered: `τs + τ_w,k`.
    pub fn entrance_quantile(&self, outage: f64) -> Result<f64> {
        Ok(self.offload_overhead + self.waiting_quantile(outage)?)
    }

    /// Risk quantile of the remaining wait of a task already in the queue.
    pub fn waiting_quantile(&self, outage: f64) -> Result<f64> {
        check_outage(outage)?;
        ErlangDist::new(self.position, self.rate)?.quantile(1.0 - outage)
    }
}

/// Markov-modulated service: per-state rates and a per-period transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmpSpec {
    pub rates: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_period() -> f64 {
    1.0
}

impl MmpSpec {
    pub fn new(rates: Vec<f64>, transition: Vec<Vec<f64>>, period: f64) -> Result<Self> {
        let spec = Self { rates, transition, period };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.rates.len();
        if d == 0 {
            return Err(domain("MMP needs at least one state"));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(domain(format!("MMP rates must be positive, got {r}")));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(domain(format!("MMP period must be positive, got {}", self.period)));
        }
        if self.transition.len() != d || self.transition.iter().any(|row| row.len() != d) {
            return Err(domain(format!("transition matrix must be {d}x{d}")));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(domain(format!("transition row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(domain(format!("transition row {i} sums to {s}, not 1")));
            }
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.rates.len()
    }

    /// Expected instantaneous rate `μ̄ = rates · y`.
    pub fn mean_rate(&self, pmf: &[f64]) -> f64 {
        self.rates.iter().zip(pmf).map(|(r, p)| r * p).sum()
    }

    /// One DTMC step in row-vector convention: `y ← y P`.
    pub fn step(&self, pmf: &[f64]) -> Vec<f64> {
        let d = self.states();
        let mut out = vec![0.0; d];
        for (i, &yi) in pmf.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(&self.transition[i]) {
                *o += yi * p;
            }
        }
        out
    }

    /// Stationary distribution by power iteration.
    pub fn stationary(&self) -> Vec<f64> {
        let d = self.states();
        let mut y = vec![1.0 / d as f64; d];
        for _ in 0..100_000 {
            let next = self.step(&y);
            let diff: f64 = next.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            y = next;
            if diff < 1e-15 {
                break;
            }
        }
        y
    }

    pub fn one_hot(&self, state: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.states()];
        y[state] = 1.0;
        y
    }
}

pub(crate) fn check_pmf(pmf: &[f64], states: usize) -> Result<()> {
    if pmf.len() != states {
        return Err(domain(format!("pmf has {} entries, expected {states}", pmf.len())));
    }
    if pmf.iter().any(|p| !(*p >= 0.0)) {
        return Err(domain("pmf entries must be non-negative"));
    }
    let s: f64 = pmf.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(domain(format!("pmf sums to {s}, not 1")));
    }
    Ok(())
}

/// Evolves a state pmf by `steps` periods.
pub fn mmp_evolve(state_pmf: &[f64], spec: &MmpSpec, steps: u64) -> Result<Vec<f64>> {
    check_pmf(state_pmf, spec.states())?;
    let mut y = state_pmf.to_vec();
    for _ in 0..steps {
        y = spec.step(&y);
    }
    Ok(y)
}

/// Belief about the remaining wait at position `k` under MMP service.
///
/// `period_elapsed` is how far the current instant is into the current period; the
/// rest of that period is served at `rates · state_pmf`, later periods at the
/// evolved pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct MmpBelief<'a> {
    pub position: u32,
    pub state_pmf: Vec<f64>,
    pub spec: &'a MmpSpec,
    pub period_elapsed: f64,
}

impl<'a> MmpBelief<'a> {
    pub fn new(position: u32, state_pmf: Vec<f64>, spec: &'a MmpSpec) -> Result<Self> {
        Self::with_phase(position, state_pmf, spec, 0.0)
    }

    pub fn with_phase(position: u32, state_pmf: Vec<f64>, spec: &'a MmpSpec, period_elapsed: f64) -> Result<Self> {
        if position == 0 {
            return Err(domain("queue position must be at least 1"));
        }
        check_pmf(&state_pmf, spec.states())?;
        if !(period_elapsed >= 0.0 && period_elapsed < spec.period) {
            return Err(domain(format!("period offset {period_elapsed} outside [0, {})", spec.period)));
        }
        Ok(Self { position, state_pmf, spec, period_elapsed })
    }

    /// The rate, if it is provably constant over the whole future.
    fn constant_rate(&self) -> Option<f64> {
        let first = self.spec.rates[0];
        if self.spec.rates.iter().all(|&r| r == first) {
            return Some(first);
        }
        let mut support = self.state_pmf.iter().enumerate().filter(|(_, p)| **p > 0.0);
        match (support.next(), support.next()) {
            (Some((d, _)), None) if self.spec.transition[d][d] == 1.0 => Some(self.spec.rates[d]),
            _ => None,
        }
    }

    fn profile(&self) -> RateProfile<'_> {
        RateProfile::new(self.spec, &self.state_pmf, self.spec.period - self.period_elapsed)
    }
}

/// Piecewise-constant expected rate, generated period by period on demand.
struct RateProfile<'a> {
    spec: &'a MmpSpec,
    first_len: f64,
    pmf: Vec<f64>,
    // mean rate of segment j (segment 0 is the partial current period)
    mubar: Vec<f64>,
    // Λ at the end of segment j
    prefix: Vec<f64>,
}

impl<'a> RateProfile<'a> {
    fn new(spec: &'a MmpSpec, pmf: &[f64], first_len: f64) -> Self {
        let m0 = spec.mean_rate(pmf);
        Self {
            spec,
            first_len,
            pmf: pmf.to_vec(),
            mubar: vec![m0],
            prefix: vec![m0 * first_len],
        }
    }

    fn extend_to(&mut self, segments: usize) {
        while self.mubar.len() <= segments {
            self.pmf = self.spec.step(&self.pmf);
            let m = self.spec.mean_rate(&self.pmf);
            let last = *self.prefix.last().unwrap();
            self.mubar.push(m);
            self.prefix.push(last + m * self.spec.period);
        }
    }

    fn lambda(&mut self, x: f64) -> f64 {
        if x <= self.first_len {
            return self.mubar[0] * x;
        }
        let rem = x - self.first_len;
        let whole = (rem / self.spec.period).floor();
        let n = whole as usize;
        let frac = rem - whole * self.spec.period;
        self.extend_to(n + 1);
        self.prefix[n] + self.mubar[n + 1] * frac
    }
}

/// `Λ(t, t+x)`: expected number of service completions over the next `x`.
pub fn mmp_cumulative_rate(belief: &MmpBelief, horizon: f64) -> Result<f64> {
    if !(horizon >= 0.0) {
        return Err(domain(format!("horizon must be non-negative, got {horizon}")));
    }
    Ok(belief.profile().lambda(horizon))
}

/// CDF of the remaining wait: `1 - Σ_{i=0}^{k-1} Λ^i e^{-Λ} / i!`.
pub fn mmp_waiting_cdf(belief: &MmpBelief, x: f64) -> Result<f64> {
    let lambda = mmp_cumulative_rate(belief, x)?;
    Ok(1.0 - poisson_lower_tail(belief.position, lambda))
}

/// Risk quantile of the remaining wait, inverted by bisection.
pub fn mmp_waiting_quantile(belief: &MmpBelief, outage: f64) -> Result<f64> {
    check_outage(outage)?;
    let q = 1.0 - outage;
    if let Some(rate) = belief.constant_rate() {
        return ErlangDist::new(belief.position, rate)?.quantile(q);
    }
    let k = belief.position;
    let mut profile = belief.profile();
    let hint = k as f64 / profile.mubar[0];
    Ok(bisect_increasing(|x| 1.0 - poisson_lower_tail(k, profile.lambda(x)), q, hint))
}

/// `entrance_quantile(belief, P_o)`.
pub fn entrance_quantile(belief: &PoissonBelief, outage: f64) -> Result<f64> {
    belief.entrance_quantile(outage)
}

/// `waiting_quantile(belief, P_o)`.
pub fn waiting_quantile(belief: &PoissonBelief, outage: f64) -> Result<f64> {
    belief.waiting_quantile(outage)
}

#[doc(hidden)]
pub fn local_quantile(local_mean: f64, outage: f64) -> Result<f64> {
    check_outage(outage)?;
    dist::ExpDist::new(local_mean)?.quantile(1.0 - outage)
}
