//! Online service-rate learning for users that only observe their own queue position.
//!
//! Each waiting user logs `(position, time)` entries whenever its position changes,
//! estimates the service rate from the logged intervals, and keeps waiting while
//! one more observation is expected to reduce the decision loss by more than the
//! utility that decays while waiting for it.

use serde::{Deserialize, Serialize};

use crate::belief::{decide_offload, Choice};
use crate::dist::{check_outage, unit_erlang_quantile, ErlangDist, ExpDist, UtilitySpec};
use crate::error::{domain, Error, Result};
use crate::quad;

/// Observed `(position, time)` pairs, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationLog {
    entries: Vec<(u32, f64)>,
}

impl ObservationLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<(u32, f64)> {
        self.entries.last().copied()
    }

    /// Appends an entry; times must strictly increase and positions must not increase.
    pub fn record(&mut self, k: u32, t: f64) -> Result<()> {
        if k == 0 {
            return Err(domain("queue position must be at least 1"));
        }
        if !t.is_finite() {
            return Err(domain(format!("observation time must be finite, got {t}")));
        }
        if let Some((pk, pt)) = self.last() {
            if !(t > pt) {
                return Err(Error::Contract(format!("observation at t={t} does not follow t={pt}")));
            }
            if k > pk {
                return Err(Error::Contract(format!("position rose from {pk} to {k}")));
            }
        }
        self.entries.push((k, t));
        Ok(())
    }

    /// Like [`record`](Self::record), but an entry at the same instant as the last one
    /// replaces its position instead of failing.
    pub fn record_or_coalesce(&mut self, k: u32, t: f64) -> Result<()> {
        match self.entries.last_mut() {
            Some((pk, pt)) if *pt == t && k <= *pk => {
                *pk = k;
                Ok(())
            }
            _ => self.record(k, t),
        }
    }

    /// Sum of inter-observation intervals, `t_N - t_1`.
    pub fn total_interval(&self) -> f64 {
        match (self.entries.first(), self.entries.last()) {
            (Some(a), Some(b)) => b.1 - a.1,
            _ => 0.0,
        }
    }

    fn without_last(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.pop();
        Self { entries }
    }
}

/// Functional form of [`ObservationLog::record`].
pub fn record_observation(log: &ObservationLog, k: u32, t: f64) -> Result<ObservationLog> {
    let mut out = log.clone();
    out.record(k, t)?;
    Ok(out)
}

/// Bias-corrected coefficient of the rate estimator for `n` observations (`n ≥ 2`).
fn estimator_coefficient(n: usize) -> f64 {
    let n = n as f64;
    if n < 3.0 {
        n - 1.0
    } else {
        (n - 1.0) * (n - 3.0) / (n - 2.0)
    }
}

/// Rate estimate from the logged intervals.
///
/// One observation gives `+inf`; two give `1/Δt`; from three on the coefficient
/// is `(N-1)(N-3)/(N-2)`, which is zero at exactly three observations.
pub fn estimate_rate(log: &ObservationLog) -> Result<f64> {
    match log.len() {
        0 => Err(domain("rate estimate needs at least one observation")),
        1 => Ok(f64::INFINITY),
        n => Ok(estimator_coefficient(n) / log.total_interval()),
    }
}

/// Service rate at which the cloud risk quantile at position `k` equals `local_quantile`.
pub fn critical_rate(k: u32, local_quantile: f64, outage: f64) -> Result<f64> {
    check_outage(outage)?;
    if k == 0 {
        return Err(domain("queue position must be at least 1"));
    }
    if !(local_quantile > 0.0 && local_quantile.is_finite()) {
        return Err(domain(format!("local quantile must be positive, got {local_quantile}")));
    }
    Ok(unit_erlang_quantile(k, 1.0 - outage) / local_quantile)
}

/// Sampling law of the estimate given `N` observations and a plug-in rate:
/// `μ̂ = c / S` with `S ~ Erlang(N-1, rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorLaw {
    /// The coefficient vanishes (three observations): all mass at zero.
    PointMass(f64),
    ScaledInverseErlang { coef: f64, sum: ErlangDist },
}

impl EstimatorLaw {
    pub fn new(observations: usize, plug_in_rate: f64) -> Result<Self> {
        if observations < 3 {
            return Err(domain(format!(
                "estimator law needs at least 3 observations, got {observations}"
            )));
        }
        let coef = estimator_coefficient(observations);
        if coef == 0.0 {
            return Ok(Self::PointMass(0.0));
        }
        let sum = ErlangDist::new((observations - 1) as u32, plug_in_rate)?;
        Ok(Self::ScaledInverseErlang { coef, sum })
    }

    /// Density at `x > 0` (zero for the point-mass law).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::PointMass(_) => 0.0,
            Self::ScaledInverseErlang { coef, sum } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let s = coef / x;
                (sum.ln_pdf(s) + coef.ln() - 2.0 * x.ln()).exp()
            }
        }
    }

    /// `P(μ̂ ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::PointMass(at) => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
            Self::ScaledInverseErlang { coef, sum } => {
                if x <= 0.0 {
                    0.0
                } else {
                    sum.sf(coef / x)
                }
            }
        }
    }

    /// Mode and spread (finite for `N ≥ 4`), used to seed quadrature breakpoints.
    fn centre_and_spread(&self) -> (f64, f64) {
        match *self {
            Self::PointMass(at) => (at, 0.0),
            Self::ScaledInverseErlang { coef, sum } => {
                let n = sum.shape as f64;
                let scale = coef * sum.rate;
                let mode = scale / (n + 1.0);
                let sd = if n > 2.0 { scale / ((n - 1.0) * (n - 2.0).sqrt()) } else { mode };
                (mode, sd)
            }
        }
    }
}

/// Density of the rate estimate at `x`.
pub fn estimator_density(log: &ObservationLog, plug_in_rate: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("density argument must be positive, got {x}")));
    }
    Ok(EstimatorLaw::new(log.len(), plug_in_rate)?.pdf(x))
}

/// When a learning user stops waiting for more observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "observations")]
pub enum Stopping {
    /// Stop once the marginal learning gain no longer exceeds the waiting cost.
    Optimal,
    /// Consider reneging only after this many observations.
    FixedMinimum(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub stopping: Stopping,
    /// Optional rough rate announced to arriving users.
    #[serde(default)]
    pub prior_rate: Option<f64>,
    #[serde(default = "default_quad_tol")]
    pub quad_rel_tol: f64,
}

fn default_quad_tol() -> f64 {
    1e-5
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self { stopping: Stopping::Optimal, prior_rate: None, quad_rel_tol: default_quad_tol() }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if let Stopping::FixedMinimum(0) = self.stopping {
            return Err(Error::Config("fixed minimum observation count must be at least 1".into()));
        }
        if let Some(r) = self.prior_rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("prior rate must be positive, got {r}")));
            }
        }
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol < 1.0) {
            return Err(Error::Config(format!("quadrature tolerance {} out of range", self.quad_rel_tol)));
        }
        Ok(())
    }
}

/// Per-task learner: observation log plus the task's risk and utility parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    log: ObservationLog,
    mu_hat: f64,
    pub outage: f64,
    pub local: ExpDist,
    pub utility: UtilitySpec,
    pub quad_rel_tol: f64,
}

impl LearnerState {
    pub fn new(outage: f64, local: ExpDist, utility: UtilitySpec) -> Result<Self> {
        check_outage(outage)?;
        Ok(Self {
            log: ObservationLog::new(),
            mu_hat: f64::INFINITY,
            outage,
            local,
            utility,
            quad_rel_tol: default_quad_tol(),
        })
    }

    pub fn with_log(mut self, log: ObservationLog) -> Result<Self> {
        self.mu_hat = if log.is_empty() { f64::INFINITY } else { estimate_rate(&log)? };
        self.log = log;
        Ok(self)
    }

    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn observe(&mut self, k: u32, t: f64) -> Result<()> {
        self.log.record(k, t)?;
        self.mu_hat = estimate_rate(&self.log)?;
        Ok(())
    }

    pub(crate) fn observe_or_coalesce(&mut self, k: u32, t: f64) -> Result<()> {
        self.log.record_or_coalesce(k, t)?;
        self.mu_hat = estimate_rate(&self.log)?;
        Ok(())
    }

    /// State before the most recent observation.
    pub fn before_last(&self) -> Self {
        let log = self.log.without_last();
        let mu_hat = if log.is_empty() { f64::INFINITY } else { estimate_rate(&log).unwrap_or(f64::INFINITY) };
        Self { log, mu_hat, ..self.clone() }
    }

    fn local_quantile(&self) -> f64 {
        // outage was validated on construction
        self.local.quantile(1.0 - self.outage).unwrap_or(f64::INFINITY)
    }

    /// Cloud risk quantile at position `k` under the current estimate.
    pub fn cloud_quantile(&self, k: u32) -> Result<f64> {
        if self.mu_hat == f64::INFINITY {
            return Ok(0.0);
        }
        if self.mu_hat <= 0.0 {
            return Ok(f64::INFINITY);
        }
        ErlangDist::new(k, self.mu_hat)?.quantile(1.0 - self.outage)
    }
}

/// Loss before clamping; exposed for property checks.
#[doc(hidden)]
pub fn expected_loss_unclamped(k: u32, t: f64, state: &LearnerState) -> Result<f64> {
    if k == 0 {
        return Err(domain("queue position must be at least 1"));
    }
    if state.log.len() < 3 {
        return Ok(f64::INFINITY);
    }
    let law = EstimatorLaw::new(state.log.len(), state.mu_hat)?;
    let mu_c = critical_rate(k, state.local_quantile(), state.outage)?;
    let u = &state.utility;
    let u_local = u.eval(t + state.local.mean);
    let kf = k as f64;
    let tol = state.quad_rel_tol;

    if let EstimatorLaw::PointMass(at) = law {
        // Only the degenerate mass at `at` contributes.
        let u_cloud = if at > 0.0 { u.eval(t + kf / at) } else { 0.0 };
        return Ok(if state.mu_hat > mu_c {
            if at < mu_c { u_local - u_cloud } else { 0.0 }
        } else if at > mu_c {
            u_cloud - u_local
        } else {
            0.0
        });
    }

    let (centre, spread) = law.centre_and_spread();
    let breaks: Vec<f64> = [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0]
        .iter()
        .map(|z| centre + z * spread)
        .filter(|x| *x > 0.0)
        .collect();
    let abs_tol = 1e-15;

    if state.mu_hat > mu_c {
        // Waiting is the estimated-correct choice; loss comes from slow-server mass.
        let f = |x: f64| (u_local - u.eval(t + kf / x)) * law.pdf(x);
        let mut pts = vec![0.0];
        pts.extend(breaks.iter().copied().filter(|x| *x < mu_c));
        pts.push(mu_c);
        integrate_pieces(f, &pts, tol, abs_tol)
    } else {
        // Leaving is the estimated-correct choice; loss comes from fast-server mass.
        // x = μc / (1 - s) maps s ∈ [0, 1) onto [μc, ∞).
        let g = |s: f64| {
            let x = mu_c / (1.0 - s);
            let jac = mu_c / ((1.0 - s) * (1.0 - s));
            (u.eval(t + kf / x) - u_local) * law.pdf(x) * jac
        };
        let mut pts = vec![0.0];
        pts.extend(breaks.iter().filter(|x| **x > mu_c).map(|x| 1.0 - mu_c / x));
        pts.push(1.0);
        integrate_pieces(g, &pts, tol, abs_tol)
    }
}

fn integrate_pieces(mut f: impl FnMut(f64) -> f64, pts: &[f64], rel: f64, abs: f64) -> Result<f64> {
    let mut total = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += quad::integrate(&mut f, w[0], w[1], rel, abs)?;
        }
    }
    Ok(total)
}

/// Expected utility loss of acting on the current estimate at position `k`, time `t`.
///
/// Returns `+inf` while fewer than three observations exist.
pub fn expected_loss(k: u32, t: f64, state: &LearnerState) -> Result<f64> {
    Ok(expected_loss_unclamped(k, t, state)?.max(0.0))
}

/// Loss reduction bought by the observation that moved the task from `k+1` to `k` at `t`.
pub fn learning_gain(k: u32, t: f64, before: &LearnerState, after: &LearnerState) -> Result<f64> {
    let (b, a) = (before.log.entries(), after.log.entries());
    if a.len() != b.len() + 1 || a[..b.len()] != *b || a.last() != Some(&(k, t)) {
        return Err(Error::Contract("`after` must extend `before` by the observation (k, t)".into()));
    }
    let lb = expected_loss(k + 1, t, before)?;
    if lb.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(lb - expected_loss(k, t, after)?)
}

/// Utility expected to decay before the next position update: `u(t) - u(t + 1/μ̂)`.
pub fn learning_cost(t: f64, state: &LearnerState) -> f64 {
    let u = &state.utility;
    if state.mu_hat == f64::INFINITY {
        return 0.0;
    }
    u.eval(t) - u.eval(t + 1.0 / state.mu_hat)
}

/// Reneging test run after each position update.
pub fn should_renege(k: u32, t: f64, state: &LearnerState, stopping: Stopping) -> Result<bool> {
    let n = state.log.len();
    if n < 3 || state.mu_hat == f64::INFINITY {
        return Ok(false);
    }
    if decide_offload(state.local_quantile(), state.cloud_quantile(k)?) != Choice::Local {
        return Ok(false);
    }
    match stopping {
        Stopping::FixedMinimum(min) => Ok(n >= min as usize),
        Stopping::Optimal => {
            let gain = learning_gain(k, t, &state.before_last(), state)?;
            let ut = state.utility.eval(t);
            Ok(gain / ut <= learning_cost(t, state) / ut)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_from(times: &[f64], k0: u32) -> ObservationLog {
        let mut log = ObservationLog::new();
        for (i, &t) in times.iter().enumerate() {
            log.record(k0 - i as u32, t).unwrap();
        }
        log
    }

    fn state(log: ObservationLog, outage: f64, local_mean: f64) -> LearnerState {
        LearnerState::new(outage, ExpDist::new(local_mean).unwrap(), UtilitySpec::default())
            .unwrap()
            .with_log(log)
            .unwrap()
    }

    #[test]
    fn record_observation_examples() {
        let log = record_observation(&ObservationLog::new(), 5, 0.0).unwrap();
        assert_eq!(log.len(), 1);
        let log = record_observation(&log, 4, 0.7).unwrap();
        assert_eq!(log.len(), 2);
        assert!((log.total_interval() - 0.7).abs() < 1e-15);
        assert!(matches!(record_observation(&log, 5, 0.9), Err(Error::Contract(_))));
        assert!(matches!(record_observation(&log, 3, 0.5), Err(Error::Contract(_))));
        assert!(matches!(record_observation(&log, 3, 0.7), Err(Error::Contract(_))));
    }

    #[test]
    fn coalesce_same_instant() {
        let mut log = log_from(&[0.0, 1.0], 5);
        log.record_or_coalesce(3, 1.0).unwrap();
        assert_eq!(log.entries(), &[(5, 0.0), (3, 1.0)]);
    }

    #[test]
    fn estimator_cases() {
        assert_eq!(estimate_rate(&log_from(&[0.0], 9)).unwrap(), f64::INFINITY);
        assert_eq!(estimate_rate(&log_from(&[0.0, 0.5], 9)).unwrap(), 2.0);
        let five = log_from(&[0.0, 0.4, 0.9, 1.5, 2.0], 9);
        assert_eq!(estimate_rate(&five).unwrap(), 4.0 * 2.0 / (3.0 * 2.0));
        assert_eq!(estimate_rate(&log_from(&[0.0, 1.0, 2.0], 9)).unwrap(), 0.0);
        assert!(estimate_rate(&ObservationLog::new()).is_err());
    }

    #[test]
    fn estimator_scale_equivariance() {
        let times = [0.0, 0.3, 1.1, 1.4, 2.9, 3.3];
        let base = estimate_rate(&log_from(&times, 10)).unwrap();
        for c in [0.1, 2.0, 7.5] {
            let scaled: Vec<f64> = times.iter().map(|t| t * c).collect();
            let est = estimate_rate(&log_from(&scaled, 10)).unwrap();
            assert!((est - base / c).abs() <= 1e-12 * base / c);
        }
    }

    #[test]
    fn critical_rate_examples() {
        let lq = ExpDist::new(5.0).unwrap().quantile(0.9).unwrap();
        let mc1 = critical_rate(1, lq, 0.1).unwrap();
        assert!((mc1 - 0.2).abs() < 1e-9);
        assert!(critical_rate(2, lq, 0.1).unwrap() > 0.2);
        assert!(critical_rate(1, 0.0, 0.1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let k = rng.random_range(1..40);
            let l = rng.random_range(0.1..50.0);
            let po = rng.random_range(0.001..0.5);
            let mc = critical_rate(k, l, po).unwrap();
            let x = ErlangDist::new(k, mc).unwrap().quantile(1.0 - po).unwrap();
            assert!((x - l).abs() <= 1e-8 * l.max(1.0), "k={k} l={l} got {x}");
        }
    }

    #[test]
    fn density_normalises() {
        for n in [3usize, 5, 10, 40] {
            let law = EstimatorLaw::new(n, 1.7).unwrap();
            let mass = match law {
                EstimatorLaw::PointMass(_) => law.cdf(0.0),
                EstimatorLaw::ScaledInverseErlang { .. } => {
                    // s ∈ (0,1) ↦ x = s/(1-s)
                    quad::integrate(|s| law.pdf(s / (1.0 - s)) / ((1.0 - s) * (1.0 - s)), 0.0, 1.0, 1e-10, 1e-14)
                        .unwrap()
                }
            };
            assert!((mass - 1.0).abs() <= 1e-6, "N={n} mass={mass}");
        }
        let log = log_from(&[0.0, 1.0], 4);
        assert!(estimator_density(&log, 1.0, 0.5).is_err());
    }

    #[test]
    fn density_concentrates() {
        let law_var = |n: usize| {
            let law = EstimatorLaw::new(n, 1.0).unwrap();
            let m1 = quad::integrate(|s| { let x = s / (1.0 - s); x * law.pdf(x) / ((1.0 - s) * (1.0 - s)) }, 0.0, 1.0, 1e-10, 1e-14).unwrap();
            let m2 = quad::integrate(|s| { let x = s / (1.0 - s); x * x * law.pdf(x) / ((1.0 - s) * (1.0 - s)) }, 0.0, 1.0, 1e-10, 1e-14).unwrap();
            m2 - m1 * m1
        };
        let mut prev = f64::INFINITY;
        for n in [5usize, 6, 8, 12, 20, 50, 100] {
            let v = law_var(n);
            assert!(v < prev, "N={n} var={v}");
            prev = v;
        }
    }

    #[test]
    fn density_mode_near_plug_in() {
        let law = EstimatorLaw::new(50, 2.0).unwrap();
        // locate the mode on a grid
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 1..40_000 {
            let x = i as f64 * 1e-4;
            let p = law.pdf(x);
            if p > best {
                best = p;
                arg = x;
            }
        }
        assert!((arg - 2.0).abs() / 2.0 <= 0.1, "mode {arg}");
    }

    #[test]
    fn learning_cost_examples() {
        let s = state(log_from(&[0.0, 1.0], 5), 0.1, 5.0);
        assert!((learning_cost(0.0, &s) - (1.0 - (-0.1f64).exp())).abs() < 1e-12);
        let s = state(log_from(&[0.0], 5), 0.1, 5.0);
        assert_eq!(learning_cost(3.0, &s), 0.0);
        // independent of k by construction: the signature has no k at all
        let s = state(log_from(&[0.0, 0.4, 1.3, 1.8], 9), 0.1, 5.0);
        for t in [0.0, 1.0, 10.0] {
            assert!(learning_cost(t, &s) > 0.0);
        }
    }

    #[test]
    fn renege_requires_finite_estimate() {
        let s = state(log_from(&[0.0], 30), 0.1, 2.0);
        assert!(!should_renege(30, 0.0, &s, Stopping::Optimal).unwrap());
        let s = state(log_from(&[0.0, 5.0], 30), 0.1, 2.0);
        assert!(!should_renege(29, 5.0, &s, Stopping::Optimal).unwrap());
    }

    #[test]
    fn overloaded_instance_reneges() {
        // 50 observations, estimate 0.1, position 20, local mean 2, P_o = 0.1.
        let coef = 49.0 * 47.0 / 48.0;
        let total = coef / 0.1;
        let times: Vec<f64> = (0..50).map(|i| total * i as f64 / 49.0).collect();
        let log = log_from(&times, 69);
        let s = state(log, 0.1, 2.0);
        assert!((s.mu_hat() - 0.1).abs() < 1e-12);
        let t = *times.last().unwrap();
        let lq = ExpDist::new(2.0).unwrap().quantile(0.9).unwrap();
        assert!(lq <= s.cloud_quantile(20).unwrap());
        let g = learning_gain(20, t, &s.before_last(), &s).unwrap();
        assert!(g / s.utility.eval(t) <= learning_cost(t, &s) / s.utility.eval(t));
        assert!(should_renege(20, t, &s, Stopping::Optimal).unwrap());
    }

    #[test]
    fn fixed_minimum_gate() {
        // estimate ~0.05: everything says leave
        let log = log_from(&[0.0, 20.0, 40.0, 60.0], 30);
        let s = state(log, 0.1, 2.0);
        assert!(should_renege(27, 60.0, &s, Stopping::FixedMinimum(3)).unwrap());
        assert!(!should_renege(27, 60.0, &s, Stopping::FixedMinimum(6)).unwrap());
    }

    #[test]
    fn learning_gain_rejects_mismatch() {
        let a = state(log_from(&[0.0, 1.0, 2.0, 3.0], 9), 0.1, 5.0);
        let b = state(log_from(&[0.0, 1.0, 2.5], 9), 0.1, 5.0);
        assert!(matches!(learning_gain(6, 3.0, &b, &a), Err(Error::Contract(_))));
        assert!(matches!(learning_gain(5, 3.0, &a.before_last(), &a), Err(Error::Contract(_))));
        assert!(learning_gain(6, 3.0, &a.before_last(), &a).is_ok());
    }

    #[test]
    fn identical_state_difference_sign_follows_branch() {
        // μ̂ = 1.25; μc crosses it between k = 7 and k = 8
        let s = state(log_from(&[0.0, 0.6, 1.1, 1.9, 2.4, 3.0], 12), 0.1, 4.0);
        let mc = |k| critical_rate(k, s.local_quantile(), 0.1).unwrap();
        let l = |k| expected_loss(k, 3.0, &s).unwrap();
        for k in 1..12 {
            let d = l(k + 1) - l(k);
            if mc(k + 1) < s.mu_hat() {
                assert!(d >= 0.0, "k={k}: {d}");
            } else if mc(k) > s.mu_hat() {
                assert!(d <= 0.0, "k={k}: {d}");
            }
        }
        assert!(mc(7) < s.mu_hat() && mc(8) > s.mu_hat());
    }

    #[test]
    fn loss_branch_covers_only_slow_side() {
        // μ̂ far above μc: loss is the belief mass below μc weighted by the utility gap.
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.25).collect();
        let s = state(log_from(&times, 40), 0.1, 5.0);
        let mc = critical_rate(3, s.local_quantile(), 0.1).unwrap();
        assert!(s.mu_hat() > 5.0 * mc);
        let l = expected_loss(3, 2.0, &s).unwrap();
        assert!((0.0..1e-12).contains(&l), "{l}");
    }
}
