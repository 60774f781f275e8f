//! Scalar distributions and the latency-discounted utility.
//!
//! Remaining sojourn at queue position `k` under Poisson service is Erlang(k, μ);
//! its CDF is evaluated as one minus a truncated Poisson series, carried in
//! log-space so that μx well beyond 700 does not underflow the leading term.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Absolute CDF tolerance targeted by the quantile inversions.
pub const QUANTILE_CDF_TOL: f64 = 1e-10;

/// Exponentially decaying utility `u(Δt) = u0 · exp(-β Δt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub u0: f64,
    pub beta: f64,
}

impl Default for UtilitySpec {
    fn default() -> Self {
        Self { u0: 1.0, beta: 0.1 }
    }
}

impl UtilitySpec {
    pub fn new(u0: f64, beta: f64) -> Result<Self> {
        let spec = Self { u0, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0 && self.u0.is_finite()) {
            return Err(domain(format!("u0 must be positive, got {}", self.u0)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(domain(format!("beta must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }

    /// Utility after a total delay `delta_t`.
    pub fn utility(&self, delta_t: f64) -> Result<f64> {
        if !(delta_t >= 0.0) {
            return Err(domain(format!("delay must be non-negative, got {delta_t}")));
        }
        Ok(self.eval(delta_t))
    }

    /// Unchecked evaluation; `delta_t = +inf` yields 0 when `beta > 0`.
    pub(crate) fn eval(&self, delta_t: f64) -> f64 {
        if self.beta == 0.0 {
            return self.u0;
        }
        self.u0 * (-self.beta * delta_t).exp()
    }
}

/// Exponential distribution parameterised by its mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpDist {
    pub mean: f64,
}

impl ExpDist {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(domain(format!("exponential mean must be positive, got {mean}")));
        }
        Ok(Self { mean })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x / self.mean).exp_m1()
        }
    }

    /// `mean · ln(1 / (1 - q))`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_prob(q)?;
        Ok(-self.mean * (-q).ln_1p())
    }
}

/// Erlang distribution: sum of `shape` i.i.d. exponentials with `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangDist {
    pub shape: u32,
    pub rate: f64,
}

impl ErlangDist {
    pub fn new(shape: u32, rate: f64) -> Result<Self> {
        if shape == 0 {
            return Err(domain("Erlang shape must be at least 1"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(domain(format!("Erlang rate must be positive, got {rate}")));
        }
        Ok(Self { shape, rate })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain(format!("Erlang CDF argument must be non-negative, got {x}")));
        }
        Ok(1.0 - poisson_lower_tail(self.shape, self.rate * x))
    }

    /// Survivor function `P(X > x)`, accurate in the far tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            poisson_lower_tail(self.shape, self.rate * x)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let k = self.shape as f64;
        if x == 0.0 {
            return if self.shape == 1 { self.rate.ln() } else { f64::NEG_INFINITY };
        }
        k * self.rate.ln() + (k - 1.0) * x.ln() - self.rate * x - ln_factorial(self.shape - 1)
    }

    pub fn mean(&self) -> f64 {
        self.shape as f64 / self.rate
    }

    /// Inverse CDF by bracketing and bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_prob(q)?;
        Ok(unit_erlang_quantile(self.shape, q) / self.rate)
    }
}

/// `P(Poisson(lambda) < k) = Σ_{i<k} λ^i e^{-λ} / i!`.
///
/// Terms are generated with the running ratio `t_{i+1} = t_i · λ / (i+1)` in
/// log-space and summed relative to the largest term.
pub fn poisson_lower_tail(k: u32, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda.is_infinite() {
        return 0.0;
    }
    let ln_lambda = lambda.ln();
    // Terms increase while i < λ, so the largest retained term is at min(k-1, floor(λ)).
    let peak = ((lambda.floor() as u64).min(k as u64 - 1)) as u32;
    let ln_peak = peak as f64 * ln_lambda - lambda - ln_factorial(peak);
    if ln_peak < -745.0 {
        return 0.0;
    }
    let mut ln_term = -lambda;
    let mut sum = 0.0;
    for i in 0..k {
        if i > 0 {
            ln_term += ln_lambda - (i as f64).ln();
        }
        sum += (ln_term - ln_peak).exp();
    }
    (sum * ln_peak.exp()).min(1.0)
}

/// Quantile of the unit-rate Erlang(k) law (the `g_k` of a rate-μ Erlang: x*/μ).
pub(crate) fn unit_erlang_quantile(k: u32, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let cdf = |x: f64| 1.0 - poisson_lower_tail(k, x);
    bisect_increasing(cdf, q, k as f64)
}

/// Finds `x ≥ 0` with `f(x) ≈ target` for a non-decreasing `f` with `f(0) ≤ target < sup f`.
///
/// The upper bracket starts at `hint` and doubles until it covers the target.
pub(crate) fn bisect_increasing(mut f: impl FnMut(f64) -> f64, target: f64, hint: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = if hint > 0.0 { hint } else { 1.0 };
    let mut hi_val = f(hi);
    while hi_val < target {
        lo = hi;
        hi *= 2.0;
        hi_val = f(hi);
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if (v - target).abs() <= 1e-13 || hi - lo <= 1e-14 * hi {
            return mid;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick the bracket end closer in CDF space.
    let (fl, fh) = (f(lo), f(hi));
    if (fl - target).abs() <= (fh - target).abs() {
        lo
    } else {
        hi
    }
}

pub(crate) fn check_prob(q: f64) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return Err(domain(format!("probability must lie in [0, 1), got {q}")));
    }
    Ok(())
}

pub(crate) fn check_outage(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("outage probability must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// ln(n!) by direct summation for small n and Stirling's series beyond.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 256 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// `utility(spec, Δt)`.
pub fn utility(spec: &UtilitySpec, delta_t: f64) -> Result<f64> {
    spec.utility(delta_t)
}

/// `erlang_cdf(dist, x)`.
pub fn erlang_cdf(dist: &ErlangDist, x: f64) -> Result<f64> {
    dist.cdf(x)
}

/// `erlang_quantile(dist, q)`.
pub fn erlang_quantile(dist: &ErlangDist, q: f64) -> Result<f64> {
    dist.quantile(q)
}

/// `exp_quantile(dist, q)`.
pub fn exp_quantile(dist: &ExpDist, q: f64) -> Result<f64> {
    dist.quantile(q)
}
