//! Server processes and service-time sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::belief::MmpSpec;
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ServerProcess {
    Poisson { rate: f64 },
    Mmp { spec: MmpSpec, #[serde(default)] initial_state: usize },
}

impl ServerProcess {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Poisson { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(domain(format!("service rate must be positive, got {rate}")));
                }
            }
            Self::Mmp { spec, initial_state } => {
                spec.validate()?;
                if *initial_state >= spec.states() {
                    return Err(domain(format!("initial state {initial_state} out of range")));
                }
            }
        }
        Ok(())
    }
}

/// A realised server: for MMP service, the per-period state path, drawn lazily from
/// its own substream so that it does not depend on how the server is used.
#[derive(Debug, Clone)]
pub struct ServerPath {
    process: ServerProcess,
    states: Vec<usize>,
    rng: ChaCha8Rng,
}

impl ServerPath {
    pub fn new(process: ServerProcess, rng: ChaCha8Rng) -> Self {
        let states = match &process {
            ServerProcess::Poisson { .. } => vec![0],
            ServerProcess::Mmp { initial_state, .. } => vec![*initial_state],
        };
        Self { process, states, rng }
    }

    pub fn process(&self) -> &ServerProcess {
        &self.process
    }

    pub fn mmp(&self) -> Option<&MmpSpec> {
        match &self.process {
            ServerProcess::Mmp { spec, .. } => Some(spec),
            ServerProcess::Poisson { .. } => None,
        }
    }

    /// State during period `n`, i.e. on `[n T0, (n+1) T0)`.
    pub fn state_in_period(&mut self, n: usize) -> usize {
        let Some(spec) = (match &self.process {
            ServerProcess::Mmp { spec, .. } => Some(spec),
            ServerProcess::Poisson { .. } => None,
        }) else {
            return 0;
        };
        while self.states.len() <= n {
            let cur = *self.states.last().unwrap();
            let u: f64 = self.rng.random();
            let row = &spec.transition[cur];
            let mut acc = 0.0;
            let mut next = row.len() - 1;
            for (j, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            self.states.push(next);
        }
        self.states[n]
    }

    pub fn period(&self) -> f64 {
        self.mmp().map_or(1.0, |s| s.period)
    }

    pub fn period_index(&self, t: f64) -> usize {
        (t / self.period()).floor() as usize
    }

    pub fn state_at(&mut self, t: f64) -> usize {
        let n = self.period_index(t);
        self.state_in_period(n)
    }

    pub fn rate_at(&mut self, t: f64) -> f64 {
        match &self.process {
            ServerProcess::Poisson { rate } => *rate,
            ServerProcess::Mmp { .. } => {
                let d = self.state_at(t);
                self.mmp().unwrap().rates[d]
            }
        }
    }
}

/// Completion instant of a service that starts at `t`.
///
/// The hazard is the rate of the realised state; an `Exp(1)` budget is spent across
/// periods. Consecutive periods in the same state are merged so that a path that
/// never switches reproduces `t + E/μ` exactly.
pub fn draw_service_completion(path: &mut ServerPath, t: f64, rng: &mut ChaCha8Rng) -> f64 {
    let budget: f64 = Exp1.sample(rng);
    match path.process().clone() {
        ServerProcess::Poisson { rate } => t + budget / rate,
        ServerProcess::Mmp { spec, .. } => {
            let period = spec.period;
            let mut run_start = t;
            let mut spent = 0.0;
            let mut n = path.period_index(t);
            let mut state = path.state_in_period(n);
            loop {
                let rate = spec.rates[state];
                let mut end = n + 1;
                loop {
                    let finish = run_start + (budget - spent) / rate;
                    if finish <= end as f64 * period {
                        return finish;
                    }
                    if path.state_in_period(end) != state {
                        break;
                    }
                    end += 1;
                }
                let boundary = end as f64 * period;
                spent += rate * (boundary - run_start);
                run_start = boundary;
                n = end;
                state = path.state_in_period(n);
            }
        }
    }
}
