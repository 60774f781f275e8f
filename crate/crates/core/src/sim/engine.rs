use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1};

use super::policy::{on_arrival, on_position_update, on_service_tick, CloudView};
use super::service::{draw_service_completion, ServerPath, ServerProcess};
use super::{ArrivalDecision, EventKind, EventRecord, Policy, PositionDecision, ServedBy, ServiceDecision, SimOutput, Task, UpdateKind};
use crate::belief::{mmp_waiting_quantile, Choice, MmpBelief, PoissonBelief};
use crate::dist::ExpDist;
use crate::error::{Error, Result};
use crate::experiments::ScenarioConfig;
use crate::learner::LearnerState;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy)]
enum Ev {
    ServiceDone(usize),
    PreemptTimeout(usize),
    PeriodBoundary(usize),
    Arrival,
    Join(usize),
    LocalDone(usize),
}

impl Ev {
    // ordering among simultaneous events
    fn class(self) -> u8 {
        match self {
            Ev::ServiceDone(_) => 0,
            Ev::PreemptTimeout(_) => 1,
            Ev::PeriodBoundary(_) => 2,
            Ev::Arrival | Ev::Join(_) => 3,
            Ev::LocalDone(_) => 4,
        }
    }
}

struct Scheduled {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.ev.class().cmp(&self.ev.class()))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Pending {
    arrival: f64,
    local_mean: f64,
    // unit-mean exponential scaled by the local mean when local work starts
    local_draw: f64,
    trace: Vec<(f64, Choice)>,
    served_by: Option<ServedBy>,
    completion: f64,
    entry_position: Option<u32>,
    learner: Option<LearnerState>,
}

type QuantileCache = HashMap<(u32, u64), f64>;

/// Cloud quantiles as seen by a perfectly informed user at `now`.
struct EngineCloud<'a> {
    path: &'a mut ServerPath,
    cache: &'a mut QuantileCache,
    now: f64,
    overhead: f64,
}

impl CloudView for EngineCloud<'_> {
    fn waiting_quantile(&mut self, k: u32, outage: f64) -> Result<f64> {
        let key = (k, outage.to_bits());
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = match self.path.process() {
            ServerProcess::Poisson { rate } => PoissonBelief::new(k, *rate, 0.0)?.waiting_quantile(outage)?,
            ServerProcess::Mmp { .. } => {
                let n = self.path.period_index(self.now);
                let state = self.path.state_in_period(n);
                let spec = self.path.mmp().expect("mmp process");
                let phase = (self.now - n as f64 * spec.period).max(0.0);
                let belief = MmpBelief::with_phase(k, spec.one_hot(state), spec, phase)?;
                mmp_waiting_quantile(&belief, outage)?
            }
        };
        self.cache.insert(key, v);
        Ok(v)
    }

    fn offload_overhead(&self) -> f64 {
        self.overhead
    }
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    arrivals_rng: ChaCha8Rng,
    means_rng: ChaCha8Rng,
    draws_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    path: ServerPath,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    tasks: Vec<Pending>,
    in_service: Option<(usize, f64)>,
    waiting: VecDeque<usize>,
    events: Vec<EventRecord>,
    cache: QuantileCache,
    cache_time: f64,
    arrivals_done: bool,
    pending_joins: usize,
}

/// Simulates one replication of `cfg` under `seed`.
///
/// Arrivals stop at the horizon; the run continues until every task has finished.
pub fn run_simulation(cfg: &ScenarioConfig, seed: u64) -> Result<SimOutput> {
    cfg.validate()?;
    let mut eng = Engine {
        cfg,
        arrivals_rng: substream(seed, Stream::Arrivals),
        means_rng: substream(seed, Stream::LocalMeans),
        draws_rng: substream(seed, Stream::LocalDraws),
        service_rng: substream(seed, Stream::Service),
        path: ServerPath::new(cfg.server.clone(), substream(seed, Stream::ServerPath)),
        heap: BinaryHeap::new(),
        seq: 0,
        tasks: Vec::new(),
        in_service: None,
        waiting: VecDeque::new(),
        events: Vec::new(),
        cache: HashMap::new(),
        cache_time: f64::NAN,
        arrivals_done: false,
        pending_joins: 0,
    };
    eng.run()?;
    eng.finish()
}

impl Engine<'_> {
    fn schedule(&mut self, time: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Scheduled { time, seq: self.seq, ev });
    }

    fn system_len(&self) -> usize {
        self.waiting.len() + usize::from(self.in_service.is_some())
    }

    fn record(&mut self, time: f64, kind: EventKind, task: Option<usize>) {
        let queue_len = self.system_len();
        self.events.push(EventRecord { time, kind, task, queue_len });
    }

    fn cloud(&mut self, now: f64) -> EngineCloud<'_> {
        if self.path.mmp().is_some() && self.cache_time != now {
            self.cache.clear();
            self.cache_time = now;
        }
        EngineCloud { path: &mut self.path, cache: &mut self.cache, now, overhead: self.cfg.offload_overhead }
    }

    fn next_arrival(&mut self, now: f64) {
        let gap: f64 = Exp::new(self.cfg.arrival_rate).expect("validated rate").sample(&mut self.arrivals_rng);
        let t = now + gap;
        if t <= self.cfg.horizon {
            self.schedule(t, Ev::Arrival);
        } else {
            self.arrivals_done = true;
        }
    }

    fn run(&mut self) -> Result<()> {
        self.next_arrival(0.0);
        if self.path.mmp().is_some() {
            self.schedule(self.path.period(), Ev::PeriodBoundary(1));
        }
        while let Some(Scheduled { time, ev, .. }) = self.heap.pop() {
            match ev {
                Ev::Arrival => self.on_arrival(time)?,
                Ev::Join(id) => {
                    self.pending_joins -= 1;
                    self.join(id, time)?;
                }
                Ev::ServiceDone(id) => self.on_service_done(id, time)?,
                Ev::PreemptTimeout(id) => self.on_preempt(id, time)?,
                Ev::PeriodBoundary(n) => self.on_boundary(n, time)?,
                Ev::LocalDone(id) => self.tasks[id].completion = time,
            }
        }
        Ok(())
    }

    fn on_arrival(&mut self, t: f64) -> Result<()> {
        let id = self.tasks.len();
        let (low, high) = self.cfg.local_model.bounds();
        let local_mean = self.means_rng.random_range(low..high);
        let local_draw: f64 = Exp1.sample(&mut self.draws_rng);
        self.tasks.push(Pending {
            arrival: t,
            local_mean,
            local_draw,
            trace: Vec::new(),
            served_by: None,
            completion: f64::NAN,
            entry_position: None,
            learner: None,
        });
        self.record(t, EventKind::Arrival, Some(id));
        let queue_len = self.system_len();
        let policy = &self.cfg.policy;
        let decision = on_arrival(policy, local_mean, queue_len, &mut self.cloud(t))?;
        match decision {
            ArrivalDecision::Balk => {
                self.tasks[id].trace.push((t, Choice::Local));
                self.record(t, EventKind::Balk, Some(id));
                self.start_local(id, t, ServedBy::LocalDevice);
            }
            ArrivalDecision::EnterQueue => {
                self.tasks[id].trace.push((t, Choice::Cloud));
                if self.cfg.offload_overhead > 0.0 {
                    self.pending_joins += 1;
                    self.schedule(t + self.cfg.offload_overhead, Ev::Join(id));
                } else {
                    self.join(id, t)?;
                }
            }
        }
        self.next_arrival(t);
        Ok(())
    }

    fn join(&mut self, id: usize, t: f64) -> Result<()> {
        self.waiting.push_back(id);
        let k = self.system_len() as u32;
        let task = &mut self.tasks[id];
        task.entry_position = Some(k);
        if let Policy::RiskImperfect { outage, learner } = &self.cfg.policy {
            let mut state = LearnerState::new(*outage, ExpDist::new(task.local_mean)?, self.cfg.utility)?;
            state.quad_rel_tol = learner.quad_rel_tol;
            state.observe(k, t - task.arrival)?;
            task.learner = Some(state);
        }
        if self.in_service.is_none() {
            self.start_next(t);
        }
        Ok(())
    }

    fn start_local(&mut self, id: usize, t: f64, how: ServedBy) {
        let task = &mut self.tasks[id];
        task.served_by = Some(how);
        let done = t + task.local_mean * task.local_draw;
        self.schedule(done, Ev::LocalDone(id));
    }

    fn start_next(&mut self, t: f64) {
        let Some(id) = self.waiting.pop_front() else {
            return;
        };
        self.in_service = Some((id, t));
        self.record(t, EventKind::ServiceStart, Some(id));
        let done = draw_service_completion(&mut self.path, t, &mut self.service_rng);
        // a service that would outlast the timeout is cut off when the timeout elapses
        match self.cfg.policy {
            Policy::Preempt { timeout }
                if on_service_tick(&self.cfg.policy, done - t) == ServiceDecision::PreemptToLocal =>
            {
                self.schedule(t + timeout, Ev::PreemptTimeout(id))
            }
            _ => self.schedule(done, Ev::ServiceDone(id)),
        }
    }

    fn take_in_service(&mut self, id: usize) -> Result<f64> {
        match self.in_service.take() {
            Some((cur, start)) if cur == id => Ok(start),
            other => Err(Error::Contract(format!("service event for task {id} but server holds {other:?}"))),
        }
    }

    fn on_service_done(&mut self, id: usize, t: f64) -> Result<()> {
        self.take_in_service(id)?;
        let task = &mut self.tasks[id];
        task.served_by = Some(ServedBy::MecServer);
        task.completion = t;
        self.record(t, EventKind::ServiceComplete, Some(id));
        self.start_next(t);
        self.update_pass(t, UpdateKind::Position)
    }

    fn on_preempt(&mut self, id: usize, t: f64) -> Result<()> {
        self.take_in_service(id)?;
        self.tasks[id].trace.push((t, Choice::Local));
        self.record(t, EventKind::Preempt, Some(id));
        self.start_local(id, t, ServedBy::LocalAfterPreempt);
        self.start_next(t);
        self.update_pass(t, UpdateKind::Position)
    }

    fn on_boundary(&mut self, n: usize, t: f64) -> Result<()> {
        let prev = self.path.state_in_period(n - 1);
        if self.path.state_in_period(n) != prev {
            self.record(t, EventKind::StateSwitch, None);
            self.update_pass(t, UpdateKind::ServerState)?;
        }
        let idle = self.arrivals_done && self.pending_joins == 0 && self.system_len() == 0;
        if !idle {
            self.schedule((n + 1) as f64 * self.path.period(), Ev::PeriodBoundary(n + 1));
        }
        Ok(())
    }

    /// Lets every waiting task re-evaluate, front to back; reneging tasks leave at once.
    fn update_pass(&mut self, t: f64, kind: UpdateKind) -> Result<()> {
        let active = match self.cfg.policy {
            Policy::RiskPerfect { .. } => true,
            Policy::RiskImperfect { .. } => kind == UpdateKind::Position,
            _ => false,
        };
        if !active || self.waiting.is_empty() {
            return Ok(());
        }
        self.record(t, EventKind::QsiUpdate, None);
        let busy = usize::from(self.in_service.is_some());
        let mut i = 0;
        while i < self.waiting.len() {
            let id = self.waiting[i];
            let k = (i + 1 + busy) as u32;
            if self.path.mmp().is_some() && self.cache_time != t {
                self.cache.clear();
                self.cache_time = t;
            }
            let task = &mut self.tasks[id];
            let mut cloud = EngineCloud {
                path: &mut self.path,
                cache: &mut self.cache,
                now: t,
                overhead: self.cfg.offload_overhead,
            };
            let decision = on_position_update(
                &self.cfg.policy,
                task.local_mean,
                task.learner.as_mut(),
                k,
                t - task.arrival,
                kind,
                &mut cloud,
            )?;
            if decision == PositionDecision::Renege {
                self.waiting.remove(i);
                self.tasks[id].trace.push((t, Choice::Local));
                self.record(t, EventKind::Renege, Some(id));
                self.start_local(id, t, ServedBy::LocalAfterRenege);
            } else {
                i += 1;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<SimOutput> {
        let utility = self.cfg.utility;
        let tasks = self
            .tasks
            .into_iter()
            .enumerate()
            .map(|(id, p)| {
                let served_by = p
                    .served_by
                    .ok_or_else(|| Error::Contract(format!("task {id} never resolved")))?;
                if !p.completion.is_finite() {
                    return Err(Error::Contract(format!("task {id} never completed")));
                }
                Ok(Task {
                    id,
                    arrival_time: p.arrival,
                    local_mean: p.local_mean,
                    decision_trace: p.trace,
                    served_by,
                    completion_time: p.completion,
                    end_utility: utility.eval(p.completion - p.arrival),
                    entry_position: p.entry_position,
                    observations: p.learner.map(|l| l.log().len()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SimOutput { tasks, events: self.events })
    }
}
