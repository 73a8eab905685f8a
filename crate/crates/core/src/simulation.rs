//! Exact event-driven simulation of the chain.
//!
//! At state `x` the holding time is `Exp(α_x + β_x)` and the jump goes up
//! with probability `β_x/(α_x + β_x)`. No time discretization.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{Error, Result};
use crate::logspace::KahanSum;
use crate::rng::{run_replicates, stream_rng, SimRng};

/// Default cap on events per trajectory.
pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Run until time `T`.
    TimeLimit(f64),
    /// Run until the chain enters one of these states.
    HitSet(Vec<u64>),
}

impl StopRule {
    pub fn hit(states: impl IntoIterator<Item = u64>) -> Self {
        let mut v: Vec<u64> = states.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        StopRule::HitSet(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    TimeLimit,
    HitTarget(u64),
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub state: u64,
}

/// A sample path. `events[0]` is `(0, x0)`; each later entry is a jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ChainParams,
    pub seed: u64,
    pub events: Vec<Event>,
    /// Time at which observation stopped (`T` for a time limit).
    pub end_time: f64,
    pub stop_reason: StopReason,
}

impl Trajectory {
    pub fn final_state(&self) -> u64 {
        self.events.last().map(|e| e.state).unwrap_or(0)
    }

    /// `(state, holding time, jumped up)` for every completed sojourn.
    pub fn sojourns(&self) -> impl Iterator<Item = (u64, f64, bool)> + '_ {
        self.events
            .windows(2)
            .map(|w| (w[0].state, w[1].time - w[0].time, w[1].state > w[0].state))
    }
}

/// Summary of one run of the event loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub end_time: f64,
    pub final_state: u64,
    pub stop_reason: StopReason,
    pub jumps: u64,
}

/// Core event loop. `on_jump(time, new_state)` is called after every jump.
pub fn run_chain<R: Rng + ?Sized, F: FnMut(f64, u64)>(
    params: &ChainParams,
    x0: u64,
    stop: &StopRule,
    rng: &mut R,
    event_cap: u64,
    mut on_jump: F,
) -> Result<RunSummary> {
    let (t_limit, targets): (f64, &[u64]) = match stop {
        StopRule::TimeLimit(t) => {
            if !(*t >= 0.0) {
                return Err(Error::domain("simulate", format!("time limit must be >= 0, got {t}")));
            }
            (*t, &[])
        }
        StopRule::HitSet(v) => (f64::INFINITY, v.as_slice()),
    };
    let is_target = |x: u64| targets.binary_search(&x).is_ok();
    let mut x = x0;
    let mut t = 0.0;
    if is_target(x) {
        return Ok(RunSummary {
            end_time: 0.0,
            final_state: x,
            stop_reason: StopReason::HitTarget(x),
            jumps: 0,
        });
    }
    let mut jumps = 0u64;
    loop {
        let alpha = params.alpha(x);
        let beta = params.beta(x);
        let total = alpha + beta;
        if total <= 0.0 {
            if !targets.is_empty() {
                return Err(Error::domain(
                    "simulate",
                    format!("absorbed at {x} before reaching the target set"),
                ));
            }
            return Ok(RunSummary {
                end_time: t,
                final_state: x,
                stop_reason: StopReason::Absorbed,
                jumps,
            });
        }
        let e: f64 = Exp1.sample(rng);
        let t_next = t + e / total;
        if t_next > t_limit {
            return Ok(RunSummary {
                end_time: t_limit,
                final_state: x,
                stop_reason: StopReason::TimeLimit,
                jumps,
            });
        }
        if jumps >= event_cap {
            return Err(Error::EventCapExceeded { cap: event_cap });
        }
        t = t_next;
        let u: f64 = rng.random();
        if u * total < beta {
            x += 1;
        } else {
            x -= 1;
        }
        jumps += 1;
        on_jump(t, x);
        if is_target(x) {
            return Ok(RunSummary {
                end_time: t,
                final_state: x,
                stop_reason: StopReason::HitTarget(x),
                jumps,
            });
        }
    }
}

/// Simulates one trajectory from stream 0 of `seed` and records every event.
pub fn simulate(params: &ChainParams, x0: u64, stop: &StopRule, seed: u64) -> Result<Trajectory> {
    simulate_with(params, x0, stop, seed, &mut stream_rng(seed, 0), DEFAULT_EVENT_CAP)
}

pub fn simulate_with(
    params: &ChainParams,
    x0: u64,
    stop: &StopRule,
    seed: u64,
    rng: &mut SimRng,
    event_cap: u64,
) -> Result<Trajectory> {
    let mut events = vec![Event { time: 0.0, state: x0 }];
    let summary = run_chain(params, x0, stop, rng, event_cap, |time, state| {
        events.push(Event { time, state })
    })?;
    Ok(Trajectory {
        params: *params,
        seed,
        events,
        end_time: summary.end_time,
        stop_reason: summary.stop_reason,
    })
}

/// Replicated first-passage times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageSamples {
    pub times: Vec<f64>,
    /// State in the target set that was hit, per replicate.
    pub hit_states: Vec<u64>,
    pub mean: f64,
    pub stderr: f64,
}

impl PassageSamples {
    pub fn fraction_hitting(&self, state: u64) -> f64 {
        let n = self.hit_states.iter().filter(|&&s| s == state).count();
        n as f64 / self.hit_states.len() as f64
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = KahanSum::default();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let mut ss = KahanSum::default();
    for &x in xs {
        ss.add((x - mean) * (x - mean));
    }
    let var = ss.value() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `n_reps` independent hitting times of `targets` from `x0`. Replicate `i`
/// uses stream `i` of `seed`.
pub fn sample_first_passage(
    params: &ChainParams,
    x0: u64,
    targets: &[u64],
    n_reps: u64,
    seed: u64,
    threads: Option<usize>,
    event_cap: u64,
) -> Result<PassageSamples> {
    if n_reps == 0 {
        return Err(Error::domain("sample_first_passage", "n_reps must be >= 1"));
    }
    if targets.is_empty() {
        return Err(Error::domain("sample_first_passage", "empty target set"));
    }
    let stop = StopRule::hit(targets.iter().copied());
    let runs = run_replicates(n_reps, seed, threads, |_, rng| {
        run_chain(params, x0, &stop, rng, event_cap, |_, _| {})
    })?;
    let mut times = Vec::with_capacity(runs.len());
    let mut hit_states = Vec::with_capacity(runs.len());
    for r in runs {
        let r = r?;
        times.push(r.end_time);
        hit_states.push(r.final_state);
    }
    let (mean, stderr) = mean_stderr(&times);
    Ok(PassageSamples {
        times,
        hit_states,
        mean,
        stderr,
    })
}

/// Time-weighted state histogram accumulated from a stream of jumps.
#[derive(Debug, Clone)]
pub struct OccupationAccumulator {
    burn_in: f64,
    last_time: f64,
    last_state: u64,
    weights: Vec<KahanSum>,
}

impl OccupationAccumulator {
    pub fn new(x0: u64, burn_in: f64) -> Self {
        OccupationAccumulator {
            burn_in,
            last_time: 0.0,
            last_state: x0,
            weights: Vec::new(),
        }
    }

    fn credit(&mut self, until: f64) {
        let from = self.last_time.max(self.burn_in);
        if until > from {
            let i = self.last_state as usize;
            if self.weights.len() <= i {
                self.weights.resize(i + 1, KahanSum::default());
            }
            self.weights[i].add(until - from);
        }
    }

    pub fn observe(&mut self, time: f64, new_state: u64) {
        self.credit(time);
        self.last_time = time;
        self.last_state = new_state;
    }

    /// Normalized occupation measure up to `end_time`.
    pub fn finish(mut self, end_time: f64) -> Result<Vec<f64>> {
        self.credit(end_time);
        let w: Vec<f64> = self.weights.iter().map(KahanSum::value).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyWindow(format!(
                "no time after burn-in {} (end {end_time})",
                self.burn_in
            )));
        }
        Ok(w.into_iter().map(|v| v / total).collect())
    }
}

/// Time-weighted empirical distribution of `traj` after `burn_in`.
pub fn occupation_measure(traj: &Trajectory, burn_in: f64) -> Result<Vec<f64>> {
    let first = traj.events.first().map(|e| e.state).unwrap_or(0);
    let mut acc = OccupationAccumulator::new(first, burn_in);
    for e in traj.events.iter().skip(1) {
        acc.observe(e.time, e.state);
    }
    acc.finish(traj.end_time)
}
