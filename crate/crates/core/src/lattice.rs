//! Mean-field lattice model on a box of `L` sites.
//!
//! Dispersal and competition are uniform over the box, so each particle
//! gives birth at rate `b` (offspring on a uniformly chosen site), dies at
//! rate `μ`, and dies from competition at rate `γN/L` (all ordered pairs,
//! self pairs included) or `γ(N-1)/L` (distinct pairs). An empty box receives
//! one immigrant at rate 1. With self pairs the total count is exactly the
//! unmodified logistic chain.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, Variant};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::simulation::{Event, StopReason, Trajectory, DEFAULT_EVENT_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CompetitionPairs {
    /// Aggregate competition rate `γN²/L`.
    #[default]
    SelfPairs,
    /// Aggregate competition rate `γN(N-1)/L`.
    DistinctPairs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeState {
    pub site_counts: Vec<u64>,
    pub total: u64,
}

impl LatticeState {
    pub fn new(site_counts: Vec<u64>) -> Self {
        let total = site_counts.iter().sum();
        LatticeState { site_counts, total }
    }

    /// `n` particles spread as evenly as possible over `sites` sites.
    pub fn spread(sites: usize, n: u64) -> Self {
        let base = n / sites as u64;
        let extra = (n % sites as u64) as usize;
        LatticeState::new(
            (0..sites)
                .map(|i| base + u64::from(i < extra))
                .collect(),
        )
    }

    pub fn is_consistent(&self) -> bool {
        self.site_counts.iter().sum::<u64>() == self.total
    }
}

/// Fenwick tree over site counts for `O(log L)` particle selection.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn from_counts(counts: &[u64]) -> Self {
        let mut f = Fenwick {
            tree: vec![0; counts.len() + 1],
        };
        for (i, &c) in counts.iter().enumerate() {
            f.add(i, c as i64);
        }
        f
    }

    fn add(&mut self, i: usize, delta: i64) {
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] = (self.tree[k] as i64 + delta) as u64;
            k += k & k.wrapping_neg();
        }
    }

    /// Site holding the particle with zero-based rank `r`.
    fn find(&self, mut r: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= r {
                pos = next;
                r -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    pub pairs: CompetitionPairs,
    /// Times at which to record a copy of the lattice (besides the final state).
    pub snapshot_times: Vec<f64>,
    pub event_cap: u64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            pairs: CompetitionPairs::SelfPairs,
            snapshot_times: Vec::new(),
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRun {
    pub snapshots: Vec<(f64, LatticeState)>,
    pub final_state: LatticeState,
    /// Total-count path.
    pub total: Trajectory,
}

/// Simulates the lattice on `[0, t_end]` using stream 0 of `seed`.
pub fn simulate_mean_field_lattice(
    params: &ChainParams,
    initial: LatticeState,
    t_end: f64,
    seed: u64,
    opts: &LatticeOptions,
) -> Result<LatticeRun> {
    let mut rng = stream_rng(seed, 0);
    simulate_lattice_with(params, initial, t_end, seed, &mut rng, opts)
}

pub fn simulate_lattice_with<R: Rng + ?Sized>(
    params: &ChainParams,
    initial: LatticeState,
    t_end: f64,
    seed: u64,
    rng: &mut R,
    opts: &LatticeOptions,
) -> Result<LatticeRun> {
    let sites = params.l as usize;
    if initial.site_counts.len() != sites {
        return Err(Error::domain(
            "simulate_mean_field_lattice",
            format!("expected {sites} sites, got {}", initial.site_counts.len()),
        ));
    }
    if !initial.is_consistent() {
        return Err(Error::domain("simulate_mean_field_lattice", "total != sum of sites"));
    }
    let mut snap_times = opts.snapshot_times.clone();
    snap_times.retain(|&t| (0.0..=t_end).contains(&t));
    snap_times.sort_by(f64::total_cmp);
    let mut snap_iter = snap_times.into_iter().peekable();

    let mut state = initial;
    let mut fen = Fenwick::from_counts(&state.site_counts);
    let mut events = vec![Event {
        time: 0.0,
        state: state.total,
    }];
    let mut snapshots = Vec::new();
    let mut t = 0.0;
    let mut jumps = 0u64;
    let l = params.l_f64();

    let stop_reason = loop {
        let n = state.total as f64;
        let birth = params.b * n;
        let death = params.mu * n;
        let competition = match opts.pairs {
            CompetitionPairs::SelfPairs => params.gamma * n * n / l,
            CompetitionPairs::DistinctPairs => params.gamma * n * (n - 1.0).max(0.0) / l,
        };
        let immigration = if state.total == 0 { 1.0 } else { 0.0 };
        let total_rate = birth + death + competition + immigration;
        if total_rate <= 0.0 {
            for ts in snap_iter.by_ref() {
                snapshots.push((ts, state.clone()));
            }
            break StopReason::Absorbed;
        }
        let e: f64 = Exp1.sample(rng);
        let t_next = t + e / total_rate;
        while let Some(&ts) = snap_iter.peek() {
            if ts < t_next {
                snapshots.push((ts, state.clone()));
                snap_iter.next();
            } else {
                break;
            }
        }
        if t_next > t_end {
            break StopReason::TimeLimit;
        }
        if jumps >= opts.event_cap {
            return Err(Error::EventCapExceeded { cap: opts.event_cap });
        }
        t = t_next;
        jumps += 1;
        let u = rng.random::<f64>() * total_rate;
        if u < birth {
            let site = rng.random_range(0..sites);
            state.site_counts[site] += 1;
            fen.add(site, 1);
            state.total += 1;
        } else if u < birth + death + competition {
            let site = fen.find(rng.random_range(0..state.total));
            state.site_counts[site] -= 1;
            fen.add(site, -1);
            state.total -= 1;
        } else {
            let site = rng.random_range(0..sites);
            state.site_counts[site] += 1;
            fen.add(site, 1);
            state.total += 1;
        }
        debug_assert!(state.is_consistent());
        events.push(Event {
            time: t,
            state: state.total,
        });
    };

    let end_time = if stop_reason == StopReason::Absorbed { t } else { t_end };
    Ok(LatticeRun {
        snapshots,
        final_state: state,
        total: Trajectory {
            params: params.with_variant(Variant::Unmodified),
            seed,
            events,
            end_time,
            stop_reason,
        },
    })
}
