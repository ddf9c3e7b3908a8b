//! Path sampling under a simulation scheduler, and the relevant subset it
//! induces.
//!
//! Random numbers come from ChaCha8 keyed by the master seed, with the run
//! index selecting the ChaCha stream (nonce). Runs are therefore independent
//! and reproducible regardless of how they are distributed over threads.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActionLabel, CtmdpModel, StateId};
use crate::scheduler::StepScheduler;

/// One reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// SplitMix64 finaliser over `(seed, index)`; used to key independent
/// batches of runs (e.g. one per outer iteration).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scheduler used to resolve nondeterminism while simulating.
#[derive(Clone, Debug)]
pub enum SimScheduler {
    /// Each enabled action with equal probability.
    Uniform,
    /// The decision of a step scheduler at the current elapsed time.
    StepGuided {
        scheduler: Arc<StepScheduler>,
        horizon: f64,
    },
}

impl SimScheduler {
    pub fn is_uniform(&self) -> bool {
        matches!(self, SimScheduler::Uniform)
    }
}

/// A finite timed path `s0 -α0,t0-> s1 ... sn`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedPath {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionLabel>,
    pub sojourns: Vec<f64>,
}

impl TimedPath {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last(&self) -> StateId {
        *self.states.last().expect("path has a first state")
    }

    pub fn total_time(&self) -> f64 {
        self.sojourns.iter().sum()
    }
}

/// Simulates from the initial state until a goal is entered or the elapsed
/// time reaches `horizon`.
pub fn sample_path(
    model: &CtmdpModel,
    horizon: f64,
    sched: &SimScheduler,
    stream: RngStream,
) -> TimedPath {
    let mut rng = stream.rng();
    let mut path = TimedPath {
        states: vec![model.initial()],
        actions: Vec::new(),
        sojourns: Vec::new(),
    };
    let mut s = model.initial();
    let mut t = 0.0;
    while t < horizon && !model.is_goal(s) {
        let actions = model.actions(s);
        let idx = match sched {
            SimScheduler::Uniform => rng.random_range(0..actions.len()),
            SimScheduler::StepGuided { scheduler, horizon } => {
                let label = scheduler.action_at(model, s, t, *horizon);
                model.action_index(s, label.as_str()).unwrap_or(0)
            }
        };
        let action = &actions[idx];
        let e = action.exit_rate();
        let u: f64 = rng.random();
        let sojourn = -(-u).ln_1p() / e;
        let pick = rng.random::<f64>() * e;
        let ts = action.transitions();
        let mut acc = 0.0;
        let mut next = ts[ts.len() - 1].target;
        for tr in ts {
            acc += tr.rate;
            if pick < acc {
                next = tr.target;
                break;
            }
        }
        path.actions.push(action.label().clone());
        path.sojourns.push(sojourn);
        path.states.push(next);
        s = next;
        t += sojourn;
    }
    path
}

fn mark_runs(
    model: &CtmdpModel,
    horizon: f64,
    sched: &SimScheduler,
    seed: u64,
    runs: std::ops::Range<u64>,
) -> Vec<bool> {
    let mut seen = vec![false; model.num_states()];
    seen[model.initial().0] = true;
    for i in runs {
        let path = sample_path(model, horizon, sched, RngStream::new(seed, i));
        for s in path.states {
            seen[s.0] = true;
        }
    }
    seen
}

/// Union of the states of `n_sim` sampled paths; run `i` uses stream `i`.
pub fn relevant_subset(
    model: &CtmdpModel,
    horizon: f64,
    sched: &SimScheduler,
    n_sim: u64,
    seed: u64,
) -> BTreeSet<StateId> {
    relevant_subset_threads(model, horizon, sched, n_sim, seed, 1)
}

/// As [`relevant_subset`], with runs split over up to `threads` workers.
/// The result does not depend on `threads`.
pub fn relevant_subset_threads(
    model: &CtmdpModel,
    horizon: f64,
    sched: &SimScheduler,
    n_sim: u64,
    seed: u64,
    threads: usize,
) -> BTreeSet<StateId> {
    let threads = threads.clamp(1, n_sim.max(1) as usize) as u64;
    let seen = if threads == 1 {
        mark_runs(model, horizon, sched, seed, 0..n_sim)
    } else {
        let chunk = n_sim.div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let lo = (w * chunk).min(n_sim);
                    let hi = ((w + 1) * chunk).min(n_sim);
                    scope.spawn(move || mark_runs(model, horizon, sched, seed, lo..hi))
                })
                .collect();
            let mut seen = vec![false; model.num_states()];
            for h in handles {
                for (acc, v) in seen.iter_mut().zip(h.join().expect("simulation worker")) {
                    *acc |= v;
                }
            }
            seen
        })
    };
    seen.iter()
        .enumerate()
        .filter(|(_, v)| **v)
        .map(|(i, _)| StateId(i))
        .collect()
}
