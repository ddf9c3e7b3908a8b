#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::{Mutex, MutexGuard};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma_lr;

use subspace_tbr::{CtmdpModel, ModelDraft, StateId};

/// P(Erlang(stages, rate) <= t) via the regularised lower incomplete gamma.
pub fn erlang_cdf(stages: u32, rate: f64, t: f64) -> f64 {
    gamma_lr(f64::from(stages), rate * t)
}

/// Pure CTMC chain `0 -> 1 -> ... -> stages` at `rate`; the last state is the goal.
pub fn erlang_chain(stages: usize, rate: f64) -> CtmdpModel {
    let mut d = ModelDraft::new(stages + 1, 0);
    d.goal(stages);
    for s in 0..stages {
        d.transition(s, "next", s + 1, rate);
    }
    d.transition(stages, "loop", stages, rate);
    d.build().expect("chain is valid")
}

#[derive(Clone, Copy, Debug)]
pub struct FuzzShape {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_branch: usize,
    pub rate_lo: f64,
    pub rate_hi: f64,
}

impl Default for FuzzShape {
    fn default() -> Self {
        FuzzShape {
            max_states: 15,
            max_actions: 3,
            max_branch: 3,
            rate_lo: 0.1,
            rate_hi: 5.0,
        }
    }
}

/// Random valid CTMDP with initial state 0 and at least one goal.
pub fn fuzz_model(seed: u64, shape: FuzzShape) -> CtmdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=shape.max_states);
    let mut d = ModelDraft::new(n, 0);
    d.goal(rng.random_range(1..n));
    for s in 1..n {
        if rng.random::<f64>() < 0.15 {
            d.goal(s);
        }
    }
    let labels = ["a", "b", "c", "d", "e"];
    for s in 0..n {
        let acts = rng.random_range(1..=shape.max_actions);
        for label in &labels[..acts] {
            let branch = rng.random_range(1..=shape.max_branch);
            let mut targets = BTreeSet::new();
            for _ in 0..branch {
                targets.insert(rng.random_range(0..n));
            }
            for t in targets {
                let rate = shape.rate_lo + rng.random::<f64>() * (shape.rate_hi - shape.rate_lo);
                d.transition(s, label, t, rate);
            }
        }
    }
    d.build().expect("fuzz model is valid")
}

/// Random explored set containing the initial state.
pub fn fuzz_subset(model: &CtmdpModel, seed: u64) -> BTreeSet<StateId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let p = rng.random::<f64>();
    let mut set: BTreeSet<StateId> = model.states().filter(|_| rng.random::<f64>() < p).collect();
    set.insert(model.initial());
    set
}

static HEAVY: Mutex<()> = Mutex::new(());

/// Serialises expensive tests so their timings are not distorted by each other.
pub fn heavy_lock() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}
