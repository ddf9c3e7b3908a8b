//! Benchmark and example model families.

use crate::error::ModelError;
use crate::model::{CtmdpModel, ModelDraft};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErlangParams {
    /// Length of the slow Erlang chain.
    pub k: usize,
    /// Rate of every slow stage.
    pub r: f64,
    pub fast_rate: f64,
    /// Probability that the fast action ends in the goal.
    pub fast_success: f64,
}

impl ErlangParams {
    pub fn new(k: usize, r: f64) -> Self {
        ErlangParams {
            k,
            r,
            fast_rate: 10.0,
            fast_success: 0.5,
        }
    }
}

/// Indices of the distinguished states of an Erlang-stages model.
pub fn erlang_goal(k: usize) -> usize {
    k + 1
}

pub fn erlang_trap(k: usize) -> usize {
    k + 2
}

/// A risky fast action against a sure but slow Erlang chain.
///
/// States: `0` initial, `1..=k` chain, `k+1` goal, `k+2` trap.
pub fn gen_erlang(p: ErlangParams) -> Result<CtmdpModel, ModelError> {
    if p.k == 0 {
        return Err(ModelError::Parameter("k must be at least 1".into()));
    }
    if !(p.r > 0.0 && p.r.is_finite()) || !(p.fast_rate > 0.0 && p.fast_rate.is_finite()) {
        return Err(ModelError::Parameter("rates must be positive".into()));
    }
    if !(p.fast_success > 0.0 && p.fast_success < 1.0) {
        return Err(ModelError::Parameter("fast_success must lie in (0,1)".into()));
    }
    let goal = erlang_goal(p.k);
    let trap = erlang_trap(p.k);
    let mut d = ModelDraft::new(p.k + 3, 0);
    d.goal(goal)
        .transition(0, "fast", goal, p.fast_rate * p.fast_success)
        .transition(0, "fast", trap, p.fast_rate * (1.0 - p.fast_success))
        .transition(0, "slow", 1, p.r);
    for i in 1..p.k {
        d.transition(i, "next", i + 1, p.r);
    }
    d.transition(p.k, "next", goal, p.r)
        .transition(goal, "loop", goal, 1.0)
        .transition(trap, "loop", trap, 1.0);
    d.build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoChainVariant {
    A,
    B,
}

/// Named states of a two-chain model, in id order.
pub fn two_chain_names(variant: TwoChainVariant) -> Vec<String> {
    let (l1, l2, right, right_len) = match variant {
        TwoChainVariant::A => ("a", "b", "c", 3),
        TwoChainVariant::B => ("d", "e", "f", 13),
    };
    let mut names = vec!["0".to_string()];
    names.extend((1..=2).map(|i| format!("{l1}{i}")));
    names.extend((1..=11).map(|i| format!("{l2}{i}")));
    names.extend((1..=right_len).map(|i| format!("{right}{i}")));
    names.push("g".to_string());
    names
}

/// Two chains from the initial state to a common goal: action `alpha`
/// enters a short slow prefix (rate 0.51) followed by eleven stages at
/// rate 175; action `beta` enters a uniform chain at rate 0.5 (three
/// states for variant A, thirteen for B).
pub fn gen_two_chain(variant: TwoChainVariant) -> CtmdpModel {
    const PREFIX: f64 = 0.51;
    const FAST: f64 = 175.0;
    const RIGHT: f64 = 0.5;
    let right_len = match variant {
        TwoChainVariant::A => 3,
        TwoChainVariant::B => 13,
    };
    let n = 1 + 2 + 11 + right_len + 1;
    let goal = n - 1;
    let mut d = ModelDraft::new(n, 0);
    d.goal(goal);
    // left: 0 -alpha-> 1 -> 2 -> 3 (first fast stage) ... 13 -> goal
    d.transition(0, "alpha", 1, PREFIX)
        .transition(1, "next", 2, PREFIX)
        .transition(2, "next", 3, PREFIX);
    for s in 3..13 {
        d.transition(s, "next", s + 1, FAST);
    }
    d.transition(13, "next", goal, FAST);
    // right: 0 -beta-> 14 -> ... -> 14+len-1 -> goal
    let first = 14;
    let last = first + right_len - 1;
    d.transition(0, "beta", first, RIGHT);
    for s in first..last {
        d.transition(s, "next", s + 1, RIGHT);
    }
    d.transition(last, "next", goal, RIGHT)
        .transition(goal, "loop", goal, 1.0);
    d.build().expect("two-chain model is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PollingGoal {
    /// Every queue empty.
    All,
    /// Some queue empty.
    One,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PollingParams {
    pub stations: usize,
    pub capacity: usize,
    pub goal: PollingGoal,
    pub arrival_rate: f64,
    pub service_rate: f64,
    pub service_success: f64,
}

impl PollingParams {
    pub fn new(stations: usize, capacity: usize, goal: PollingGoal) -> Self {
        PollingParams {
            stations,
            capacity,
            goal,
            arrival_rate: 1.0,
            service_rate: 4.0,
            service_success: 0.9,
        }
    }
}

/// Queue contents of a polling-model state; station 1 is the least
/// significant digit of the id.
pub fn polling_queues(id: usize, stations: usize, capacity: usize) -> Vec<usize> {
    let base = capacity + 1;
    let mut rest = id;
    (0..stations)
        .map(|_| {
            let q = rest % base;
            rest /= base;
            q
        })
        .collect()
}

pub fn polling_id(queues: &[usize], capacity: usize) -> usize {
    queues
        .iter()
        .rev()
        .fold(0, |acc, &q| acc * (capacity + 1) + q)
}

/// Stations with bounded queues sharing one server that chooses which
/// non-empty queue to serve.
pub fn gen_polling(p: PollingParams) -> Result<CtmdpModel, ModelError> {
    if p.stations == 0 || p.capacity == 0 {
        return Err(ModelError::Parameter(
            "stations and capacity must be at least 1".into(),
        ));
    }
    if !(p.arrival_rate > 0.0 && p.arrival_rate.is_finite())
        || !(p.service_rate > 0.0 && p.service_rate.is_finite())
    {
        return Err(ModelError::Parameter("rates must be positive".into()));
    }
    if !(p.service_success > 0.0 && p.service_success <= 1.0) {
        return Err(ModelError::Parameter(
            "service_success must lie in (0,1]".into(),
        ));
    }
    let k = p.capacity;
    let n = (k + 1)
        .checked_pow(p.stations as u32)
        .ok_or_else(|| ModelError::Parameter("state space too large".into()))?;
    let initial = polling_id(&vec![k - 1; p.stations], k);
    let mut d = ModelDraft::new(n, initial);
    for id in 0..n {
        let q = polling_queues(id, p.stations, k);
        let is_goal = match p.goal {
            PollingGoal::All => q.iter().all(|&x| x == 0),
            PollingGoal::One => q.contains(&0),
        };
        if is_goal {
            d.goal(id);
        }
        let arrivals = |d: &mut ModelDraft, label: &str| {
            for m in 0..p.stations {
                if q[m] < k {
                    let mut next = q.clone();
                    next[m] += 1;
                    d.transition(id, label, polling_id(&next, k), p.arrival_rate);
                }
            }
        };
        if q.iter().all(|&x| x == 0) {
            arrivals(&mut d, "idle");
            continue;
        }
        for i in (0..p.stations).filter(|&i| q[i] > 0) {
            let label = format!("serve_{}", i + 1);
            arrivals(&mut d, &label);
            let mut done = q.clone();
            done[i] -= 1;
            d.transition(
                id,
                &label,
                polling_id(&done, k),
                p.service_rate * p.service_success,
            );
            if p.service_success < 1.0 {
                d.transition(id, &label, id, p.service_rate * (1.0 - p.service_success));
            }
        }
    }
    d.build()
}
