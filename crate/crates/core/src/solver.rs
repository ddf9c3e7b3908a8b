//! Discretised optimal time-bounded reachability.
//!
//! The horizon `T` is split into `N` steps of length `δ = T/N`. Within a step
//! at most one jump is taken into account:
//!
//! ```text
//! v⁰(s) = [s ∈ G]
//! vⁱ(s) = opt_α (1 − e^{−E(s,α)δ}) · Σ Δ(s,α,s')·vⁱ⁻¹(s') + e^{−E(s,α)δ} · vⁱ⁻¹(s)
//! ```
//!
//! For maximisation `vᴺ` under-approximates the optimum by at most
//! `(λ̄T)² / (2N)`, which fixes `N` for a requested precision.

use crate::error::SolverError;
use crate::model::{CtmdpModel, StateId};
use crate::scheduler::{Objective, StepScheduler};

pub const DEFAULT_STEP_CAP: u64 = 500_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Target a-priori error of the discretisation.
    pub epsilon: f64,
    /// Largest admissible number of steps.
    pub step_cap: u64,
}

impl SolverOptions {
    pub fn new(epsilon: f64) -> Self {
        SolverOptions {
            epsilon,
            step_cap: DEFAULT_STEP_CAP,
        }
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }
}

/// `N = ceil((λ̄T)² / (2ε))`, at least 1.
pub fn step_count(max_rate: f64, horizon: f64, epsilon: f64, cap: u64) -> Result<u64, SolverError> {
    if !(max_rate > 0.0 && max_rate.is_finite()) {
        return Err(SolverError::Parameter(format!("rate must be positive, got {max_rate}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SolverError::Parameter(format!("time bound must be positive, got {horizon}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SolverError::Parameter(format!(
            "solver precision must lie in (0,1), got {epsilon}"
        )));
    }
    let lt = max_rate * horizon;
    let required = (lt * lt / (2.0 * epsilon)).ceil().max(1.0);
    if required > cap as f64 {
        return Err(SolverError::PrecisionUnattainable { required, cap });
    }
    Ok(required as u64)
}

/// `(λ̄T)² / (2N)`; zero for an empty grid.
pub fn apriori_bound(max_rate: f64, horizon: f64, steps: u64) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    let lt = max_rate * horizon;
    lt * lt / (2.0 * steps as f64)
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub values: Vec<f64>,
    pub value_at_initial: f64,
    pub apriori_bound: f64,
    pub scheduler: StepScheduler,
    pub num_steps: u64,
}

impl SolveOutcome {
    /// Sound lower estimate: the raw discretised value.
    pub fn lower(&self) -> f64 {
        self.value_at_initial
    }

    /// Sound upper estimate: raw value plus the a-priori bound, capped at 1.
    pub fn upper(&self) -> f64 {
        (self.value_at_initial + self.apriori_bound).min(1.0)
    }
}

/// One action of an updated state, with its step-invariant coefficients.
#[derive(Clone, Copy, Debug)]
struct Choice {
    stay: f64,
    jump: f64,
    lo: u32,
    hi: u32,
}

/// Flattened update rules for the states whose value can change.
///
/// Goal states stay at 1; states that cannot reach a goal or only loop on
/// themselves keep their initial value, so they are left out.
struct Kernel {
    num_states: usize,
    /// Single-action single-successor states, as parallel arrays of
    /// (state, successor, jump, stay).
    chain_src: Vec<u32>,
    chain_dst: Vec<u32>,
    chain_jump: Vec<f64>,
    chain_stay: Vec<f64>,
    /// States with several choices or several successors.
    general: Vec<u32>,
    offsets: Vec<u32>,
    choices: Vec<Choice>,
    succ: Vec<u32>,
    prob: Vec<f64>,
}

impl Kernel {
    fn new(model: &CtmdpModel, delta: f64) -> Self {
        let live = model.can_reach_goal();
        let mut k = Kernel {
            num_states: model.num_states(),
            chain_src: Vec::new(),
            chain_dst: Vec::new(),
            chain_jump: Vec::new(),
            chain_stay: Vec::new(),
            general: Vec::new(),
            offsets: vec![0],
            choices: Vec::new(),
            succ: Vec::new(),
            prob: Vec::new(),
        };
        let coeffs = |e: f64| {
            let stay = (-e * delta).exp();
            (stay, 1.0 - stay)
        };
        for s in model.states() {
            if model.is_goal(s) || !live[s.0] || model.is_absorbing(s) {
                continue;
            }
            let actions = model.actions(s);
            if actions.len() == 1 && actions[0].transitions().len() == 1 {
                let a = &actions[0];
                let (stay, jump) = coeffs(a.exit_rate());
                k.chain_src.push(s.0 as u32);
                k.chain_dst.push(a.transitions()[0].target.0 as u32);
                k.chain_jump.push(jump);
                k.chain_stay.push(stay);
                continue;
            }
            k.general.push(s.0 as u32);
            for a in actions {
                let (stay, jump) = coeffs(a.exit_rate());
                let lo = k.succ.len() as u32;
                let e = a.exit_rate();
                for t in a.transitions() {
                    k.succ.push(t.target.0 as u32);
                    k.prob.push(t.rate / e);
                }
                k.choices.push(Choice {
                    stay,
                    jump,
                    lo,
                    hi: k.succ.len() as u32,
                });
            }
            k.offsets.push(k.choices.len() as u32);
        }
        // Every index the hot loops touch is below `num_states`.
        assert!(k.succ.iter().all(|&t| (t as usize) < k.num_states));
        assert!(k.chain_src.iter().chain(&k.chain_dst).all(|&s| (s as usize) < k.num_states));
        assert!(k.general.iter().all(|&s| (s as usize) < k.num_states));
        k
    }

    #[inline(always)]
    fn choice_value(&self, c: &Choice, cur: &[f64], own: f64) -> f64 {
        debug_assert_eq!(cur.len(), self.num_states);
        let mut acc = 0.0;
        for j in c.lo as usize..c.hi as usize {
            // SAFETY: `succ` entries are checked against `num_states` in `new`
            // and callers pass vectors of that length.
            unsafe {
                acc += self.prob.get_unchecked(j) * cur.get_unchecked(*self.succ.get_unchecked(j) as usize);
            }
        }
        c.jump * acc + c.stay * own
    }

    #[inline(always)]
    fn step_chain(&self, cur: &[f64], next: &mut [f64]) {
        assert!(cur.len() == self.num_states && next.len() == self.num_states);
        let n = self.chain_src.len();
        let (src, dst) = (&self.chain_src[..n], &self.chain_dst[..n]);
        let (jump, stay) = (&self.chain_jump[..n], &self.chain_stay[..n]);
        for i in 0..n {
            let (s, t) = (src[i] as usize, dst[i] as usize);
            // SAFETY: both indices are checked against `num_states` in `new`.
            unsafe {
                *next.get_unchecked_mut(s) = jump[i] * *cur.get_unchecked(t) + stay[i] * *cur.get_unchecked(s);
            }
        }
    }
}

fn initial_values(model: &CtmdpModel) -> Vec<f64> {
    model
        .states()
        .map(|s| if model.is_goal(s) { 1.0 } else { 0.0 })
        .collect()
}

fn check_horizon(horizon: f64) -> Result<(), SolverError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SolverError::Parameter(format!(
            "time bound must be non-negative, got {horizon}"
        )));
    }
    Ok(())
}

/// Optimal discretised time-bounded reachability on `model`.
pub fn solve_tbr(
    model: &CtmdpModel,
    horizon: f64,
    objective: Objective,
    options: &SolverOptions,
) -> Result<SolveOutcome, SolverError> {
    check_horizon(horizon)?;
    let mut cur = initial_values(model);
    if horizon == 0.0 {
        let value_at_initial = cur[model.initial().0];
        return Ok(SolveOutcome {
            values: cur,
            value_at_initial,
            apriori_bound: 0.0,
            scheduler: StepScheduler::empty(0.0, 0, objective),
            num_steps: 0,
        });
    }
    let lambda = model.max_exit_rate();
    let steps = step_count(lambda, horizon, options.epsilon, options.step_cap)?;
    let delta = horizon / steps as f64;
    let kernel = Kernel::new(model, delta);
    let mut next = cur.clone();

    let multi: Vec<usize> = (0..kernel.general.len())
        .filter(|&k| kernel.offsets[k + 1] - kernel.offsets[k] > 1)
        .collect();
    let mut last = vec![0u32; kernel.general.len()];
    let mut changes: Vec<Vec<(u64, u32)>> = vec![Vec::new(); kernel.general.len()];

    let maximize = objective == Objective::Maximize;
    for step in 1..=steps {
        kernel.step_chain(&cur, &mut next);
        for (k, &s) in kernel.general.iter().enumerate() {
            let own = cur[s as usize];
            let cs = &kernel.choices[kernel.offsets[k] as usize..kernel.offsets[k + 1] as usize];
            let mut best = kernel.choice_value(&cs[0], &cur, own);
            let mut arg = 0u32;
            for (j, c) in cs.iter().enumerate().skip(1) {
                let v = kernel.choice_value(c, &cur, own);
                if (maximize && v > best) || (!maximize && v < best) {
                    best = v;
                    arg = j as u32;
                }
            }
            next[s as usize] = best;
            if arg != last[k] {
                last[k] = arg;
                changes[k].push((step, arg));
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    debug_assert!(cur.iter().all(|v| (0.0..=1.0 + 1e-9).contains(v)));

    let mut scheduler = StepScheduler::empty(delta, steps, objective);
    for k in multi {
        let state = StateId(kernel.general[k] as usize);
        let actions = model.actions(state);
        for &(step, arg) in &changes[k] {
            scheduler.push_decision(state, step, actions[arg as usize].label().clone());
        }
    }
    Ok(SolveOutcome {
        value_at_initial: cur[model.initial().0],
        values: cur,
        apriori_bound: apriori_bound(lambda, horizon, steps),
        scheduler,
        num_steps: steps,
    })
}

/// Per-state cursor over a scheduler's change points, resolved to choice
/// indices.
struct DecisionCursor {
    entries: Vec<(u64, u32)>,
    pos: usize,
    current: u32,
}

impl DecisionCursor {
    fn advance(&mut self, sched_step: u64) -> u32 {
        while self.pos < self.entries.len() && self.entries[self.pos].0 <= sched_step {
            self.current = self.entries[self.pos].1;
            self.pos += 1;
        }
        self.current
    }
}

/// Value at the initial state of the fixed scheduler `sched`, computed with
/// the same recursion as [`solve_tbr`] on the grid the precision dictates.
pub fn evaluate_scheduler(
    model: &CtmdpModel,
    sched: &StepScheduler,
    horizon: f64,
    options: &SolverOptions,
) -> Result<f64, SolverError> {
    check_horizon(horizon)?;
    sched.check_against(model)?;
    let mut cur = initial_values(model);
    if horizon == 0.0 {
        return Ok(cur[model.initial().0]);
    }
    if sched.num_steps() > 0 && sched.horizon() < horizon * (1.0 - 1e-9) {
        return Err(SolverError::HorizonNotCovered {
            covered: sched.horizon(),
            horizon,
        });
    }
    let lambda = model.max_exit_rate();
    let steps = step_count(lambda, horizon, options.epsilon, options.step_cap)?;
    let delta = horizon / steps as f64;
    let same_grid = sched.num_steps() == steps && sched.delta() == delta;
    let kernel = Kernel::new(model, delta);
    let mut next = cur.clone();

    let mut cursors: Vec<DecisionCursor> = kernel
        .general
        .iter()
        .map(|&s| {
            let state = StateId(s as usize);
            let entries = sched
                .decisions()
                .get(&state)
                .map(|es| {
                    es.iter()
                        .map(|(step, label)| {
                            let idx = model
                                .action_index(state, label.as_str())
                                .expect("checked against model");
                            (*step, idx as u32)
                        })
                        .collect()
                })
                .unwrap_or_default();
            DecisionCursor {
                entries,
                pos: 0,
                current: 0,
            }
        })
        .collect();

    for step in 1..=steps {
        let sched_step = if sched.num_steps() == 0 {
            0
        } else if same_grid {
            step
        } else {
            let remaining = step as f64 * delta;
            let raw = (remaining / sched.delta() - 1e-9).ceil();
            (raw.max(1.0) as u64).min(sched.num_steps())
        };
        kernel.step_chain(&cur, &mut next);
        for (k, &s) in kernel.general.iter().enumerate() {
            let own = cur[s as usize];
            let choice = cursors[k].advance(sched_step) as usize;
            let c = &kernel.choices[kernel.offsets[k] as usize + choice];
            next[s as usize] = kernel.choice_value(c, &cur, own);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur[model.initial().0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDraft;

    fn single_exp(rate: f64) -> CtmdpModel {
        let mut d = ModelDraft::new(2, 0);
        d.goal(1)
            .transition(0, "go", 1, rate)
            .transition(1, "stay", 1, 1.0);
        d.build().unwrap()
    }

    #[test]
    fn step_count_formula() {
        assert_eq!(step_count(2.0, 1.0, 0.01, DEFAULT_STEP_CAP).unwrap(), 200);
        assert_eq!(step_count(1.0, 1.0, 0.9, DEFAULT_STEP_CAP).unwrap(), 1);
        assert!(matches!(
            step_count(175.0, 3.0, 1e-4, DEFAULT_STEP_CAP),
            Err(SolverError::PrecisionUnattainable { .. })
        ));
        assert!(step_count(0.0, 1.0, 0.1, 10).is_err());
        assert!(step_count(1.0, 1.0, 1.5, 10).is_err());
        assert!(step_count(1.0, -1.0, 0.1, 10).is_err());
    }

    #[test]
    fn exponential_closed_form() {
        let m = single_exp(1.0);
        let out = solve_tbr(&m, 2.0, Objective::Maximize, &SolverOptions::new(1e-3)).unwrap();
        let exact = 1.0 - (-2.0f64).exp();
        assert!((out.value_at_initial - exact).abs() < 1e-3);
        assert!(exact - out.value_at_initial >= 0.0);
        assert!(exact - out.value_at_initial <= out.apriori_bound);
        assert_eq!(out.values[1], 1.0);
    }

    #[test]
    fn initial_goal_is_one() {
        let mut d = ModelDraft::new(1, 0);
        d.goal(0).transition(0, "x", 0, 1.0);
        let m = d.build().unwrap();
        for t in [0.0, 0.5, 5.0] {
            let out = solve_tbr(&m, t, Objective::Maximize, &SolverOptions::new(1e-3)).unwrap();
            assert_eq!(out.value_at_initial, 1.0);
        }
    }

    #[test]
    fn zero_horizon_is_goal_indicator() {
        let m = single_exp(3.0);
        let out = solve_tbr(&m, 0.0, Objective::Maximize, &SolverOptions::new(1e-3)).unwrap();
        assert_eq!(out.values, vec![0.0, 1.0]);
        assert_eq!(out.num_steps, 0);
        assert_eq!(out.scheduler.num_entries(), 0);
    }

    #[test]
    fn chooses_faster_action_and_records_it() {
        let mut d = ModelDraft::new(2, 0);
        d.goal(1)
            .transition(0, "a_slow", 1, 1.0)
            .transition(0, "b_fast", 1, 3.0)
            .transition(1, "stay", 1, 1.0);
        let m = d.build().unwrap();
        let opts = SolverOptions::new(1e-2);
        let max = solve_tbr(&m, 1.0, Objective::Maximize, &opts).unwrap();
        assert_eq!(max.scheduler.decisions()[&StateId(0)][0].0, 1);
        assert_eq!(max.scheduler.decisions()[&StateId(0)][0].1.as_str(), "b_fast");
        let min = solve_tbr(&m, 1.0, Objective::Minimize, &opts).unwrap();
        assert!(min.value_at_initial < max.value_at_initial);
        // lex-min is optimal for min: nothing stored
        assert_eq!(min.scheduler.num_entries(), 0);
        let eval = evaluate_scheduler(&m, &max.scheduler, 1.0, &opts).unwrap();
        assert_eq!(eval, max.value_at_initial);
        let eval_min = evaluate_scheduler(&m, &min.scheduler, 1.0, &opts).unwrap();
        assert_eq!(eval_min, min.value_at_initial);
    }

    #[test]
    fn evaluate_rejects_disabled_actions() {
        let m = single_exp(1.0);
        let mut s = StepScheduler::empty(0.1, 10, Objective::Maximize);
        s.push_decision(StateId(0), 1, crate::model::ActionLabel::new("nope").unwrap());
        assert!(matches!(
            evaluate_scheduler(&m, &s, 1.0, &SolverOptions::new(1e-2)),
            Err(SolverError::DisabledAction { .. })
        ));
    }

    #[test]
    fn evaluate_rejects_short_grids() {
        let m = single_exp(1.0);
        let s = StepScheduler::empty(0.1, 5, Objective::Maximize);
        assert!(matches!(
            evaluate_scheduler(&m, &s, 1.0, &SolverOptions::new(1e-2)),
            Err(SolverError::HorizonNotCovered { .. })
        ));
    }

    #[test]
    fn unreachable_goal_gives_zero() {
        let mut d = ModelDraft::new(3, 0);
        d.goal(2)
            .transition(0, "a", 1, 1.0)
            .transition(1, "a", 0, 1.0)
            .transition(2, "a", 2, 1.0);
        let m = d.build().unwrap();
        let out = solve_tbr(&m, 3.0, Objective::Maximize, &SolverOptions::new(1e-2)).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0, 1.0]);
    }
}
