//! Greedy search for a large set of states that can be cut away.
//!
//! Cutting a state means making it absorbing in the pessimistic model and a
//! goal in the optimistic one. States are ranked by the value gap their
//! individual cut opens, then cut cumulatively in that order while the gap
//! stays within budget.

use std::collections::BTreeSet;

use crate::error::GreedyError;
use crate::model::{Action, CtmdpModel, StateId};
use crate::scheduler::Objective;
use crate::solver::{solve_tbr, SolverOptions};

#[derive(Clone, Debug)]
pub struct GreedyResult {
    /// Every non-initial state with its score, ascending (ties by id).
    pub removal_order: Vec<(StateId, f64)>,
    pub removed: BTreeSet<StateId>,
    pub kept: BTreeSet<StateId>,
    /// Gap of the accepted cut set.
    pub final_gap: f64,
    /// Cumulative gap after each tentative cut, including the rejected one.
    pub gap_log: Vec<(StateId, f64)>,
}

/// Pessimistic and optimistic models for a cut set. Cut states keep their
/// goal status in the pessimistic model.
pub fn cut_models(model: &CtmdpModel, cut: &[bool]) -> (CtmdpModel, CtmdpModel) {
    let lambda = model.max_exit_rate();
    let (initial, goals, mut actions) = model.clone().into_parts();
    for (s, acts) in actions.iter_mut().enumerate() {
        if cut[s] {
            *acts = acts
                .iter()
                .map(|a| Action::self_loop(a.label().clone(), StateId(s), lambda))
                .collect();
        }
    }
    let upper_goals: Vec<bool> = goals.iter().zip(cut).map(|(g, c)| *g || *c).collect();
    let lower = CtmdpModel::from_parts(initial, goals, actions);
    let upper = lower.with_goals(upper_goals);
    (lower, upper)
}

/// Raw optimistic minus pessimistic value at the initial state.
pub fn cut_gap(
    model: &CtmdpModel,
    horizon: f64,
    cut: &[bool],
    options: &SolverOptions,
) -> Result<f64, GreedyError> {
    if cut.iter().enumerate().all(|(s, &c)| !c || model.is_goal(StateId(s))) {
        // both models coincide
        return Ok(0.0);
    }
    let (lower, upper) = cut_models(model, cut);
    let lo = solve_tbr(&lower, horizon, Objective::Maximize, options)?;
    let hi = solve_tbr(&upper, horizon, Objective::Maximize, options)?;
    Ok(hi.value_at_initial - lo.value_at_initial)
}

/// Gap opened by cutting `s` alone.
pub fn state_score(
    model: &CtmdpModel,
    horizon: f64,
    s: StateId,
    options: &SolverOptions,
) -> Result<f64, GreedyError> {
    if s == model.initial() {
        return Err(GreedyError::InitialState);
    }
    if s.0 >= model.num_states() {
        return Err(GreedyError::StateOutOfRange(s.0));
    }
    let mut cut = vec![false; model.num_states()];
    cut[s.0] = true;
    cut_gap(model, horizon, &cut, options)
}

pub fn greedy_min_subset(
    model: &CtmdpModel,
    horizon: f64,
    epsilon: f64,
    options: &SolverOptions,
) -> Result<GreedyResult, GreedyError> {
    let init = model.initial();
    let mut order = Vec::with_capacity(model.num_states());
    for s in model.states().filter(|&s| s != init) {
        order.push((s, state_score(model, horizon, s, options)?));
    }
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut cut = vec![false; model.num_states()];
    let mut removed = BTreeSet::new();
    let mut final_gap = 0.0;
    let mut gap_log = Vec::new();
    for (i, &(s, score)) in order.iter().enumerate() {
        cut[s.0] = true;
        let gap = if i == 0 {
            score
        } else {
            cut_gap(model, horizon, &cut, options)?
        };
        gap_log.push((s, gap));
        if gap > epsilon {
            cut[s.0] = false;
            break;
        }
        removed.insert(s);
        final_gap = gap;
    }
    let kept = model.states().filter(|s| !removed.contains(s)).collect();
    Ok(GreedyResult {
        removal_order: order,
        removed,
        kept,
        final_gap,
        gap_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDraft;

    /// 0 -a-> 1 -> 3 (goal), 0 -b-> 2 -> 3, plus an unreachable state 4.
    fn diamond() -> CtmdpModel {
        let mut d = ModelDraft::new(5, 0);
        d.goal(3)
            .transition(0, "a", 1, 2.0)
            .transition(0, "b", 2, 1.0)
            .transition(1, "n", 3, 1.0)
            .transition(2, "n", 3, 3.0)
            .transition(3, "l", 3, 1.0)
            .transition(4, "n", 0, 1.0);
        d.build().unwrap()
    }

    #[test]
    fn cut_models_shape() {
        let m = diamond();
        let mut cut = vec![false; 5];
        cut[1] = true;
        let (lo, hi) = cut_models(&m, &cut);
        assert!(lo.is_absorbing(StateId(1)) && !lo.is_goal(StateId(1)));
        assert!(hi.is_goal(StateId(1)));
        assert_eq!(lo.exit_rate(StateId(1), "n").unwrap(), m.max_exit_rate());
    }

    #[test]
    fn trivial_scores() {
        let m = diamond();
        let opts = SolverOptions::new(1e-3);
        assert_eq!(state_score(&m, 1.0, StateId(4), &opts).unwrap(), 0.0);
        assert_eq!(state_score(&m, 1.0, StateId(3), &opts).unwrap(), 0.0);
        assert!(state_score(&m, 1.0, StateId(1), &opts).unwrap() > 0.1);
        assert!(matches!(
            state_score(&m, 1.0, StateId(0), &opts),
            Err(GreedyError::InitialState)
        ));
        assert!(state_score(&m, 1.0, StateId(9), &opts).is_err());
    }

    #[test]
    fn budget_extremes() {
        let m = diamond();
        let opts = SolverOptions::new(1e-3);
        let all = greedy_min_subset(&m, 1.0, 1.0, &opts).unwrap();
        assert_eq!(all.kept, BTreeSet::from([StateId(0)]));
        let none = greedy_min_subset(&m, 1.0, 1e-9, &opts).unwrap();
        // only zero-impact states go
        assert_eq!(none.removed, BTreeSet::from([StateId(3), StateId(4)]));
        assert!(none.final_gap.abs() < 1e-12);
        assert_eq!(none.kept.len() + none.removed.len(), 5);
    }
}
