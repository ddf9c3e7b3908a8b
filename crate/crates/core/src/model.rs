//! Sparse CTMDP representation.
//!
//! A model is built from a [`ModelDraft`] (the unchecked, as-read form) and is
//! immutable afterwards. Every transformation in this crate returns a new
//! model, so the cached exit rates and the maximal exit rate never go stale.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Dense index of a state within its owning model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for StateId {
    fn from(v: usize) -> Self {
        StateId(v)
    }
}

/// Action name. Non-empty, no whitespace; ordered by bytes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ActionLabel(String);

impl ActionLabel {
    pub fn new(label: impl Into<String>) -> Result<Self, ModelError> {
        let label = label.into();
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(ModelError::InvalidLabel(label));
        }
        Ok(ActionLabel(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ActionLabel {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ActionLabel::new(value)
    }
}

impl From<ActionLabel> for String {
    fn from(value: ActionLabel) -> Self {
        value.0
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub target: StateId,
    pub rate: f64,
}

/// One enabled action of a state, with its successors sorted by target id.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    label: ActionLabel,
    transitions: Vec<Transition>,
    exit_rate: f64,
}

impl Action {
    pub(crate) fn new(label: ActionLabel, mut transitions: Vec<Transition>) -> Self {
        transitions.sort_by_key(|t| t.target);
        let exit_rate = transitions.iter().map(|t| t.rate).sum();
        Action {
            label,
            transitions,
            exit_rate,
        }
    }

    pub(crate) fn self_loop(label: ActionLabel, state: StateId, rate: f64) -> Self {
        Action::new(
            label,
            vec![Transition {
                target: state,
                rate,
            }],
        )
    }

    pub fn label(&self) -> &ActionLabel {
        &self.label
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn exit_rate(&self) -> f64 {
        self.exit_rate
    }

    pub fn successors(&self) -> impl Iterator<Item = StateId> + '_ {
        self.transitions.iter().map(|t| t.target)
    }

    /// True when every transition of the action returns to `state`.
    pub fn is_self_loop_of(&self, state: StateId) -> bool {
        self.transitions.iter().all(|t| t.target == state)
    }
}

/// Successor distribution of a (state, action) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchDistribution {
    pub entries: Vec<(StateId, f64)>,
}

impl BranchDistribution {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// A transition as it appears in input: unchecked.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRecord {
    pub source: usize,
    pub label: String,
    pub target: usize,
    pub rate: f64,
}

/// Unvalidated model contents, as produced by a parser or a generator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelDraft {
    pub num_states: usize,
    pub initial: usize,
    pub goals: Vec<usize>,
    pub transitions: Vec<TransitionRecord>,
}

impl ModelDraft {
    pub fn new(num_states: usize, initial: usize) -> Self {
        ModelDraft {
            num_states,
            initial,
            ..Default::default()
        }
    }

    pub fn goal(&mut self, state: usize) -> &mut Self {
        self.goals.push(state);
        self
    }

    pub fn transition(&mut self, source: usize, label: &str, target: usize, rate: f64) -> &mut Self {
        self.transitions.push(TransitionRecord {
            source,
            label: label.to_string(),
            target,
            rate,
        });
        self
    }

    pub fn build(&self) -> Result<CtmdpModel, ModelError> {
        CtmdpModel::from_draft(self)
    }
}

/// A single broken model invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoStates,
    InitialOutOfRange { initial: usize },
    GoalOutOfRange { goal: usize },
    StateOutOfRange { source: usize, target: usize },
    InvalidLabel { state: usize, label: String },
    NonPositiveRate { source: usize, label: String, target: usize, rate: f64 },
    DuplicateTransition { source: usize, label: String, target: usize },
    NoEnabledAction { state: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "model has no states"),
            Violation::InitialOutOfRange { initial } => {
                write!(f, "initial state {initial} is out of range")
            }
            Violation::GoalOutOfRange { goal } => write!(f, "goal state {goal} is out of range"),
            Violation::StateOutOfRange { source, target } => {
                write!(f, "transition {source} -> {target} references a state out of range")
            }
            Violation::InvalidLabel { state, label } => {
                write!(f, "state {state} has invalid action label {label:?}")
            }
            Violation::NonPositiveRate {
                source,
                label,
                target,
                rate,
            } => write!(
                f,
                "non-positive rate {rate} on transition {source} {label} {target}"
            ),
            Violation::DuplicateTransition {
                source,
                label,
                target,
            } => write!(f, "duplicate transition {source} {label} {target}"),
            Violation::NoEnabledAction { state } => {
                write!(f, "state {state} has no enabled action")
            }
        }
    }
}

/// Checks every structural invariant of a draft. Violations are returned as
/// data, in a deterministic order.
pub fn validate(draft: &ModelDraft) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let n = draft.num_states;
    if n == 0 {
        out.push(Violation::NoStates);
    }
    if draft.initial >= n {
        out.push(Violation::InitialOutOfRange {
            initial: draft.initial,
        });
    }
    for &g in &draft.goals {
        if g >= n {
            out.push(Violation::GoalOutOfRange { goal: g });
        }
    }
    let mut seen: HashSet<(usize, &str, usize)> = HashSet::new();
    let mut has_action = vec![false; n];
    for t in &draft.transitions {
        if t.source >= n || t.target >= n {
            out.push(Violation::StateOutOfRange {
                source: t.source,
                target: t.target,
            });
            continue;
        }
        if ActionLabel::new(t.label.as_str()).is_err() {
            out.push(Violation::InvalidLabel {
                state: t.source,
                label: t.label.clone(),
            });
            continue;
        }
        if !(t.rate > 0.0 && t.rate.is_finite()) {
            out.push(Violation::NonPositiveRate {
                source: t.source,
                label: t.label.clone(),
                target: t.target,
                rate: t.rate,
            });
            continue;
        }
        if !seen.insert((t.source, t.label.as_str(), t.target)) {
            out.push(Violation::DuplicateTransition {
                source: t.source,
                label: t.label.clone(),
                target: t.target,
            });
            continue;
        }
        has_action[t.source] = true;
    }
    for (state, _) in has_action.iter().enumerate().filter(|(_, ok)| !**ok) {
        out.push(Violation::NoEnabledAction { state });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Continuous-time Markov decision process with a goal set.
///
/// Actions of each state are kept sorted by label and transitions of each
/// action sorted by target, so the stored order is canonical.
#[derive(Clone, Debug, PartialEq)]
pub struct CtmdpModel {
    initial: StateId,
    goals: Vec<bool>,
    actions: Vec<Vec<Action>>,
    max_exit_rate: f64,
}

impl CtmdpModel {
    pub fn from_draft(draft: &ModelDraft) -> Result<Self, ModelError> {
        validate(draft).map_err(ModelError::Invalid)?;
        let n = draft.num_states;
        let mut grouped: Vec<std::collections::BTreeMap<&str, Vec<Transition>>> =
            vec![Default::default(); n];
        for t in &draft.transitions {
            grouped[t.source]
                .entry(t.label.as_str())
                .or_default()
                .push(Transition {
                    target: StateId(t.target),
                    rate: t.rate,
                });
        }
        let actions = grouped
            .into_iter()
            .map(|by_label| {
                by_label
                    .into_iter()
                    .map(|(label, ts)| Action::new(ActionLabel(label.to_string()), ts))
                    .collect()
            })
            .collect();
        let mut goals = vec![false; n];
        for &g in &draft.goals {
            goals[g] = true;
        }
        Ok(Self::from_parts(StateId(draft.initial), goals, actions))
    }

    /// Assembles a model from already-consistent parts. Callers guarantee
    /// non-empty, label-sorted action lists with in-range targets.
    pub(crate) fn from_parts(initial: StateId, goals: Vec<bool>, actions: Vec<Vec<Action>>) -> Self {
        debug_assert_eq!(goals.len(), actions.len());
        debug_assert!(actions.iter().all(|a| !a.is_empty()));
        debug_assert!(actions
            .iter()
            .all(|a| a.windows(2).all(|w| w[0].label < w[1].label)));
        let max_exit_rate = actions
            .iter()
            .flatten()
            .map(Action::exit_rate)
            .fold(0.0, f64::max);
        CtmdpModel {
            initial,
            goals,
            actions,
            max_exit_rate,
        }
    }

    pub fn to_draft(&self) -> ModelDraft {
        let mut draft = ModelDraft::new(self.num_states(), self.initial.0);
        draft.goals = self.goal_states().map(|s| s.0).collect();
        for (s, acts) in self.actions.iter().enumerate() {
            for a in acts {
                for t in &a.transitions {
                    draft.transition(s, a.label.as_str(), t.target.0, t.rate);
                }
            }
        }
        draft
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.actions
            .iter()
            .flatten()
            .map(|a| a.transitions.len())
            .sum()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goals[s.0]
    }

    pub fn goal_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.goals
            .iter()
            .enumerate()
            .filter(|(_, g)| **g)
            .map(|(i, _)| StateId(i))
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId)
    }

    /// Enabled actions of `s`, sorted by label.
    pub fn actions(&self, s: StateId) -> &[Action] {
        &self.actions[s.0]
    }

    pub fn action(&self, s: StateId, label: &str) -> Result<&Action, ModelError> {
        let acts = self
            .actions
            .get(s.0)
            .ok_or(ModelError::StateOutOfRange(s.0))?;
        acts.binary_search_by(|a| a.label.as_str().cmp(label))
            .map(|i| &acts[i])
            .map_err(|_| ModelError::ActionNotEnabled {
                state: s.0,
                label: label.to_string(),
            })
    }

    /// Position of `label` in the sorted action list of `s`.
    pub fn action_index(&self, s: StateId, label: &str) -> Option<usize> {
        self.actions
            .get(s.0)?
            .binary_search_by(|a| a.label.as_str().cmp(label))
            .ok()
    }

    pub fn exit_rate(&self, s: StateId, label: &str) -> Result<f64, ModelError> {
        self.action(s, label).map(Action::exit_rate)
    }

    pub fn branch_distribution(&self, s: StateId, label: &str) -> Result<BranchDistribution, ModelError> {
        let a = self.action(s, label)?;
        let e = a.exit_rate;
        Ok(BranchDistribution {
            entries: a
                .transitions
                .iter()
                .map(|t| (t.target, t.rate / e))
                .collect(),
        })
    }

    /// Largest exit rate over all (state, action) pairs.
    pub fn max_exit_rate(&self) -> f64 {
        self.max_exit_rate
    }

    /// Union of successors of `s` over all its actions.
    pub fn successors(&self, s: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.actions[s.0].iter().flat_map(Action::successors)
    }

    /// States all of whose actions are pure self-loops.
    pub fn is_absorbing(&self, s: StateId) -> bool {
        self.actions[s.0].iter().all(|a| a.is_self_loop_of(s))
    }

    /// Forward closure from the initial state.
    pub fn reachable(&self) -> BTreeSet<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial.0] = true;
        while let Some(s) = queue.pop_front() {
            for t in self.successors(s) {
                if !seen[t.0] {
                    seen[t.0] = true;
                    queue.push_back(t);
                }
            }
        }
        self.states().filter(|s| seen[s.0]).collect()
    }

    /// Marks states from which some goal is reachable in the transition graph.
    pub fn can_reach_goal(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            for t in self.successors(StateId(s)) {
                if t.0 != s {
                    preds[t.0].push(s);
                }
            }
        }
        let mut mark = self.goals.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| mark[s]).collect();
        while let Some(s) = queue.pop_front() {
            for &p in &preds[s] {
                if !mark[p] {
                    mark[p] = true;
                    queue.push_back(p);
                }
            }
        }
        mark
    }

    /// Replaces the actions of every goal state by a single self-loop of
    /// rate λ̄, labelled with the state's smallest label.
    pub fn make_goals_absorbing(&self) -> CtmdpModel {
        let rate = self.max_exit_rate;
        let actions = self
            .actions
            .iter()
            .enumerate()
            .map(|(s, acts)| {
                if self.goals[s] {
                    vec![Action::self_loop(acts[0].label.clone(), StateId(s), rate)]
                } else {
                    acts.clone()
                }
            })
            .collect();
        CtmdpModel::from_parts(self.initial, self.goals.clone(), actions)
    }

    /// Re-checks the model invariants. Always empty for models built through
    /// [`CtmdpModel::from_draft`].
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        validate(&self.to_draft())
    }

    pub(crate) fn with_goals(&self, goals: Vec<bool>) -> CtmdpModel {
        CtmdpModel::from_parts(self.initial, goals, self.actions.clone())
    }

    pub(crate) fn into_parts(self) -> (StateId, Vec<bool>, Vec<Vec<Action>>) {
        (self.initial, self.goals, self.actions)
    }
}
