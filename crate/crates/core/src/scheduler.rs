//! Deterministic schedulers that are piecewise constant in remaining time.
//!
//! The decision table is sparse: for each state only the steps at which the
//! chosen action changes are stored. The action at step `i` is the entry with
//! the largest step `<= i`; a state (or a prefix of steps) without entries
//! uses the lexicographically smallest enabled action.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::model::{ActionLabel, CtmdpModel, StateId};

/// Optimisation direction of a reachability query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    #[default]
    #[serde(rename = "max")]
    Maximize,
    #[serde(rename = "min")]
    Minimize,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Maximize => "max",
            Objective::Minimize => "min",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Objective::Maximize),
            "min" => Ok(Objective::Minimize),
            other => Err(format!("unknown objective {other:?} (expected max or min)")),
        }
    }
}

const FALLBACK_RULE: &str = "lex-min";

#[derive(Clone, Debug, PartialEq)]
pub struct StepScheduler {
    delta: f64,
    num_steps: u64,
    objective: Objective,
    decisions: BTreeMap<StateId, Vec<(u64, ActionLabel)>>,
}

impl StepScheduler {
    /// A scheduler with no stored decisions: every state uses the fallback.
    pub fn empty(delta: f64, num_steps: u64, objective: Objective) -> Self {
        StepScheduler {
            delta,
            num_steps,
            objective,
            decisions: BTreeMap::new(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn num_steps(&self) -> u64 {
        self.num_steps
    }

    pub fn horizon(&self) -> f64 {
        self.delta * self.num_steps as f64
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// Change points per state, ascending in step.
    pub fn decisions(&self) -> &BTreeMap<StateId, Vec<(u64, ActionLabel)>> {
        &self.decisions
    }

    pub fn num_entries(&self) -> usize {
        self.decisions.values().map(Vec::len).sum()
    }

    /// Appends a change point. Steps must be pushed in ascending order per state.
    pub fn push_decision(&mut self, state: StateId, step: u64, label: ActionLabel) {
        let entries = self.decisions.entry(state).or_default();
        debug_assert!(entries.last().is_none_or(|(s, _)| *s < step));
        entries.push((step, label));
    }

    /// Stored decision for `state` at grid step `step`; `None` means fallback.
    pub fn decision_at_step(&self, state: StateId, step: u64) -> Option<&ActionLabel> {
        let entries = self.decisions.get(&state)?;
        let idx = entries.partition_point(|(s, _)| *s <= step);
        idx.checked_sub(1).map(|i| &entries[i].1)
    }

    /// Grid step governing the given remaining time, or `None` once the
    /// horizon is exhausted.
    pub fn step_for_remaining(&self, remaining: f64) -> Option<u64> {
        if remaining <= 0.0 || self.num_steps == 0 {
            return None;
        }
        let raw = (remaining / self.delta).ceil();
        Some((raw as u64).clamp(1, self.num_steps))
    }

    /// Action taken in `state` after `elapsed` time units of a run with
    /// horizon `horizon`. Labels not enabled in `model` resolve to the fallback.
    pub fn action_at<'m>(
        &self,
        model: &'m CtmdpModel,
        state: StateId,
        elapsed: f64,
        horizon: f64,
    ) -> &'m ActionLabel {
        let actions = model.actions(state);
        let chosen = self
            .step_for_remaining(horizon - elapsed)
            .and_then(|step| self.decision_at_step(state, step))
            .and_then(|label| model.action_index(state, label.as_str()));
        actions[chosen.unwrap_or(0)].label()
    }

    /// Fails if any stored decision names a state or action the model lacks.
    pub fn check_against(&self, model: &CtmdpModel) -> Result<(), SolverError> {
        for (state, entries) in &self.decisions {
            if state.0 >= model.num_states() {
                return Err(SolverError::UnknownState(state.0));
            }
            for (_, label) in entries {
                if model.action_index(*state, label.as_str()).is_none() {
                    return Err(SolverError::DisabledAction {
                        state: state.0,
                        label: label.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Renames states; entries whose state maps to `None` are dropped.
    pub fn remap(&self, mut map: impl FnMut(StateId) -> Option<StateId>) -> StepScheduler {
        let mut out = StepScheduler::empty(self.delta, self.num_steps, self.objective);
        for (state, entries) in &self.decisions {
            if let Some(target) = map(*state) {
                out.decisions.insert(target, entries.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SchedulerFile::from(self)).expect("scheduler serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let file: SchedulerFile = serde_json::from_str(text)?;
        file.try_into().map_err(serde::de::Error::custom)
    }
}

/// On-disk layout: `decisions` maps step -> state -> label.
#[derive(Serialize, Deserialize)]
struct SchedulerFile {
    delta: f64,
    num_steps: u64,
    objective: Objective,
    decisions: BTreeMap<u64, BTreeMap<usize, String>>,
    fallback: String,
}

impl From<&StepScheduler> for SchedulerFile {
    fn from(s: &StepScheduler) -> Self {
        let mut decisions: BTreeMap<u64, BTreeMap<usize, String>> = BTreeMap::new();
        for (state, entries) in &s.decisions {
            for (step, label) in entries {
                decisions
                    .entry(*step)
                    .or_default()
                    .insert(state.0, label.to_string());
            }
        }
        SchedulerFile {
            delta: s.delta,
            num_steps: s.num_steps,
            objective: s.objective,
            decisions,
            fallback: FALLBACK_RULE.to_string(),
        }
    }
}

impl TryFrom<SchedulerFile> for StepScheduler {
    type Error = String;

    fn try_from(f: SchedulerFile) -> Result<Self, Self::Error> {
        if f.fallback != FALLBACK_RULE {
            return Err(format!("unsupported fallback rule {:?}", f.fallback));
        }
        if !(f.delta >= 0.0 && f.delta.is_finite()) {
            return Err(format!("invalid delta {}", f.delta));
        }
        let mut s = StepScheduler::empty(f.delta, f.num_steps, f.objective);
        for (step, row) in f.decisions {
            if step == 0 || step > f.num_steps {
                return Err(format!("step {step} outside 1..={}", f.num_steps));
            }
            for (state, label) in row {
                let label = ActionLabel::new(label).map_err(|e| e.to_string())?;
                s.push_decision(StateId(state), step, label);
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDraft;

    fn label(s: &str) -> ActionLabel {
        ActionLabel::new(s).unwrap()
    }

    #[test]
    fn change_points_are_piecewise_constant() {
        let mut s = StepScheduler::empty(0.1, 10, Objective::Maximize);
        s.push_decision(StateId(0), 3, label("b"));
        s.push_decision(StateId(0), 7, label("a"));
        assert_eq!(s.decision_at_step(StateId(0), 1), None);
        assert_eq!(s.decision_at_step(StateId(0), 3), Some(&label("b")));
        assert_eq!(s.decision_at_step(StateId(0), 6), Some(&label("b")));
        assert_eq!(s.decision_at_step(StateId(0), 10), Some(&label("a")));
        assert_eq!(s.decision_at_step(StateId(1), 5), None);
    }

    #[test]
    fn remaining_time_maps_to_steps() {
        let s = StepScheduler::empty(0.5, 4, Objective::Maximize);
        assert_eq!(s.step_for_remaining(2.0), Some(4));
        assert_eq!(s.step_for_remaining(1.2), Some(3));
        assert_eq!(s.step_for_remaining(0.01), Some(1));
        assert_eq!(s.step_for_remaining(9.0), Some(4));
        assert_eq!(s.step_for_remaining(0.0), None);
        assert_eq!(s.step_for_remaining(-1.0), None);
    }

    #[test]
    fn action_lookup_uses_fallback() {
        let mut d = ModelDraft::new(2, 0);
        d.goal(1)
            .transition(0, "b", 1, 1.0)
            .transition(0, "a", 1, 2.0)
            .transition(1, "z", 1, 1.0);
        let m = d.build().unwrap();
        let mut s = StepScheduler::empty(1.0, 2, Objective::Maximize);
        s.push_decision(StateId(0), 2, label("b"));
        // elapsed 0 of 2 -> remaining 2 -> step 2
        assert_eq!(s.action_at(&m, StateId(0), 0.0, 2.0).as_str(), "b");
        // remaining 0.5 -> step 1 -> fallback "a"
        assert_eq!(s.action_at(&m, StateId(0), 1.5, 2.0).as_str(), "a");
        assert_eq!(s.action_at(&m, StateId(0), 2.5, 2.0).as_str(), "a");
        assert!(s.check_against(&m).is_ok());
        s.push_decision(StateId(1), 1, label("q"));
        assert!(matches!(
            s.check_against(&m),
            Err(SolverError::DisabledAction { state: 1, .. })
        ));
    }

    #[test]
    fn json_layout() {
        let mut s = StepScheduler::empty(0.25, 8, Objective::Minimize);
        s.push_decision(StateId(3), 2, label("go"));
        s.push_decision(StateId(0), 2, label("x"));
        s.push_decision(StateId(0), 5, label("y"));
        let text = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["objective"], "min");
        assert_eq!(v["fallback"], "lex-min");
        assert_eq!(v["decisions"]["2"]["3"], "go");
        assert_eq!(v["decisions"]["5"]["0"], "y");
        assert_eq!(StepScheduler::from_json(&text).unwrap(), s);
    }

    #[test]
    fn json_rejects_bad_steps_and_fallbacks() {
        let bad_step = r#"{"delta":0.1,"num_steps":2,"objective":"max","decisions":{"3":{"0":"a"}},"fallback":"lex-min"}"#;
        assert!(StepScheduler::from_json(bad_step).is_err());
        let bad_rule = r#"{"delta":0.1,"num_steps":2,"objective":"max","decisions":{},"fallback":"random"}"#;
        assert!(StepScheduler::from_json(bad_rule).is_err());
    }
}
