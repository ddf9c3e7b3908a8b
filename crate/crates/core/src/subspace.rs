//! Bounds on the optimal value from a partially explored state space.
//!
//! Given an explored set `S'` containing the initial state, both sub-models
//! live on `S̃ = S' ∪ Succ(S')`. Explored states keep their transitions;
//! fringe states (`S̃ \ S'`) only loop on themselves at rate λ̄ of the full
//! model. The lower model keeps the original goals, the upper model also
//! treats the fringe as goals, so their values enclose the full value.
//!
//! [`SubspaceRun`] drives the outer loop one iteration at a time; it grows
//! `S'` by simulation, re-solves both sub-models and re-selects the
//! simulation scheduler. [`subspace_tbr`] runs it to convergence.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::SubspaceError;
use crate::model::{Action, CtmdpModel, StateId, Transition};
use crate::scheduler::{Objective, StepScheduler};
use crate::simulate::{derive_seed, relevant_subset_threads, SimScheduler};
use crate::solver::{solve_tbr, SolveOutcome, SolverOptions, DEFAULT_STEP_CAP};

/// How the simulation scheduler is picked between iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GuidePolicy {
    #[default]
    Uniform,
    /// The optimal scheduler of the previous upper model (uniform on the
    /// first iteration).
    Optimal,
    /// Uniform on odd iterations, optimal-guided on even ones.
    Alternate,
}

impl GuidePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            GuidePolicy::Uniform => "uniform",
            GuidePolicy::Optimal => "optimal",
            GuidePolicy::Alternate => "alternate",
        }
    }
}

impl FromStr for GuidePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(GuidePolicy::Uniform),
            "optimal" => Ok(GuidePolicy::Optimal),
            "alternate" => Ok(GuidePolicy::Alternate),
            other => Err(format!(
                "unknown simulation scheduler {other:?} (expected uniform, optimal or alternate)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceConfig {
    pub epsilon: f64,
    pub solver_epsilon: f64,
    pub n_sim: u64,
    pub guide: GuidePolicy,
    pub objective: Objective,
    pub master_seed: u64,
    pub max_iterations: usize,
    pub step_cap: u64,
    /// Upper bound on worker threads for simulations and the paired solves.
    pub threads: usize,
}

impl SubspaceConfig {
    pub fn new(epsilon: f64) -> Self {
        SubspaceConfig {
            epsilon,
            solver_epsilon: epsilon / 10.0,
            n_sim: 1000,
            guide: GuidePolicy::Uniform,
            objective: Objective::Maximize,
            master_seed: 0,
            max_iterations: 1000,
            step_cap: DEFAULT_STEP_CAP,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SubspaceError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SubspaceError::Config(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.solver_epsilon > 0.0 && self.solver_epsilon <= self.epsilon / 4.0) {
            return Err(SubspaceError::Config(format!(
                "solver epsilon must lie in (0, epsilon/4], got {}",
                self.solver_epsilon
            )));
        }
        if self.n_sim == 0 {
            return Err(SubspaceError::Config("n_sim must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(SubspaceError::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions::new(self.solver_epsilon).with_step_cap(self.step_cap)
    }
}

/// A sub-model over `S̃` together with its embedding into the full model.
#[derive(Clone, Debug)]
pub struct SubModel {
    pub model: CtmdpModel,
    /// Full-model id of every sub-model state, ascending.
    pub original: Vec<StateId>,
    /// Whether each sub-model state belongs to `S'` (as opposed to the fringe).
    pub explored: Vec<bool>,
}

impl SubModel {
    pub fn to_original(&self, s: StateId) -> StateId {
        self.original[s.0]
    }

    pub fn from_original(&self, s: StateId) -> Option<StateId> {
        self.original.binary_search(&s).ok().map(StateId)
    }

    pub fn fringe(&self) -> impl Iterator<Item = StateId> + '_ {
        self.original
            .iter()
            .zip(&self.explored)
            .filter(|(_, e)| !**e)
            .map(|(s, _)| *s)
    }
}

/// Pessimistic and optimistic sub-models for the same explored set.
#[derive(Clone, Debug)]
pub struct SubModelPair {
    pub lower: SubModel,
    pub upper: SubModel,
}

pub fn sub_model_pair(
    model: &CtmdpModel,
    explored: &BTreeSet<StateId>,
) -> Result<SubModelPair, SubspaceError> {
    if !explored.contains(&model.initial()) {
        return Err(SubspaceError::InitialNotExplored);
    }
    let n = model.num_states();
    let mut in_explored = vec![false; n];
    for s in explored {
        in_explored[s.0] = true;
    }
    let mut in_tilde = in_explored.clone();
    for &s in explored {
        for t in model.successors(s) {
            in_tilde[t.0] = true;
        }
    }
    let original: Vec<StateId> = (0..n).filter(|&i| in_tilde[i]).map(StateId).collect();
    let mut index = vec![usize::MAX; n];
    for (i, s) in original.iter().enumerate() {
        index[s.0] = i;
    }
    let lambda = model.max_exit_rate();
    let actions: Vec<Vec<Action>> = original
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            model
                .actions(s)
                .iter()
                .map(|a| {
                    if in_explored[s.0] {
                        let ts = a
                            .transitions()
                            .iter()
                            .map(|t| Transition {
                                target: StateId(index[t.target.0]),
                                rate: t.rate,
                            })
                            .collect();
                        Action::new(a.label().clone(), ts)
                    } else {
                        Action::self_loop(a.label().clone(), StateId(i), lambda)
                    }
                })
                .collect()
        })
        .collect();
    let explored_flags: Vec<bool> = original.iter().map(|s| in_explored[s.0]).collect();
    let lower_goals: Vec<bool> = original.iter().map(|&s| model.is_goal(s)).collect();
    let upper_goals: Vec<bool> = original
        .iter()
        .map(|&s| model.is_goal(s) || !in_explored[s.0])
        .collect();
    let initial = StateId(index[model.initial().0]);
    let lower = CtmdpModel::from_parts(initial, lower_goals, actions);
    let upper = lower.with_goals(upper_goals);
    Ok(SubModelPair {
        lower: SubModel {
            model: lower,
            original: original.clone(),
            explored: explored_flags.clone(),
        },
        upper: SubModel {
            model: upper,
            original,
            explored: explored_flags,
        },
    })
}

/// Pessimistic sub-model: fringe states absorb and are goals only if they
/// were goals before.
pub fn lower_sub(model: &CtmdpModel, explored: &BTreeSet<StateId>) -> Result<SubModel, SubspaceError> {
    sub_model_pair(model, explored).map(|p| p.lower)
}

/// Optimistic sub-model: the fringe becomes goal.
pub fn upper_sub(model: &CtmdpModel, explored: &BTreeSet<StateId>) -> Result<SubModel, SubspaceError> {
    sub_model_pair(model, explored).map(|p| p.upper)
}

/// Simulation scheduler for the 1-based `iteration`. `guide` is the previous
/// iteration's optimal scheduler, already expressed over full-model ids.
pub fn choose_scheduler(
    policy: GuidePolicy,
    iteration: usize,
    guide: Option<&Arc<StepScheduler>>,
    horizon: f64,
) -> SimScheduler {
    let guided = |g: &Arc<StepScheduler>| SimScheduler::StepGuided {
        scheduler: Arc::clone(g),
        horizon,
    };
    match (policy, guide) {
        (GuidePolicy::Uniform, _) | (_, None) => SimScheduler::Uniform,
        (GuidePolicy::Optimal, Some(g)) if iteration > 1 => guided(g),
        (GuidePolicy::Alternate, Some(g)) if iteration % 2 == 0 => guided(g),
        _ => SimScheduler::Uniform,
    }
}

/// Lifts a scheduler of the lower sub-model to the full model: decisions of
/// explored states are kept, every other state uses the fallback action.
pub fn extend_scheduler(lower_opt: &StepScheduler, sub: &SubModel) -> StepScheduler {
    lower_opt.remap(|s| sub.explored[s.0].then(|| sub.to_original(s)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub explored: usize,
    pub lower: f64,
    pub upper: f64,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct SubspaceResult {
    pub lower: f64,
    pub upper: f64,
    pub explored: BTreeSet<StateId>,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Extended scheduler of the last lower solve, over full-model ids.
    pub scheduler: StepScheduler,
    pub seed: u64,
    /// Grid size and a-priori bound of the last solve pair.
    pub solver_steps: u64,
    pub apriori_bound: f64,
}

/// Stateful outer loop; one call to [`SubspaceRun::step`] is one iteration.
pub struct SubspaceRun<'m> {
    model: &'m CtmdpModel,
    horizon: f64,
    config: SubspaceConfig,
    explored: BTreeSet<StateId>,
    guide: Option<Arc<StepScheduler>>,
    iterations: Vec<IterationRecord>,
    scheduler: StepScheduler,
    solver_steps: u64,
    apriori_bound: f64,
}

impl<'m> SubspaceRun<'m> {
    pub fn new(model: &'m CtmdpModel, horizon: f64, config: SubspaceConfig) -> Result<Self, SubspaceError> {
        config.validate()?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(SubspaceError::Config(format!(
                "time bound must be non-negative, got {horizon}"
            )));
        }
        let objective = config.objective;
        Ok(SubspaceRun {
            model,
            horizon,
            config,
            explored: BTreeSet::from([model.initial()]),
            guide: None,
            iterations: Vec::new(),
            scheduler: StepScheduler::empty(0.0, 0, objective),
            solver_steps: 0,
            apriori_bound: 0.0,
        })
    }

    pub fn explored(&self) -> &BTreeSet<StateId> {
        &self.explored
    }

    pub fn iterations(&self) -> &[IterationRecord] {
        &self.iterations
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.iterations
            .last()
            .map_or((0.0, 1.0), |r| (r.lower, r.upper))
    }

    pub fn is_converged(&self) -> bool {
        let (l, u) = self.bounds();
        u - l < self.config.epsilon
    }

    pub fn step(&mut self) -> Result<&IterationRecord, SubspaceError> {
        let start = Instant::now();
        let iteration = self.iterations.len() + 1;
        let cfg = &self.config;
        let sim = choose_scheduler(cfg.guide, iteration, self.guide.as_ref(), self.horizon);
        let seed = derive_seed(cfg.master_seed, iteration as u64);
        let fresh = relevant_subset_threads(self.model, self.horizon, &sim, cfg.n_sim, seed, cfg.threads);
        self.explored.extend(fresh);

        let pair = sub_model_pair(self.model, &self.explored)?;
        let (lo, hi) = self.solve_pair(&pair)?;
        let lower = lo.lower();
        let upper = hi.upper();

        let (guide_src, guide_sub) = match cfg.objective {
            Objective::Maximize => (&hi, &pair.upper),
            Objective::Minimize => (&lo, &pair.lower),
        };
        self.guide = Some(Arc::new(
            guide_src.scheduler.remap(|s| Some(guide_sub.to_original(s))),
        ));
        self.scheduler = extend_scheduler(&lo.scheduler, &pair.lower);
        self.solver_steps = lo.num_steps.max(hi.num_steps);
        self.apriori_bound = lo.apriori_bound.max(hi.apriori_bound);
        self.iterations.push(IterationRecord {
            iteration,
            explored: self.explored.len(),
            lower,
            upper,
            wall: start.elapsed(),
        });
        Ok(self.iterations.last().expect("just pushed"))
    }

    fn solve_pair(&self, pair: &SubModelPair) -> Result<(SolveOutcome, SolveOutcome), SubspaceError> {
        let opts = self.config.solver_options();
        let solve = |m: &CtmdpModel| solve_tbr(m, self.horizon, self.config.objective, &opts);
        if self.config.threads > 1 {
            let (lo, hi) = std::thread::scope(|scope| {
                let h = scope.spawn(|| solve(&pair.upper.model));
                let lo = solve(&pair.lower.model);
                (lo, h.join().expect("solver worker"))
            });
            Ok((lo?, hi?))
        } else {
            Ok((solve(&pair.lower.model)?, solve(&pair.upper.model)?))
        }
    }

    pub fn finish(self) -> SubspaceResult {
        let (lower, upper) = self.bounds();
        let converged = upper - lower < self.config.epsilon;
        SubspaceResult {
            lower,
            upper,
            explored: self.explored,
            iterations: self.iterations,
            converged,
            scheduler: self.scheduler,
            seed: self.config.master_seed,
            solver_steps: self.solver_steps,
            apriori_bound: self.apriori_bound,
        }
    }
}

/// Runs the outer loop until `upper − lower < ε` or the iteration limit.
pub fn subspace_tbr(
    model: &CtmdpModel,
    horizon: f64,
    config: &SubspaceConfig,
) -> Result<SubspaceResult, SubspaceError> {
    config.validate()?;
    if model.is_goal(model.initial()) {
        return Ok(SubspaceResult {
            lower: 1.0,
            upper: 1.0,
            explored: BTreeSet::from([model.initial()]),
            iterations: Vec::new(),
            converged: true,
            scheduler: StepScheduler::empty(0.0, 0, config.objective),
            seed: config.master_seed,
            solver_steps: 0,
            apriori_bound: 0.0,
        });
    }
    let mut run = SubspaceRun::new(model, horizon, config.clone())?;
    while run.iterations().len() < config.max_iterations {
        run.step()?;
        if run.is_converged() {
            break;
        }
    }
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_two_chain, TwoChainVariant};
    use crate::model::ModelDraft;

    fn ids(v: &[usize]) -> BTreeSet<StateId> {
        v.iter().copied().map(StateId).collect()
    }

    #[test]
    fn full_explored_set_reproduces_model() {
        let m = gen_two_chain(TwoChainVariant::A);
        let all: BTreeSet<_> = m.states().collect();
        let pair = sub_model_pair(&m, &all).unwrap();
        assert_eq!(pair.lower.model, m);
        assert_eq!(pair.upper.model, m);
        assert_eq!(pair.lower.fringe().count(), 0);
    }

    #[test]
    fn fringe_construction_on_two_chain() {
        let m = gen_two_chain(TwoChainVariant::A);
        // {0, a1, a2, c1, c2}
        let explored = ids(&[0, 1, 2, 14, 15]);
        let pair = sub_model_pair(&m, &explored).unwrap();
        let fringe: Vec<_> = pair.lower.fringe().collect();
        assert_eq!(fringe, vec![StateId(3), StateId(16)]);
        let lo = &pair.lower.model;
        assert_eq!(lo.num_states(), 7);
        assert_eq!(lo.goal_states().count(), 0);
        let b1 = pair.lower.from_original(StateId(3)).unwrap();
        assert!(lo.is_absorbing(b1));
        assert_eq!(lo.exit_rate(b1, "next").unwrap(), 175.0);
        let up = &pair.upper.model;
        assert!(up.is_goal(b1));
        // shared structure, different goals
        for s in lo.states() {
            assert_eq!(lo.actions(s), up.actions(s));
        }
    }

    #[test]
    fn fringe_goal_stays_goal_in_lower_model() {
        let m = gen_two_chain(TwoChainVariant::A);
        let explored = ids(&[0, 14, 15, 16]);
        let lo = lower_sub(&m, &explored).unwrap();
        let g = lo.from_original(StateId(17)).unwrap();
        assert!(lo.model.is_goal(g));
    }

    #[test]
    fn initial_must_be_explored() {
        let m = gen_two_chain(TwoChainVariant::A);
        assert!(matches!(
            lower_sub(&m, &ids(&[1])),
            Err(SubspaceError::InitialNotExplored)
        ));
    }

    #[test]
    fn scheduler_choice() {
        let g = Arc::new(StepScheduler::empty(0.1, 10, Objective::Maximize));
        assert!(choose_scheduler(GuidePolicy::Uniform, 5, Some(&g), 1.0).is_uniform());
        assert!(choose_scheduler(GuidePolicy::Optimal, 1, None, 1.0).is_uniform());
        assert!(choose_scheduler(GuidePolicy::Optimal, 1, Some(&g), 1.0).is_uniform());
        assert!(!choose_scheduler(GuidePolicy::Optimal, 2, Some(&g), 1.0).is_uniform());
        assert!(choose_scheduler(GuidePolicy::Alternate, 3, Some(&g), 1.0).is_uniform());
        assert!(!choose_scheduler(GuidePolicy::Alternate, 4, Some(&g), 1.0).is_uniform());
    }

    #[test]
    fn extension_keeps_explored_decisions_only() {
        let m = gen_two_chain(TwoChainVariant::A);
        let explored = ids(&[0, 1, 2]);
        let pair = sub_model_pair(&m, &explored).unwrap();
        let mut s = StepScheduler::empty(0.1, 10, Objective::Maximize);
        s.push_decision(StateId(0), 4, crate::model::ActionLabel::new("beta").unwrap());
        let fringe_local = pair.lower.from_original(StateId(3)).unwrap();
        s.push_decision(fringe_local, 1, crate::model::ActionLabel::new("next").unwrap());
        let ext = extend_scheduler(&s, &pair.lower);
        assert_eq!(ext.decisions().len(), 1);
        assert_eq!(ext.decision_at_step(StateId(0), 5).unwrap().as_str(), "beta");
        assert!(ext.check_against(&m).is_ok());
    }

    #[test]
    fn initial_goal_returns_one() {
        let mut d = ModelDraft::new(2, 0);
        d.goal(0).transition(0, "a", 1, 1.0).transition(1, "a", 0, 1.0);
        let m = d.build().unwrap();
        let r = subspace_tbr(&m, 5.0, &SubspaceConfig::new(0.01)).unwrap();
        assert_eq!((r.lower, r.upper), (1.0, 1.0));
        assert!(r.converged);
        assert!(r.iterations.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(SubspaceConfig::new(0.01).validate().is_ok());
        assert!(SubspaceConfig::new(1.5).validate().is_err());
        let c = SubspaceConfig {
            solver_epsilon: 0.005,
            ..SubspaceConfig::new(0.01)
        };
        assert!(c.validate().is_err());
        let c = SubspaceConfig {
            n_sim: 0,
            ..SubspaceConfig::new(0.01)
        };
        assert!(c.validate().is_err());
        assert_eq!("alternate".parse::<GuidePolicy>(), Ok(GuidePolicy::Alternate));
        assert!("greedy".parse::<GuidePolicy>().is_err());
    }
}
