//! Certified bounds on optimal time-bounded reachability in continuous-time
//! Markov decision processes, computed on a simulation-selected subspace.

pub mod cli;
pub mod error;
pub mod generators;
pub mod greedy;
pub mod io;
pub mod model;
pub mod scheduler;
pub mod simulate;
pub mod solver;
pub mod subspace;

pub use error::{GreedyError, ModelError, ParseError, SolverError, SubspaceError};
pub use greedy::{greedy_min_subset, GreedyResult};
pub use io::{parse_model, serialize_model};
pub use model::{ActionLabel, BranchDistribution, CtmdpModel, ModelDraft, StateId};
pub use scheduler::{Objective, StepScheduler};
pub use simulate::{relevant_subset, sample_path, RngStream, SimScheduler, TimedPath};
pub use solver::{evaluate_scheduler, solve_tbr, step_count, SolveOutcome, SolverOptions};
pub use subspace::{subspace_tbr, GuidePolicy, SubspaceConfig, SubspaceResult};
