//! Command-line driver. The `subtbr` binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 converged (or success), 1 usage / IO / model errors,
//! 2 bounds emitted without convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::generators::{
    gen_erlang, gen_polling, gen_two_chain, ErlangParams, PollingGoal, PollingParams,
    TwoChainVariant,
};
use crate::greedy::greedy_min_subset;
use crate::io::{parse_model, serialize_model};
use crate::model::CtmdpModel;
use crate::scheduler::{Objective, StepScheduler};
use crate::solver::{evaluate_scheduler, solve_tbr, SolverOptions, DEFAULT_STEP_CAP};
use crate::subspace::{subspace_tbr, GuidePolicy, SubspaceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "subtbr", version, about = "Time-bounded reachability bounds for CTMDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bound the optimal reachability probability of a model.
    Solve(SolveArgs),
    /// Write a generated benchmark model.
    Generate(GenerateArgs),
    /// Greedy search for a small sufficient sub-model.
    Greedy(GreedyArgs),
    /// Value of a stored scheduler on a model.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Max,
    Min,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Max => Objective::Maximize,
            ObjectiveArg::Min => Objective::Minimize,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GuideArg {
    Uniform,
    Optimal,
    Alternate,
}

impl From<GuideArg> for GuidePolicy {
    fn from(g: GuideArg) -> Self {
        match g {
            GuideArg::Uniform => GuidePolicy::Uniform,
            GuideArg::Optimal => GuidePolicy::Optimal,
            GuideArg::Alternate => GuidePolicy::Alternate,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    time_bound: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "max")]
    objective: ObjectiveArg,
    /// Defaults to epsilon/10.
    #[arg(long)]
    solver_epsilon: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    nsim: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    sim_scheduler: GuideArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Solve the whole model instead of exploring a subspace.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    emit_scheduler: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Largest admissible discretisation grid.
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(subcommand)]
    family: Family,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    A,
    B,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GoalArg {
    All,
    One,
}

#[derive(Debug, Subcommand)]
enum Family {
    /// Fast risky action against a slow Erlang chain.
    Erlang {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 10.0)]
        fast_rate: f64,
        #[arg(long, default_value_t = 0.5)]
        fast_success: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two competing chains into one goal.
    Twochain {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Polling system with bounded queues.
    Polling {
        #[arg(long)]
        j: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        goal: GoalArg,
        #[arg(long, default_value_t = 1.0)]
        arrival_rate: f64,
        #[arg(long, default_value_t = 4.0)]
        service_rate: f64,
        #[arg(long, default_value_t = 0.9)]
        service_success: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GreedyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    time_bound: f64,
    #[arg(long)]
    epsilon: f64,
    /// Defaults to epsilon/10.
    #[arg(long)]
    solver_epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    scheduler: PathBuf,
    #[arg(long)]
    time_bound: f64,
    #[arg(long, default_value_t = 1e-3)]
    solver_epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub iteration: usize,
    pub explored: usize,
    pub lower: f64,
    pub upper: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub name: String,
    pub steps: u64,
    pub apriori_bound: f64,
}

/// Machine-readable outcome of `subtbr solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub model: String,
    pub num_states: usize,
    pub explored: usize,
    pub iterations: Vec<IterationEntry>,
    pub lower: f64,
    pub upper: f64,
    pub epsilon: f64,
    pub time_bound: f64,
    pub objective: Objective,
    pub converged: bool,
    pub seed: u64,
    pub solver: SolverInfo,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scheduler_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyDocument {
    pub model: String,
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub final_gap: f64,
    /// Candidate states ascending by score.
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read_model(path: &Path) -> Result<CtmdpModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, target: Option<&Path>, json: &str) -> Result<(), Failure> {
    match target {
        Some(p) => write_file(p, json),
        None => out.write_all(json.as_bytes()).map_err(Failure::from),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("document serializes");
    s.push('\n');
    s
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Greedy(a) => cmd_greedy(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let model = read_model(&a.model)?;
    let solver_epsilon = a.solver_epsilon.unwrap_or(a.epsilon / 10.0);
    let objective: Objective = a.objective.into();
    let (doc, scheduler) = if a.full {
        if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
            return Err(Failure(format!("epsilon must lie in (0,1), got {}", a.epsilon)));
        }
        let start = std::time::Instant::now();
        let opts = SolverOptions::new(solver_epsilon).with_step_cap(a.step_cap);
        let outcome = solve_tbr(&model, a.time_bound, objective, &opts)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let (lower, upper) = if model.is_goal(model.initial()) {
            (1.0, 1.0)
        } else {
            (outcome.lower(), outcome.upper())
        };
        let doc = ResultDocument {
            model: a.model.display().to_string(),
            num_states: model.num_states(),
            explored: model.num_states(),
            iterations: vec![IterationEntry {
                iteration: 1,
                explored: model.num_states(),
                lower,
                upper,
                wall_ms,
            }],
            lower,
            upper,
            epsilon: a.epsilon,
            time_bound: a.time_bound,
            objective,
            converged: upper - lower < a.epsilon,
            seed: a.seed,
            solver: SolverInfo {
                name: "discretization".into(),
                steps: outcome.num_steps,
                apriori_bound: outcome.apriori_bound,
            },
            scheduler_path: None,
        };
        (doc, outcome.scheduler)
    } else {
        let config = SubspaceConfig {
            epsilon: a.epsilon,
            solver_epsilon,
            n_sim: a.nsim,
            guide: a.sim_scheduler.into(),
            objective,
            master_seed: a.seed,
            max_iterations: a.max_iterations,
            step_cap: a.step_cap,
            threads: a.threads.max(1),
        };
        let r = subspace_tbr(&model, a.time_bound, &config)?;
        let doc = ResultDocument {
            model: a.model.display().to_string(),
            num_states: model.num_states(),
            explored: r.explored.len(),
            iterations: r
                .iterations
                .iter()
                .map(|it| IterationEntry {
                    iteration: it.iteration,
                    explored: it.explored,
                    lower: it.lower,
                    upper: it.upper,
                    wall_ms: it.wall.as_secs_f64() * 1e3,
                })
                .collect(),
            lower: r.lower,
            upper: r.upper,
            epsilon: a.epsilon,
            time_bound: a.time_bound,
            objective,
            converged: r.converged,
            seed: r.seed,
            solver: SolverInfo {
                name: "discretization".into(),
                steps: r.solver_steps,
                apriori_bound: r.apriori_bound,
            },
            scheduler_path: None,
        };
        (doc, r.scheduler)
    };
    let mut doc = doc;
    if let Some(path) = &a.emit_scheduler {
        write_file(path, &scheduler.to_json())?;
        doc.scheduler_path = Some(path.display().to_string());
    }
    emit(out, a.output.as_deref(), &to_json(&doc))?;
    Ok(if doc.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (family, model, path) = match a.family {
        Family::Erlang {
            k,
            r,
            fast_rate,
            fast_success,
            out,
        } => (
            "erlang",
            gen_erlang(ErlangParams {
                k,
                r,
                fast_rate,
                fast_success,
            })?,
            out,
        ),
        Family::Twochain { variant, out } => {
            let v = match variant {
                VariantArg::A => TwoChainVariant::A,
                VariantArg::B => TwoChainVariant::B,
            };
            ("twochain", gen_two_chain(v), out)
        }
        Family::Polling {
            j,
            k,
            goal,
            arrival_rate,
            service_rate,
            service_success,
            out,
        } => {
            let goal = match goal {
                GoalArg::All => PollingGoal::All,
                GoalArg::One => PollingGoal::One,
            };
            let p = PollingParams {
                stations: j,
                capacity: k,
                goal,
                arrival_rate,
                service_rate,
                service_success,
            };
            ("polling", gen_polling(p)?, out)
        }
    };
    write_file(&path, &serialize_model(&model))?;
    let summary = serde_json::json!({
        "family": family,
        "path": path.display().to_string(),
        "states": model.num_states(),
        "transitions": model.num_transitions(),
    });
    emit(out, None, &to_json(&summary))?;
    Ok(EXIT_OK)
}

fn cmd_greedy(a: GreedyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let model = read_model(&a.model)?;
    let se = a.solver_epsilon.unwrap_or(a.epsilon / 10.0);
    let opts = SolverOptions::new(se).with_step_cap(a.step_cap);
    let r = greedy_min_subset(&model, a.time_bound, a.epsilon, &opts)?;
    let doc = GreedyDocument {
        model: a.model.display().to_string(),
        kept: r.kept.iter().map(|s| s.0).collect(),
        removed: r.removed.iter().map(|s| s.0).collect(),
        final_gap: r.final_gap,
        order: r.removal_order.iter().map(|(s, _)| s.0).collect(),
        scores: r.removal_order.iter().map(|(_, d)| *d).collect(),
    };
    emit(out, a.output.as_deref(), &to_json(&doc))?;
    Ok(EXIT_OK)
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let model = read_model(&a.model)?;
    let text = std::fs::read_to_string(&a.scheduler)
        .map_err(|e| Failure(format!("cannot read {}: {e}", a.scheduler.display())))?;
    let sched = StepScheduler::from_json(&text)
        .map_err(|e| Failure(format!("{}: {e}", a.scheduler.display())))?;
    let opts = SolverOptions::new(a.solver_epsilon).with_step_cap(a.step_cap);
    let value = evaluate_scheduler(&model, &sched, a.time_bound, &opts)?;
    emit(out, None, &to_json(&serde_json::json!({ "value": value })))?;
    Ok(EXIT_OK)
}
