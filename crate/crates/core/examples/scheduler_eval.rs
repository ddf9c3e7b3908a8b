// Store the optimal step scheduler of one solve as JSON and measure it on a
// finer grid.

use std::error::Error;

use subspace_tbr::generators::{gen_two_chain, TwoChainVariant};
use subspace_tbr::{evaluate_scheduler, solve_tbr, Objective, SolverOptions, StepScheduler};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let model = gen_two_chain(TwoChainVariant::A);
    let horizon = 1.0;
    let out = solve_tbr(&model, horizon, Objective::Maximize, &SolverOptions::new(1e-2))?;
    let json = out.scheduler.to_json();
    println!("scheduler: {} change points, {} bytes of JSON", out.scheduler.num_entries(), json.len());

    let sched = StepScheduler::from_json(&json)?;
    let same = evaluate_scheduler(&model, &sched, horizon, &SolverOptions::new(1e-2))?;
    let fine = evaluate_scheduler(&model, &sched, horizon, &SolverOptions::new(2e-3))?;
    println!("optimum {:.5}; scheduler value {same:.5} on its grid, {fine:.5} on a finer one", out.value_at_initial);
    assert_eq!(same, out.value_at_initial);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
