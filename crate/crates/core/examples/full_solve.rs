// Solve a small Erlang model on the whole state space and compare with the
// Poisson tail of the slow branch.

use std::error::Error;

use subspace_tbr::generators::{gen_erlang, ErlangParams};
use subspace_tbr::{solve_tbr, Objective, SolverOptions};

fn erlang_cdf(stages: u32, rate: f64, t: f64) -> f64 {
    // 1 - sum_{n<stages} e^{-rt} (rt)^n / n!
    let x = rate * t;
    let mut term = (-x).exp();
    let mut sum = 0.0;
    for n in 0..stages {
        sum += term;
        term *= x / f64::from(n + 1);
    }
    1.0 - sum
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (k, r, horizon) = (5, 2.0, 3.0);
    let model = gen_erlang(ErlangParams::new(k, r))?;
    let opts = SolverOptions::new(1e-3);
    let out = solve_tbr(&model, horizon, Objective::Maximize, &opts)?;

    let slow = erlang_cdf(k as u32 + 1, r, horizon);
    println!("states={} steps={} bound={:.2e}", model.num_states(), out.num_steps, out.apriori_bound);
    println!("value in [{:.6}, {:.6}], slow branch alone {slow:.6}", out.lower(), out.upper());
    let first = out.scheduler.decision_at_step(model.initial(), out.num_steps);
    println!("decision with the full horizon left: {:?}", first.map(|l| l.as_str()));

    let min = solve_tbr(&model, horizon, Objective::Minimize, &opts)?;
    println!("minimum value in [{:.6}, {:.6}]", min.lower(), min.upper());
    assert!(min.lower() <= out.lower());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
