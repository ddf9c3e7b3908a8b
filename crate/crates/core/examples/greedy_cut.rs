// Rank the states of a small model by how much cutting them costs, and cut
// as many as a budget allows.

use std::error::Error;

use subspace_tbr::generators::{gen_erlang, ErlangParams};
use subspace_tbr::{greedy_min_subset, SolverOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let model = gen_erlang(ErlangParams::new(20, 10.0))?;
    let opts = SolverOptions::new(1e-4);
    let res = greedy_min_subset(&model, 1.0, 0.01, &opts)?;
    for (s, score) in res.removal_order.iter().take(8) {
        println!("state {:>2}: score {score:.3e}", s.0);
    }
    println!(
        "removed {} states, kept {:?}, gap {:.3e}",
        res.removed.len(),
        res.kept.iter().map(|s| s.0).collect::<Vec<_>>(),
        res.final_gap
    );
    assert!(res.final_gap <= 0.01);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
