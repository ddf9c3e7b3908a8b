// Bound a long Erlang chain while exploring only the part that matters
// within the horizon.

use std::error::Error;

use subspace_tbr::generators::{gen_erlang, ErlangParams};
use subspace_tbr::{subspace_tbr, SubspaceConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let model = gen_erlang(ErlangParams::new(5_000, 10.0))?;
    let mut config = SubspaceConfig::new(0.01);
    config.n_sim = 200;
    config.master_seed = 7;

    let res = subspace_tbr(&model, 5.0, &config)?;
    for it in &res.iterations {
        println!(
            "iteration {}: |S'|={} [{:.5}, {:.5}] in {:?}",
            it.iteration, it.explored, it.lower, it.upper, it.wall
        );
    }
    let frac = res.explored.len() as f64 / model.num_states() as f64;
    println!(
        "converged={} explored {} of {} states ({:.2}%)",
        res.converged,
        res.explored.len(),
        model.num_states(),
        100.0 * frac
    );
    assert!(res.converged && frac < 0.1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
