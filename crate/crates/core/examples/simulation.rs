// Sample timed paths with reproducible streams and collect the states they
// visit.

use std::error::Error;

use subspace_tbr::generators::{gen_erlang, ErlangParams};
use subspace_tbr::{relevant_subset, sample_path, RngStream, SimScheduler};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let model = gen_erlang(ErlangParams::new(100, 10.0))?;
    let sched = SimScheduler::Uniform;

    let p = sample_path(&model, 2.0, &sched, RngStream::new(11, 0));
    println!("path of {} jumps ending in state {} after {:.3}", p.len(), p.last().0, p.total_time());
    assert_eq!(p, sample_path(&model, 2.0, &sched, RngStream::new(11, 0)));

    // the first sojourn is Exp(10) whatever action is taken
    let n = 20_000;
    let mean = (0..n)
        .map(|i| sample_path(&model, 100.0, &sched, RngStream::new(5, i)).sojourns[0])
        .sum::<f64>()
        / n as f64;
    println!("mean first sojourn {mean:.4} (expected 0.1)");

    let subset = relevant_subset(&model, 2.0, &sched, 500, 1);
    println!("500 runs visited {} of {} states", subset.len(), model.num_states());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
