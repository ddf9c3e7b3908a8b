// Compare the simulation guides on the two-chain model, where the uniform
// guide keeps sampling the chain that the optimal scheduler avoids.

use std::error::Error;

use subspace_tbr::generators::{gen_two_chain, two_chain_names, TwoChainVariant};
use subspace_tbr::{subspace_tbr, GuidePolicy, SubspaceConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let model = gen_two_chain(TwoChainVariant::B);
    let names = two_chain_names(TwoChainVariant::B);
    for guide in [GuidePolicy::Uniform, GuidePolicy::Optimal, GuidePolicy::Alternate] {
        let mut config = SubspaceConfig::new(0.05);
        config.solver_epsilon = 0.01;
        config.n_sim = 2;
        config.guide = guide;
        config.master_seed = 3;
        let res = subspace_tbr(&model, 3.0, &config)?;
        let explored: Vec<&str> = res.explored.iter().map(|s| names[s.0].as_str()).collect();
        println!(
            "{:>9}: {} iterations, [{:.4}, {:.4}], explored {}",
            guide.as_str(),
            res.iterations.len(),
            res.lower,
            res.upper,
            explored.join(" ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
