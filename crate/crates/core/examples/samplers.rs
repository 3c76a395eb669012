//! One draw from each random tree family, with its summary statistics.

use treefrag::generators::{
    cayley, degree_sequence_tree, gw_conditioned, p_tree, stable_family, DegreeSequence, OffspringDistribution,
    RankedProbability,
};
use treefrag::seed::replicate_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 2000;
    let mut rng = replicate_rng(7, "samplers", 0);
    let stable = stable_family(1.5)?;
    let trees = [
        ("cayley", cayley(n, &mut rng)?),
        ("gw poisson", gw_conditioned(&OffspringDistribution::Poisson { mean: 1.0 }, n, &mut rng)?),
        ("gw stable 1.5", gw_conditioned(&stable.mu, n, &mut rng)?),
        (
            "degree sequence",
            degree_sequence_tree(
                &DegreeSequence::from_offspring_profile(&OffspringDistribution::Geometric { p: 0.5 }, n)?,
                &mut rng,
            )?,
        ),
        ("p-tree uniform", p_tree(&RankedProbability::uniform(n)?, &mut rng)?),
        ("p-tree geometric", p_tree(&RankedProbability::geometric_truncated(n, 0.999)?, &mut rng)?),
    ];
    for (name, tree) in &trees {
        let s = tree.summary();
        println!(
            "{name:16} n={:5} diam={:4} height={:?} mean d={:.2}",
            s.n, s.diameter, s.height, s.mean_pairwise_distance
        );
    }
    Ok(())
}
