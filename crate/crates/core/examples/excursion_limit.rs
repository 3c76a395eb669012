//! Excursion masses of `e(x) - t x` against largest component masses of
//! fragmented Cayley trees.

use treefrag::excursionlab::{brownian_excursion, excursion_masses, marginal_comparison};
use treefrag::seed::replicate_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = replicate_rng(4, "excursion_limit", 0);
    let path = brownian_excursion(4096, &mut rng)?;
    println!("excursion max {:.4}", path.max());
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let m = excursion_masses(&path, t)?;
        println!("t={t:3.1}: blocks={:3} top={:?}", m.support(), &m.masses()[..m.support().min(3)]);
    }
    for n in [250, 1000] {
        let r = marginal_comparison(n, 1.0, 1000, 4096, 8)?;
        println!(
            "n={n:5}: mean largest {:.4} (tree) vs {:.4} (limit), KS={:.4} p={:.3}",
            r.discrete_mean, r.limit_mean, r.ks.statistic, r.ks.p_value
        );
    }
    Ok(())
}
