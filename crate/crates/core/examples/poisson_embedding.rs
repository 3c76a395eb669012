//! Birthday-problem embedding of p-trees: first repeat index against the
//! distance between two random vertices, and the tail bounds.

use treefrag::generators::RankedProbability;
use treefrag::poissonlab::{identity_test, simulate_embedding, tail_report};
use treefrag::seed::replicate_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = RankedProbability::geometric_truncated(50, 0.9)?;
    let mut rng = replicate_rng(1, "poisson_embedding", 0);
    for _ in 0..3 {
        let s = simulate_embedding(&p, &mut rng);
        println!("R1={} T1={:.4} atoms used={}", s.r1, s.t1, s.atoms_used);
    }

    let id = identity_test(&p, 10_000, 2)?;
    println!(
        "R1 vs d(V1,V2)+1: chi2={:.2} dof={} p={:.3}",
        id.test.statistic, id.test.dof, id.test.p_value
    );

    let tails = tail_report(&RankedProbability::uniform(1000)?, 20_000, 3)?;
    println!("sigma={:.4} p1={:.4}", tails.sigma, tails.p1);
    for (name, rows) in [("time", &tails.time_tail), ("distance", &tails.distance_tail)] {
        for r in rows.iter() {
            println!(
                "{name:8} {:7.3} empirical={:.5} upper={:.5} bound={:.5} {}",
                r.x_or_t,
                r.empirical,
                r.upper_conf,
                r.paper_bound,
                if r.pass { "ok" } else { "VIOLATED" }
            );
        }
    }
    Ok(())
}
