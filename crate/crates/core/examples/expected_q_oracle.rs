//! Exact `E[Q(t)]` on fixed trees from the distance profile, against Monte
//! Carlo, plus the first-order bound `1 - E Q(t) <= t E d(V1, V2)`.

use treefrag::fragmenter::ClockLaw;
use treefrag::tightlab::{exact_expected_q, mc_expected_q, sof3_report, FamilyInstance};
use treefrag::trees::Tree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trees = [("star_4", Tree::star(4)?), ("path_3", Tree::path(3)?), ("path_10", Tree::path(10)?)];
    for (name, tree) in trees {
        let inst = FamilyInstance::fixed(tree.clone());
        for t in [0.2, std::f64::consts::LN_2, 2.0] {
            let exact = exact_expected_q(&tree, 1.0, t)?;
            let mc = mc_expected_q(&inst, ClockLaw::Exponential { rate: 1.0 }, t, 20_000, 3)?;
            let bound = sof3_report(&tree, 1.0, t)?;
            println!(
                "{name:8} t={t:.3} exact={exact:.6} mc={:.6}±{:.6} 1-EQ={:.4} <= {:.4}: {}",
                mc.estimate, mc.standard_error, bound.lhs, bound.rhs, bound.holds
            );
        }
    }
    Ok(())
}
