//! `E[Q(tau) - Q(tau + h)]` against `1 - E Q(h)` for three stopping times on
//! Cayley trees with rate `n^(-1/2)` clocks.

use treefrag::fragmenter::{ClockLaw, StoppingTimeSpec};
use treefrag::tightlab::{decrement_probe, TreeFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 500;
    let inst = TreeFamily::Cayley.at_size(n)?;
    let law = ClockLaw::Exponential { rate: 1.0 / (n as f64).sqrt() };
    let hs = [0.2, 0.1, 0.05, 0.025];
    for stopping in [
        StoppingTimeSpec::Constant(0.5),
        StoppingTimeSpec::FirstSplit,
        StoppingTimeSpec::FirstMaxBelow(0.5),
    ] {
        println!("{stopping:?}");
        for row in decrement_probe(&inst, law, stopping, &hs, 5000, 17)? {
            println!(
                "  h={:<6} lhs={:.5}±{:.5} rhs={:.5}±{:.5} never={} holds={}",
                row.h,
                row.lhs.estimate,
                row.lhs.standard_error,
                row.rhs.estimate,
                row.rhs.standard_error,
                row.never,
                row.holds(3.0)
            );
        }
    }
    Ok(())
}
