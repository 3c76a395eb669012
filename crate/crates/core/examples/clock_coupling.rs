//! Uniform clocks on `[0, t_n]` against exponential clocks of rate `1/t_n`
//! under the monotone coupling: same split order, time-changed split times.

use treefrag::fragmenter::{couple_clocks, draw_clocks, fragment, time_change, ClockLaw, Direction};
use treefrag::generators::cayley;
use treefrag::seed::replicate_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 400;
    let t_n = (n as f64).sqrt();
    let mut rng = replicate_rng(5, "clock_coupling", 0);
    let tree = cayley(n, &mut rng)?;
    let uniform = draw_clocks(&tree, ClockLaw::Uniform { t_max: t_n }, &mut rng)?;
    let expo = couple_clocks(&uniform)?;
    let a = fragment(&tree, &uniform)?;
    let b = fragment(&tree, &expo)?;
    println!("same deletion order: {}", uniform.deletion_order() == expo.deletion_order());
    println!("same split sequence: {}", a.same_split_sequence(&b));
    for t in [0.5, 2.0, 8.0, 15.0] {
        let s = time_change(t, t_n, Direction::B)?;
        println!(
            "uniform t = {t:5.2} -> exponential s = {s:7.3}: Q {:.5} vs {:.5}",
            a.q_at(t)?,
            b.q_at(s)?
        );
    }
    Ok(())
}
