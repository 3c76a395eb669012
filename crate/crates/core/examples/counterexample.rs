//! Monotone coordinates converging in the sup norm of each coordinate while
//! the pair stays far apart in the product J1 sense.

use treefrag::cadlag::counterexample_pair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>4} {:>4} {:>10} {:>10}", "n", "m", "sup|g-g'|", "1-n/m");
    for (n, m) in [(2, 4), (4, 8), (10, 20), (10, 100), (50, 100), (60, 62)] {
        let a = counterexample_pair(n)?;
        let b = counterexample_pair(m)?;
        let d = a.g.uniform_distance(&b.g)?;
        println!("{n:>4} {m:>4} {d:>10.6} {:>10.6}", 1.0 - n as f64 / m as f64);
    }
    let pair = counterexample_pair(8)?;
    println!("monotone hypothesis with M = 2: {}", pair.satisfies_monotone_hypothesis(2));
    Ok(())
}
