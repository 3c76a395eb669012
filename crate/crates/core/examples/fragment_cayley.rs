//! Fragments a Cayley tree with exponential edge clocks and audits the
//! trajectory.

use treefrag::fragmenter::{draw_clocks, fragment, ClockLaw};
use treefrag::generators::cayley;
use treefrag::masspart::verify_refinement;
use treefrag::seed::replicate_rng;
use treefrag::tightlab::{trajectory_audit, uniform_grid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1000;
    let mut rng = replicate_rng(11, "fragment_cayley", 0);
    let tree = cayley(n, &mut rng)?;
    let law = ClockLaw::Exponential { rate: 1.0 / (n as f64).sqrt() };
    let traj = fragment(&tree, &draw_clocks(&tree, law, &mut rng)?)?;

    println!("{} splits", traj.events().len());
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let state = traj.state_at(t)?;
        println!(
            "t = {t:3.1}: blocks={:4} largest={:.4} Q={:.4}",
            state.support(),
            state.get(0),
            traj.q_at(t)?
        );
    }
    let (early, late, witness) = traj.containment_witness(0.5, 2.0)?;
    println!(
        "state(2.0) refines state(0.5): {} ({} blocks into {})",
        verify_refinement(&late, &early, &witness),
        late.support(),
        early.support()
    );

    let audit = trajectory_audit(&traj, &uniform_grid(4.0, 40), &[1, 2, 5, 10])?;
    println!("audit: {} checks, {} violations", audit.checks, audit.violations.len());
    Ok(())
}
