//! Mass partitions: normalization, the product metric and refinement.

use treefrag::masspart::{
    dust_sequence, find_refinement_witness, lp_distance, moments, normalize, product_metric, verify_refinement,
    MassPartition, Norm,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coarse = normalize(vec![0.6, 0.3, 0.1])?;
    let fine = normalize(vec![0.3, 0.3, 0.2, 0.1, 0.1])?;
    println!("coarse = {:?}", coarse.masses());
    println!("fine   = {:?}", fine.masses());
    println!("product metric   {:.6}", product_metric(&coarse, &fine));
    println!("l1 distance      {:.6}", lp_distance(&coarse, &fine, Norm::L1));
    println!("Q(coarse) = {:.4}, Q(fine) = {:.4}", moments(&coarse).q_value, moments(&fine).q_value);

    match find_refinement_witness(&fine, &coarse, 12)? {
        Some(w) => println!("fine refines coarse: {}", verify_refinement(&fine, &coarse, &w)),
        None => println!("no refinement witness"),
    }

    let unit = MassPartition::unit();
    for n in [1, 10, 100, 1000] {
        let dust = dust_sequence(n)?;
        println!("n = {n:4}: d(unit, dust_n) = {:.6}", product_metric(&unit, &dust));
    }
    Ok(())
}
