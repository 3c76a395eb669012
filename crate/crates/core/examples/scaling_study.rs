//! Diameter and typical distance divided by the natural scale across sizes.

use treefrag::generators::{stable_family, Normalization, OffspringDistribution};
use treefrag::tightlab::{relative_spread, scaling_study, PShape, TreeFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stable = stable_family(1.5)?;
    let families = [
        TreeFamily::Cayley,
        TreeFamily::Gw { mu: stable.mu, normalization: stable.normalization },
        TreeFamily::Gw {
            mu: OffspringDistribution::Poisson { mean: 1.0 },
            normalization: Normalization::Gaussian { sigma: 1.0 },
        },
        TreeFamily::DegreeProfile(OffspringDistribution::Geometric { p: 0.5 }),
        TreeFamily::PTree(PShape::Uniform),
    ];
    let sizes = [250, 500, 1000];
    for family in &families {
        let rows = scaling_study(family, &sizes, 100, 23)?;
        for r in &rows {
            println!(
                "{:7} n={:5} scale={:7.2} diam/scale={:.3} dist/scale={:.3}",
                r.family, r.n, r.scale, r.diameter_ratio, r.distance_ratio
            );
        }
        println!(
            "{:7} spread: diameter {:.3}, distance {:.3}",
            family.name(),
            relative_spread(rows.iter().map(|r| r.diameter_ratio)),
            relative_spread(rows.iter().map(|r| r.distance_ratio))
        );
    }
    Ok(())
}
