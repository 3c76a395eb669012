//! Distances, diameter, path length and the distance profile of small trees.

use treefrag::trees::Tree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trees = [
        ("path_5", Tree::path(5)?),
        ("star_5", Tree::star(5)?),
        ("binary_7", Tree::from_parents(&[None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)])?),
    ];
    for (name, tree) in &trees {
        let s = tree.summary();
        let profile = tree.distance_profile()?;
        println!(
            "{name:9} n={} diam={} height={:?} tpl={:?} mean d={:.4} E[e^-d]={:.4}",
            s.n,
            s.diameter,
            s.height,
            s.total_path_length,
            s.mean_pairwise_distance,
            profile.laplace(1.0)
        );
    }
    let weighted = Tree::star(4)?.with_weights(vec![0.4, 0.2, 0.2, 0.2])?;
    println!("weighted star: mean d = {:.4}", weighted.mean_pairwise_distance());
    let mut out = Vec::new();
    trees[2].1.write_edge_list(&mut out)?;
    print!("{}", String::from_utf8(out)?);
    Ok(())
}
