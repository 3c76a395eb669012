use proptest::prelude::*;
use rand::SeedableRng;

use treefrag::excursionlab::{brownian_excursion, containment_witness, excursion_masses};
use treefrag::fragmenter::{couple_clocks, draw_clocks, fragment, time_change, ClockLaw, Direction};
use treefrag::generators::{child_counts, cycle_lemma_rotate, is_lukasiewicz, plane_tree_from_word, prufer_decode};
use treefrag::masspart::verify_refinement;
use treefrag::seed::SimRng;
use treefrag::stats::wilson_interval;
use treefrag::tightlab::{exact_expected_q, trajectory_audit, uniform_grid};
use treefrag::trees::Tree;

fn prufer_tree() -> impl Strategy<Value = Tree> {
    (2usize..40).prop_flat_map(|n| {
        prop::collection::vec(0..n, n - 2).prop_map(move |word| Tree::from_edges(n, prufer_decode(n, &word)).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn distances_are_a_tree_metric(tree in prufer_tree(), a in 0usize..40, b in 0usize..40, c in 0usize..40) {
        let n = tree.n();
        let (a, b, c) = (a % n, b % n, c % n);
        let d = |x, y| tree.distance(x, y).unwrap();
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert!(d(a, c) <= d(a, b) + d(b, c));
        prop_assert!(d(a, b) <= tree.diameter());
        prop_assert!(tree.mean_pairwise_distance() <= tree.diameter() as f64);
        let profile = tree.distance_profile().unwrap();
        prop_assert!((profile.mean() - tree.mean_pairwise_distance()).abs() < 1e-9);
    }

    #[test]
    fn cycle_lemma_yields_a_plane_tree(balls in (1usize..30).prop_flat_map(|n| prop::collection::vec(0..n, n - 1).prop_map(move |b| (n, b)))) {
        let (n, balls) = balls;
        let mut word = vec![0u64; n];
        for b in balls {
            word[b] += 1;
        }
        let mut w = word.clone();
        cycle_lemma_rotate(&mut w);
        prop_assert!(is_lukasiewicz(&w));
        let tree = plane_tree_from_word(&w).unwrap();
        prop_assert_eq!(tree.n(), word.len());
        prop_assert_eq!(child_counts(&tree), w);
    }

    #[test]
    fn trajectory_audit_passes(tree in prufer_tree(), seed in any::<u64>(), uniform in any::<bool>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let law = if uniform { ClockLaw::Uniform { t_max: 3.0 } } else { ClockLaw::Exponential { rate: 1.0 } };
        let traj = fragment(&tree, &draw_clocks(&tree, law, &mut rng).unwrap()).unwrap();
        prop_assert_eq!(traj.events().len(), tree.n() - 1);
        let audit = trajectory_audit(&traj, &uniform_grid(4.0, 12), &[1, 2, 3]).unwrap();
        prop_assert!(audit.passed(), "{:?}", audit.violations);
        let (early, late, w) = traj.containment_witness(0.3, 1.7).unwrap();
        prop_assert!(verify_refinement(&late, &early, &w));
        prop_assert!(traj.q_at(f64::INFINITY).unwrap() <= traj.q_at(0.5).unwrap());
    }

    #[test]
    fn coupled_clocks_share_the_split_sequence(tree in prufer_tree(), seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let uniform = draw_clocks(&tree, ClockLaw::Uniform { t_max: 5.0 }, &mut rng).unwrap();
        let expo = couple_clocks(&uniform).unwrap();
        let a = fragment(&tree, &uniform).unwrap();
        let b = fragment(&tree, &expo).unwrap();
        prop_assert!(a.same_split_sequence(&b));
        for t in [0.5, 2.0, 4.5] {
            let s = time_change(t, 5.0, Direction::B).unwrap();
            prop_assert_eq!(a.state_at(t).unwrap(), b.state_at(s).unwrap());
        }
    }

    #[test]
    fn time_changes_are_inverse(r in 0.0f64..10.0, t_n in 0.5f64..100.0) {
        let t = r * t_n;
        let a = time_change(t, t_n, Direction::A).unwrap();
        prop_assert!(a < t_n);
        let back = time_change(a, t_n, Direction::B).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0));
    }

    #[test]
    fn exact_q_is_a_decreasing_probability(tree in prufer_tree(), t in 0.0f64..5.0, h in 0.0f64..2.0) {
        let q = exact_expected_q(&tree, 1.0, t).unwrap();
        let later = exact_expected_q(&tree, 1.0, t + h).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&q));
        prop_assert!(later <= q + 1e-12);
        prop_assert!(q >= 1.0 / tree.n() as f64 - 1e-12);
    }

    #[test]
    fn excursion_masses_refine_as_drift_grows(seed in any::<u64>(), t1 in 0.0f64..3.0, dt in 0.0f64..3.0) {
        let mut rng = SimRng::seed_from_u64(seed);
        let path = brownian_excursion(512, &mut rng).unwrap();
        let m = excursion_masses(&path, t1).unwrap();
        prop_assert!(m.total() <= 1.0 + 1e-12);
        let (early, late, w) = containment_witness(&path, t1, t1 + dt).unwrap();
        prop_assert_eq!(&early, &m);
        prop_assert!(verify_refinement(&late, &early, &w));
    }

    #[test]
    fn wilson_interval_brackets_the_proportion(trials in 1u64..10_000, frac in 0.0f64..=1.0) {
        let successes = (frac * trials as f64).floor() as u64;
        let (lo, hi) = wilson_interval(successes, trials, 1.96);
        let p = successes as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }
}
