//! Mass partitions: decreasing sequences of nonnegative masses with finite
//! support, the metrics used to compare them, and the refinement order.
//!
//! A [`MassPartition`] stores only its nonzero entries. Every metric treats
//! the stored vector as the prefix of an infinite sequence padded with
//! zeros, so padding is never materialized.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for all mass comparisons.
pub const MASS_TOL: f64 = 1e-12;

/// Largest support accepted by [`find_refinement_witness`] by default.
pub const DEFAULT_MAX_SUPPORT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassError {
    #[error("mass at index {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("mass at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("dust sequence needs n >= 1")]
    EmptyDust,
    #[error("instance too large for exact search: support {support} exceeds {max}")]
    InstanceTooLarge { support: usize, max: usize },
}

/// A decreasing sequence `x_1 >= x_2 >= ... >= 0` with finitely many
/// nonzero terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassPartition {
    masses: Vec<f64>,
}

impl TryFrom<Vec<f64>> for MassPartition {
    type Error = MassError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        normalize(values)
    }
}

impl From<MassPartition> for Vec<f64> {
    fn from(p: MassPartition) -> Self {
        p.masses
    }
}

/// Sorts `values` into decreasing order and drops zeros.
pub fn normalize(values: impl Into<Vec<f64>>) -> Result<MassPartition, MassError> {
    let mut masses = values.into();
    for (index, &value) in masses.iter().enumerate() {
        if !value.is_finite() {
            return Err(MassError::NonFinite { index });
        }
        if value < 0.0 {
            return Err(MassError::Negative { index, value });
        }
    }
    masses.sort_unstable_by(|a, b| b.total_cmp(a));
    while masses.last() == Some(&0.0) {
        masses.pop();
    }
    Ok(MassPartition { masses })
}

impl MassPartition {
    /// The all-zero sequence.
    pub fn empty() -> Self {
        Self::default()
    }

    /// The single block `(1)`.
    pub fn unit() -> Self {
        Self { masses: vec![1.0] }
    }

    /// Wraps masses already known to be decreasing and positive.
    pub(crate) fn from_sorted_unchecked(masses: Vec<f64>) -> Self {
        debug_assert!(masses.windows(2).all(|w| w[0] >= w[1]));
        debug_assert!(masses.iter().all(|&m| m > 0.0));
        Self { masses }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Number of nonzero entries.
    pub fn support(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// The `i`-th mass (0-based), zero beyond the support.
    pub fn get(&self, i: usize) -> f64 {
        self.masses.get(i).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Sum of the `k` largest masses.
    pub fn top_sum(&self, k: usize) -> f64 {
        self.masses.iter().take(k).sum()
    }

    /// CSV header `m1,...,mK`.
    pub fn csv_header(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("m{i}")).collect()
    }

    /// The first `k` masses, zero padded, for a CSV row.
    pub fn csv_row(&self, k: usize) -> Vec<f64> {
        (0..k).map(|i| self.get(i)).collect()
    }
}

impl fmt::Display for MassPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.masses.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

/// `sum_i 2^{-i} min(|a_i - b_i|, 1)`, with indices starting at 1.
pub fn product_metric(a: &MassPartition, b: &MassPartition) -> f64 {
    let len = a.support().max(b.support());
    let mut weight = 1.0;
    let mut acc = 0.0;
    for i in 0..len {
        weight *= 0.5;
        acc += weight * (a.get(i) - b.get(i)).abs().min(1.0);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// ℓᵖ distance of the zero-padded difference.
pub fn lp_distance(a: &MassPartition, b: &MassPartition, p: Norm) -> f64 {
    let len = a.support().max(b.support());
    let diffs = (0..len).map(|i| (a.get(i) - b.get(i)).abs());
    match p {
        Norm::L1 => diffs.sum(),
        Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        Norm::Inf => diffs.fold(0.0, f64::max),
    }
}

/// Which of the nested subspaces a partition lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    /// Total mass one.
    S1,
    /// Total mass at most one.
    SLe1,
    /// Finite total mass.
    SFin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub total_mass: f64,
    pub q_value: f64,
    pub space_tag: SpaceTag,
}

pub fn moments(a: &MassPartition) -> Moments {
    moments_with_tol(a, MASS_TOL)
}

pub fn moments_with_tol(a: &MassPartition, tol: f64) -> Moments {
    let total_mass = a.total();
    let q_value = a.masses.iter().map(|m| m * m).sum();
    let space_tag = if (total_mass - 1.0).abs() <= tol {
        SpaceTag::S1
    } else if total_mass <= 1.0 + tol {
        SpaceTag::SLe1
    } else {
        SpaceTag::SFin
    };
    Moments {
        total_mass,
        q_value,
        space_tag,
    }
}

/// Maps each block of the finer partition (0-based index) to the block of
/// the coarser partition it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementWitness {
    pub assignment: Vec<usize>,
}

impl RefinementWitness {
    pub fn new(assignment: Vec<usize>) -> Self {
        Self { assignment }
    }
}

/// Checks that every fiber of `w` carries at most the mass of its target.
///
/// Targets beyond the support of `x` have mass zero, so they may only
/// receive zero mass. A witness that is not total on the support of `y`
/// is rejected.
pub fn verify_refinement(y: &MassPartition, x: &MassPartition, w: &RefinementWitness) -> bool {
    if w.assignment.len() != y.support() {
        return false;
    }
    let mut fibers = vec![0.0; x.support()];
    for (j, &i) in w.assignment.iter().enumerate() {
        match fibers.get_mut(i) {
            Some(slot) => *slot += y.masses[j],
            // stored masses are positive, so this fiber is nonzero
            None => return false,
        }
    }
    fibers
        .iter()
        .zip(&x.masses)
        .all(|(&sum, &cap)| sum <= cap + MASS_TOL)
}

/// Exhaustive search for a witness of `y ≼ x`.
///
/// Blocks of `y` are placed largest first; targets with identical remaining
/// capacity are tried once per level. Declines when `y` has more than
/// `max_support` blocks.
pub fn find_refinement_witness(
    y: &MassPartition,
    x: &MassPartition,
    max_support: usize,
) -> Result<Option<RefinementWitness>, MassError> {
    if y.support() > max_support {
        return Err(MassError::InstanceTooLarge {
            support: y.support(),
            max: max_support,
        });
    }
    if y.is_empty() {
        return Ok(Some(RefinementWitness::new(Vec::new())));
    }
    if x.is_empty() || y.total() > x.total() + MASS_TOL * x.support() as f64 {
        return Ok(None);
    }
    let mut search = WitnessSearch {
        items: &y.masses,
        caps: &x.masses,
        fibers: vec![0.0; x.support()],
        assignment: vec![0; y.support()],
    };
    Ok(search
        .place(0)
        .then(|| RefinementWitness::new(search.assignment)))
}

struct WitnessSearch<'a> {
    items: &'a [f64],
    caps: &'a [f64],
    fibers: Vec<f64>,
    assignment: Vec<usize>,
}

impl WitnessSearch<'_> {
    fn place(&mut self, j: usize) -> bool {
        if j == self.items.len() {
            return true;
        }
        let item = self.items[j];
        let mut tried: Vec<f64> = Vec::new();
        for i in 0..self.caps.len() {
            let slack = self.caps[i] - self.fibers[i];
            if self.fibers[i] + item > self.caps[i] + MASS_TOL {
                continue;
            }
            if tried.contains(&slack) {
                continue;
            }
            tried.push(slack);
            self.fibers[i] += item;
            self.assignment[j] = i;
            if self.place(j + 1) {
                return true;
            }
            self.fibers[i] -= item;
        }
        false
    }
}

/// `(1/n, ..., 1/n)` with `n` entries: in S1, but tends to zero in the
/// product metric while staying at ℓ¹ distance one from it.
pub fn dust_sequence(n: usize) -> Result<MassPartition, MassError> {
    if n == 0 {
        return Err(MassError::EmptyDust);
    }
    Ok(MassPartition {
        masses: vec![1.0 / n as f64; n],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mp(v: &[f64]) -> MassPartition {
        normalize(v.to_vec()).unwrap()
    }

    /// Tries every map from y's blocks into x's blocks.
    fn brute_force_exists(y: &MassPartition, x: &MassPartition) -> bool {
        let (ny, nx) = (y.support(), x.support());
        if ny == 0 {
            return true;
        }
        if nx == 0 {
            return false;
        }
        let total = nx.pow(ny as u32);
        (0..total).any(|mut code| {
            let mut fibers = vec![0.0; nx];
            for j in 0..ny {
                fibers[code % nx] += y.get(j);
                code /= nx;
            }
            fibers
                .iter()
                .enumerate()
                .all(|(i, &s)| s <= x.get(i) + MASS_TOL)
        })
    }

    #[test]
    fn normalize_sorts_and_trims() {
        assert_eq!(mp(&[0.2, 0.5, 0.0, 0.3]).masses(), &[0.5, 0.3, 0.2]);
        assert!(mp(&[]).is_empty());
        assert_eq!(mp(&[1.0]).masses(), &[1.0]);
        let once = mp(&[0.1, 0.0, 0.7]);
        assert_eq!(normalize(once.masses().to_vec()).unwrap(), once);
    }

    #[test]
    fn normalize_rejects_bad_values() {
        assert_eq!(
            normalize(vec![0.1, -0.2]),
            Err(MassError::Negative {
                index: 1,
                value: -0.2
            })
        );
        assert_eq!(
            normalize(vec![f64::NAN]),
            Err(MassError::NonFinite { index: 0 })
        );
        assert_eq!(
            normalize(vec![0.0, f64::INFINITY]),
            Err(MassError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn product_metric_examples() {
        assert_eq!(product_metric(&mp(&[1.0]), &MassPartition::empty()), 0.5);
        let d4 = dust_sequence(4).unwrap();
        assert_eq!(product_metric(&d4, &MassPartition::empty()), 15.0 / 64.0);
        assert_eq!(product_metric(&d4, &d4), 0.0);
    }

    #[test]
    fn lp_examples() {
        for n in [1, 2, 7, 100, 1000] {
            let d = dust_sequence(n).unwrap();
            let l1 = lp_distance(&d, &MassPartition::empty(), Norm::L1);
            assert!((l1 - 1.0).abs() < 1e-12);
        }
        assert_eq!(lp_distance(&mp(&[0.5, 0.5]), &mp(&[1.0]), Norm::Inf), 0.5);
        assert_eq!(lp_distance(&mp(&[0.6, 0.4]), &mp(&[0.6, 0.4]), Norm::L2), 0.0);
    }

    #[test]
    fn moments_examples() {
        let m = moments(&mp(&[1.0]));
        assert_eq!((m.total_mass, m.q_value, m.space_tag), (1.0, 1.0, SpaceTag::S1));
        let m = moments(&mp(&[0.5, 1.0 / 3.0]));
        assert!((m.total_mass - 5.0 / 6.0).abs() < 1e-15);
        assert!((m.q_value - 13.0 / 36.0).abs() < 1e-15);
        assert_eq!(m.space_tag, SpaceTag::SLe1);
        let m = moments(&dust_sequence(4).unwrap());
        assert_eq!((m.total_mass, m.q_value, m.space_tag), (1.0, 0.25, SpaceTag::S1));
        assert_eq!(moments(&mp(&[1.5, 0.5])).space_tag, SpaceTag::SFin);
    }

    #[test]
    fn refinement_examples() {
        let w = RefinementWitness::new(vec![0, 0, 0]);
        assert!(verify_refinement(&mp(&[0.5, 0.3, 0.2]), &mp(&[1.0]), &w));
        let w = RefinementWitness::new(vec![0, 1]);
        assert!(!verify_refinement(&mp(&[0.6, 0.5]), &mp(&[1.0, 0.1]), &w));
        // mass may disappear
        let w = RefinementWitness::new(vec![0]);
        assert!(verify_refinement(&mp(&[0.4]), &mp(&[1.0]), &w));
        // a target outside the support has mass zero
        let w = RefinementWitness::new(vec![1]);
        assert!(!verify_refinement(&mp(&[0.4]), &mp(&[1.0]), &w));
        // not total
        assert!(!verify_refinement(
            &mp(&[0.4, 0.1]),
            &mp(&[1.0]),
            &RefinementWitness::new(vec![0])
        ));
    }

    #[test]
    fn witness_search_examples() {
        let (y, x) = (mp(&[0.6, 0.5]), mp(&[1.0, 0.1]));
        assert!(!brute_force_exists(&y, &x));
        assert_eq!(find_refinement_witness(&y, &x, 12).unwrap(), None);

        let (y, x) = (mp(&[0.5, 0.5]), mp(&[1.0]));
        let w = find_refinement_witness(&y, &x, 12).unwrap().unwrap();
        assert_eq!(w.assignment, vec![0, 0]);

        let (y, x) = (mp(&[0.5, 0.4, 0.1]), mp(&[0.6, 0.5]));
        assert!(brute_force_exists(&y, &x));
        let w = find_refinement_witness(&y, &x, 12).unwrap().unwrap();
        assert!(verify_refinement(&y, &x, &w));
    }

    #[test]
    fn witness_search_declines_large_instances() {
        let y = dust_sequence(13).unwrap();
        assert_eq!(
            find_refinement_witness(&y, &MassPartition::unit(), DEFAULT_MAX_SUPPORT),
            Err(MassError::InstanceTooLarge {
                support: 13,
                max: 12
            })
        );
    }

    #[test]
    fn dust_collapse() {
        assert_eq!(dust_sequence(1).unwrap().masses(), &[1.0]);
        assert_eq!(dust_sequence(0), Err(MassError::EmptyDust));
        let mut prev = f64::INFINITY;
        for n in 1..=200 {
            let d = dust_sequence(n).unwrap();
            let pm = product_metric(&d, &MassPartition::empty());
            assert!(pm < prev);
            assert!(pm <= 2.0 / n as f64);
            prev = pm;
        }
    }

    #[test]
    fn json_is_array_of_masses() {
        let p = mp(&[0.25, 0.75]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.75,0.25]");
        let back: MassPartition = serde_json::from_str("[0.25,0.75,0.0]").unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<MassPartition>("[-1.0]").is_err());
    }

    fn sub_probability() -> impl Strategy<Value = MassPartition> {
        prop::collection::vec(0.0f64..1.0, 0..10).prop_map(|v| {
            let s: f64 = v.iter().sum();
            let scale = if s > 1.0 { s } else { 1.0 };
            normalize(v.into_iter().map(|x| x / scale).collect::<Vec<_>>()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_comparisons(a in sub_probability(), b in sub_probability()) {
            let l1 = lp_distance(&a, &b, Norm::L1);
            let l2 = lp_distance(&a, &b, Norm::L2);
            let linf = lp_distance(&a, &b, Norm::Inf);
            prop_assert!(l2 <= l1 + 1e-12);
            let pm = product_metric(&a, &b);
            for k in 0..12 {
                prop_assert!(pm <= linf + 0.5f64.powi(k) + 1e-12);
            }
            prop_assert!((0.0..=1.0).contains(&pm));
            prop_assert_eq!(product_metric(&a, &b), product_metric(&b, &a));
        }

        #[test]
        fn witness_search_sound_and_complete(
            y in prop::collection::vec(0.0f64..0.6, 0..6),
            x in prop::collection::vec(0.0f64..1.0, 0..4),
        ) {
            let (y, x) = (normalize(y).unwrap(), normalize(x).unwrap());
            let found = find_refinement_witness(&y, &x, DEFAULT_MAX_SUPPORT).unwrap();
            prop_assert_eq!(found.is_some(), brute_force_exists(&y, &x));
            if let Some(w) = found {
                prop_assert!(verify_refinement(&y, &x, &w));
                prop_assert!(moments(&y).total_mass <= moments(&x).total_mass + 1e-12);
            }
        }
    }
}
