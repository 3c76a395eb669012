//! Poisson embedding of i.i.d. `p`-sequences: the first repeat index `R1`,
//! its Poisson time `T1`, the identity `R1 =d d(V1, V2) + 1` on p-trees, and
//! empirical checks of the tail bounds for `T1` and `d(V1, V2)`.

use std::io;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{p_tree, GeneratorError, RankedProbability};
use crate::seed::{replicate_rng, SimRng};
use crate::stats::{chi_square_two_sample, wilson_interval, TestResult, Z95};

#[derive(Debug, Error)]
pub enum PoissonError {
    #[error("at least {min} replicates are required, got {got}")]
    TooFewReplicates { min: usize, got: usize },
    #[error("x = {0} is below 8, outside the distance tail bound's range")]
    XTooSmall(f64),
    #[error("t = {t} is not in [0, 1/(2 p1)) = [0, {limit})")]
    TOutOfRange { t: f64, limit: f64 },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSample {
    /// Index of the first `Y_j` equal to an earlier one.
    pub r1: u64,
    /// Arrival time of atom `R1`, i.e. `inf{t : N(t) > R1}`.
    pub t1: f64,
    pub atoms_used: u64,
}

/// Walks the atoms `(S_j, U_j)` until the first repeated `Y_j`.
pub fn simulate_embedding<R: Rng + ?Sized>(p: &RankedProbability, rng: &mut R) -> EmbeddingSample {
    let mut seen = vec![false; p.len()];
    let mut s = 0.0;
    let mut j = 0u64;
    loop {
        let gap: f64 = Exp1.sample(rng);
        s += gap;
        let y = p.locate(rng.random::<f64>());
        if seen[y] {
            return EmbeddingSample {
                r1: j,
                t1: s,
                atoms_used: j + 1,
            };
        }
        seen[y] = true;
        j += 1;
    }
}

/// `d(V1, V2)` for one p-tree and two independent p-distributed vertices.
pub fn sample_tree_distance<R: Rng + ?Sized>(p: &RankedProbability, rng: &mut R) -> Result<usize, PoissonError> {
    let tree = p_tree(p, rng)?;
    let sampler = tree.vertex_sampler();
    let (v, w) = (sampler.sample(rng), sampler.sample(rng));
    Ok(tree.distance(v, w).expect("sampled vertices exist"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `r1_counts[k]` replicates with `R1 = k`.
    pub r1_counts: Vec<u64>,
    /// `distance_counts[k]` replicates with `d(V1, V2) + 1 = k`.
    pub distance_counts: Vec<u64>,
    pub test: TestResult,
}

fn bump(counts: &mut Vec<u64>, k: usize) {
    if counts.len() <= k {
        counts.resize(k + 1, 0);
    }
    counts[k] += 1;
}

fn par_samples<T: Send>(
    replicates: usize,
    seed: u64,
    tag: &str,
    f: impl Fn(&mut SimRng) -> Result<T, PoissonError> + Sync,
) -> Result<Vec<T>, PoissonError> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, tag, i)))
        .collect()
}

/// Two-sample chi-square between the laws of `R1` and `d(V1, V2) + 1`.
pub fn identity_test(p: &RankedProbability, replicates: usize, seed: u64) -> Result<IdentityReport, PoissonError> {
    if replicates < 1000 {
        return Err(PoissonError::TooFewReplicates {
            min: 1000,
            got: replicates,
        });
    }
    let r1 = par_samples(replicates, seed, "identity_r1", |rng| Ok(simulate_embedding(p, rng).r1))?;
    let d = par_samples(replicates, seed, "identity_distance", |rng| sample_tree_distance(p, rng))?;
    let (mut r1_counts, mut distance_counts) = (Vec::new(), Vec::new());
    for r in r1 {
        bump(&mut r1_counts, r as usize);
    }
    for x in d {
        bump(&mut distance_counts, x + 1);
    }
    let test = chi_square_two_sample(&r1_counts, &distance_counts, 20);
    Ok(IdentityReport {
        r1_counts,
        distance_counts,
        test,
    })
}

/// One row of a tail table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x_or_t: f64,
    pub empirical: f64,
    pub upper_conf: f64,
    pub paper_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub sigma: f64,
    pub p1: f64,
    pub replicates: usize,
    /// `P(T1 > t)` against `exp(-t² sigma² / 6)`.
    pub time_tail: Vec<TailRow>,
    /// `P(d(V1, V2) >= x / sigma)` against `exp(-x^(1/3) / (3 sigma)) + 6 exp(-x^(2/3) / 6)`.
    pub distance_tail: Vec<TailRow>,
    /// `P(at most one of U_0..U_floor(k) in I_1)` against its binomial closed
    /// form; `pass` means the closed form lies in the 99.9% interval.
    pub binomial: Vec<TailRow>,
    /// `P(N(t) >= 2t)` against `exp(-t/3)`.
    pub chernoff: Vec<TailRow>,
}

impl TailReport {
    /// Whether the two paper bounds dominate every upper confidence limit.
    pub fn bounds_hold(&self) -> bool {
        self.time_tail.iter().chain(&self.distance_tail).all(|r| r.pass)
    }
}

pub fn time_tail_bound(t: f64, sigma: f64) -> f64 {
    (-t * t * sigma * sigma / 6.0).exp()
}

pub fn distance_tail_bound(x: f64, sigma: f64) -> f64 {
    (-x.cbrt() / (3.0 * sigma)).exp() + 6.0 * (-x.powf(2.0 / 3.0) / 6.0).exp()
}

pub fn binomial_at_most_one(k: f64, p1: f64) -> f64 {
    let fk = k.floor();
    (1.0 - p1).powf(fk) * (1.0 - p1 + (fk + 1.0) * p1)
}

/// Five times `{0.5, 1, 1.5, 2, 3} / sigma_p`, shrunk if needed to stay
/// below `1 / (2 p1)`.
pub fn default_time_grid(p: &RankedProbability) -> Vec<f64> {
    let limit = 1.0 / (2.0 * p.p1());
    let top = (3.0 / p.sigma()).min(0.95 * limit);
    [0.5, 1.0, 1.5, 2.0, 3.0].iter().map(|f| f / 3.0 * top).collect()
}

pub const DEFAULT_X_GRID: [f64; 3] = [8.0, 10.0, 12.0];

/// `k` values `{0.5, 1, 2, 4, 8} / p1`.
pub fn default_k_grid(p: &RankedProbability) -> Vec<f64> {
    [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|f| (f / p.p1()).max(2.0)).collect()
}

pub const DEFAULT_CHERNOFF_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

fn tail_row(x: f64, hits: u64, trials: u64, bound: f64) -> TailRow {
    let (_, upper) = wilson_interval(hits, trials, Z95);
    TailRow {
        x_or_t: x,
        empirical: hits as f64 / trials as f64,
        upper_conf: upper,
        paper_bound: bound,
        pass: upper <= bound,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailGrids {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub chernoff: Vec<f64>,
}

impl TailGrids {
    pub fn defaults(p: &RankedProbability) -> Self {
        Self {
            t: default_time_grid(p),
            x: DEFAULT_X_GRID.to_vec(),
            k: default_k_grid(p),
            chernoff: DEFAULT_CHERNOFF_GRID.to_vec(),
        }
    }
}

pub fn tail_report(p: &RankedProbability, replicates: usize, seed: u64) -> Result<TailReport, PoissonError> {
    tail_report_with(p, replicates, seed, &TailGrids::defaults(p))
}

pub fn tail_report_with(
    p: &RankedProbability,
    replicates: usize,
    seed: u64,
    grids: &TailGrids,
) -> Result<TailReport, PoissonError> {
    if let Some(&x) = grids.x.iter().find(|&&x| !(x >= 8.0)) {
        return Err(PoissonError::XTooSmall(x));
    }
    let limit = 1.0 / (2.0 * p.p1());
    if let Some(&t) = grids.t.iter().find(|&&t| !(0.0..limit).contains(&t)) {
        return Err(PoissonError::TOutOfRange { t, limit });
    }
    let sigma = p.sigma();
    let trials = replicates as u64;

    let t1 = par_samples(replicates, seed, "tail_t1", |rng| Ok(simulate_embedding(p, rng).t1))?;
    let time_tail = grids
        .t
        .iter()
        .map(|&t| {
            let hits = t1.iter().filter(|&&s| s > t).count() as u64;
            tail_row(t, hits, trials, time_tail_bound(t, sigma))
        })
        .collect();

    let d = par_samples(replicates, seed, "tail_distance", |rng| sample_tree_distance(p, rng))?;
    let distance_tail = grids
        .x
        .iter()
        .map(|&x| {
            let hits = d.iter().filter(|&&v| v as f64 >= x / sigma).count() as u64;
            tail_row(x, hits, trials, distance_tail_bound(x, sigma))
        })
        .collect();

    let binomial = grids
        .k
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let draws = k.floor() as u64 + 1;
            let law = Binomial::new(draws, p.p1()).expect("valid binomial");
            let hits = par_samples(replicates, seed, &format!("tail_binomial_{i}"), |rng| Ok(law.sample(rng) <= 1))?
                .into_iter()
                .filter(|&b| b)
                .count() as u64;
            let exact = binomial_at_most_one(k, p.p1());
            let (lo, hi) = wilson_interval(hits, trials, 3.290_526_731_491_926);
            Ok(TailRow {
                x_or_t: k,
                empirical: hits as f64 / trials as f64,
                upper_conf: hi,
                paper_bound: exact,
                pass: lo <= exact && exact <= hi,
            })
        })
        .collect::<Result<_, PoissonError>>()?;

    let chernoff = grids
        .chernoff
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let law = Poisson::new(t).expect("positive mean");
            let hits = par_samples(replicates, seed, &format!("tail_chernoff_{i}"), |rng| Ok(law.sample(rng) >= 2.0 * t))?
                .into_iter()
                .filter(|&b| b)
                .count() as u64;
            Ok(tail_row(t, hits, trials, (-t / 3.0).exp()))
        })
        .collect::<Result<_, PoissonError>>()?;

    Ok(TailReport {
        sigma,
        p1: p.p1(),
        replicates,
        time_tail,
        distance_tail,
        binomial,
        chernoff,
    })
}

pub fn write_tail_csv<W: io::Write>(rows: &[TailRow], out: W) -> Result<(), PoissonError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_tail_csv<R: io::Read>(input: R) -> Result<Vec<TailRow>, PoissonError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_gof;
    use rand::SeedableRng;

    #[test]
    fn degenerate_and_two_point_laws() {
        let mut rng = SimRng::seed_from_u64(1);
        let one = RankedProbability::new(vec![1.0]).unwrap();
        for _ in 0..100 {
            let s = simulate_embedding(&one, &mut rng);
            assert_eq!((s.r1, s.atoms_used), (1, 2));
            assert!(s.t1 > 0.0);
        }
        let uni2 = RankedProbability::uniform(2).unwrap();
        let mut counts = [0u64; 2];
        for _ in 0..20_000 {
            counts[simulate_embedding(&uni2, &mut rng).r1 as usize - 1] += 1;
        }
        assert!(chi_square_gof(&counts, &[0.5, 0.5], 5.0).p_value > 0.01);
        let id = identity_test(&one, 1000, 2).unwrap();
        assert_eq!(id.r1_counts, vec![0, 1000]);
        assert_eq!(id.distance_counts, vec![0, 1000]);
        assert_eq!(id.test.p_value, 1.0);
        let id = identity_test(&uni2, 10_000, 3).unwrap();
        assert_eq!(id.r1_counts.len(), 3);
        assert!(id.test.p_value > 0.01);
    }

    #[test]
    fn birthday_law() {
        for n in [3usize, 7, 10] {
            let p = RankedProbability::uniform(n).unwrap();
            // P(R1 = k) = P(R1 > k-1) - P(R1 > k), P(R1 > k) = prod_{j<=k} (1 - j/n)
            let survival = |k: usize| (1..=k).map(|j| 1.0 - j as f64 / n as f64).product::<f64>();
            let probs: Vec<f64> = (1..=n).map(|k| survival(k - 1) - survival(k)).collect();
            let mut rng = SimRng::seed_from_u64(n as u64);
            let mut counts = vec![0u64; n];
            for _ in 0..50_000 {
                counts[simulate_embedding(&p, &mut rng).r1 as usize - 1] += 1;
            }
            assert!(chi_square_gof(&counts, &probs, 5.0).p_value > 0.01);
        }
    }

    #[test]
    fn identity_on_three_shapes() {
        for (i, p) in [
            RankedProbability::uniform(50).unwrap(),
            RankedProbability::geometric_truncated(50, 0.9).unwrap(),
            RankedProbability::one_heavy_atom(50, 0.3).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let r = identity_test(p, 5000, 100 + i as u64).unwrap();
            assert!(r.test.p_value > 0.01, "shape {i}: {:?}", r.test);
        }
    }

    #[test]
    fn time_tail_two_atoms_against_gamma_oracle() {
        let p = RankedProbability::uniform(2).unwrap();
        let grids = TailGrids {
            t: vec![0.9],
            x: vec![8.0],
            k: vec![2.0],
            chernoff: vec![1.0],
        };
        let r = tail_report_with(&p, 100_000, 4, &grids).unwrap();
        let row = r.time_tail[0];
        assert!((row.paper_bound - (-0.81f64 * 0.5 / 6.0).exp()).abs() < 1e-15);
        // R1 is 1 or 2 with probability 1/2; T1 is then Gamma(2) or Gamma(3)
        let e = (-0.9f64).exp();
        let exact = 0.5 * e * 1.9 + 0.5 * e * (1.0 + 0.9 + 0.405);
        let se = (exact * (1.0 - exact) / 1e5).sqrt();
        assert!((row.empirical - exact).abs() < 4.0 * se);
        assert!(row.pass);
        assert!(r.binomial[0].pass);
        assert!(r.chernoff[0].pass);
    }

    #[test]
    fn grid_validation() {
        let p = RankedProbability::uniform(10).unwrap();
        let mut grids = TailGrids::defaults(&p);
        grids.x = vec![7.0];
        assert!(matches!(tail_report_with(&p, 100, 1, &grids), Err(PoissonError::XTooSmall(_))));
        let mut grids = TailGrids::defaults(&p);
        grids.t = vec![5.0];
        assert!(matches!(tail_report_with(&p, 100, 1, &grids), Err(PoissonError::TOutOfRange { .. })));
        assert!(default_time_grid(&p).iter().all(|&t| t < 5.0));
    }

    #[test]
    fn single_atom_distance_tail() {
        let p = RankedProbability::new(vec![1.0]).unwrap();
        let grids = TailGrids {
            t: vec![0.2],
            x: vec![8.0],
            k: vec![2.0],
            chernoff: vec![1.0],
        };
        let r = tail_report_with(&p, 1000, 5, &grids).unwrap();
        assert_eq!(r.distance_tail[0].empirical, 0.0);
        assert!(r.bounds_hold());
    }

    #[test]
    fn tail_csv_round_trip() {
        let rows = vec![tail_row(8.0, 3, 100, 0.5), tail_row(10.0, 0, 100, 0.25)];
        let mut buf = Vec::new();
        write_tail_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x_or_t,empirical,upper_conf,paper_bound,pass\n"));
        assert_eq!(read_tail_csv(&buf[..]).unwrap(), rows);
    }
}
