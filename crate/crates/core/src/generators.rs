//! Random tree samplers: uniform Cayley trees, size-conditioned Galton-Watson
//! trees, uniform plane trees with a prescribed degree sequence, and p-trees.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson, Zeta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trees::{Tree, TreeError};

pub const DEFAULT_RETRY_BUDGET: u64 = 1_000_000;
pub const P_TREE_STEP_CAP: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid offspring law: {0}")]
    Offspring(String),
    #[error("offspring law must be critical (mean {0})")]
    NotCritical(f64),
    #[error("no sample with {n} vertices after {attempts} attempts")]
    RetryBudget { n: usize, attempts: u64 },
    #[error("degree sequence violates sum N(i) = 1 + sum i N(i): {nodes} vs {expected}")]
    InfeasibleDegrees { nodes: u64, expected: u64 },
    #[error("invalid probability vector: {0}")]
    Probability(String),
    #[error("alpha must lie in (1, 2], got {0}")]
    Alpha(f64),
    #[error("tree size must be at least 1")]
    ZeroSize,
    #[error("birthday construction exceeded {0} steps")]
    StepCap(u64),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Offspring law on `{0, 1, 2, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffspringDistribution {
    /// `probs[k] = mu(k)`.
    Table { probs: Vec<f64> },
    Poisson { mean: f64 },
    /// `mu(k) = p (1 - p)^k`.
    Geometric { p: f64 },
    /// `mu(k) = k^(-1-alpha) / zeta(alpha)` for `k >= 1`.
    Stable { alpha: f64 },
}

impl OffspringDistribution {
    pub fn table(probs: Vec<f64>) -> Result<Self, GeneratorError> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(GeneratorError::Offspring("entries must be nonnegative reals".into()));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(GeneratorError::Offspring("entries must sum to 1".into()));
        }
        Ok(Self::Table { probs })
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self {
            Self::Table { probs } => probs.get(k as usize).copied().unwrap_or(0.0),
            Self::Poisson { mean } => {
                let ln = k as f64 * mean.ln() - mean - ln_factorial(k);
                ln.exp()
            }
            Self::Geometric { p } => p * (1.0 - p).powi(k as i32),
            Self::Stable { alpha } => {
                if k == 0 {
                    1.0 - zeta(1.0 + alpha) / zeta(*alpha)
                } else {
                    (k as f64).powf(-1.0 - alpha) / zeta(*alpha)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Table { probs } => probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
            Self::Poisson { mean } => *mean,
            Self::Geometric { p } => (1.0 - p) / p,
            Self::Stable { .. } => 1.0,
        }
    }

    /// Infinite for stable laws with `alpha < 2`.
    pub fn variance(&self) -> f64 {
        match self {
            Self::Table { probs } => {
                let m = self.mean();
                probs
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (k as f64 - m).powi(2) * p)
                    .sum()
            }
            Self::Poisson { mean } => *mean,
            Self::Geometric { p } => (1.0 - p) / (p * p),
            Self::Stable { .. } => f64::INFINITY,
        }
    }

    pub fn is_critical(&self) -> bool {
        (self.mean() - 1.0).abs() <= 1e-9
    }

    /// Checks the standing assumptions for size conditioning: critical,
    /// `mu(0) > 0` and `mu(0) + mu(1) < 1`.
    pub fn check_conditionable(&self) -> Result<(), GeneratorError> {
        match self {
            Self::Poisson { mean } if !(mean.is_finite() && *mean > 0.0) => {
                return Err(GeneratorError::Offspring(format!("Poisson mean {mean}")))
            }
            Self::Geometric { p } if !(*p > 0.0 && *p < 1.0) => {
                return Err(GeneratorError::Offspring(format!("geometric p {p}")))
            }
            Self::Stable { alpha } if !(*alpha > 1.0 && *alpha <= 2.0) => {
                return Err(GeneratorError::Alpha(*alpha))
            }
            _ => {}
        }
        if !self.is_critical() {
            return Err(GeneratorError::NotCritical(self.mean()));
        }
        let (p0, p1) = (self.pmf(0), self.pmf(1));
        if p0 <= 0.0 || p0 + p1 >= 1.0 {
            return Err(GeneratorError::Offspring(format!(
                "need mu(0) > 0 and mu(0) + mu(1) < 1, got {p0}, {p1}"
            )));
        }
        Ok(())
    }

    pub fn sampler(&self) -> OffspringSampler {
        match self {
            Self::Table { probs } => {
                let mut acc = 0.0;
                OffspringSampler::Table(
                    probs
                        .iter()
                        .map(|p| {
                            acc += p;
                            acc
                        })
                        .collect(),
                )
            }
            Self::Poisson { mean } => OffspringSampler::Poisson(Poisson::new(*mean).expect("mean > 0")),
            Self::Geometric { p } => OffspringSampler::Geometric(Geometric::new(*p).expect("p in (0,1]")),
            Self::Stable { alpha } => OffspringSampler::Stable {
                p0: self.pmf(0),
                tail: Zeta::new(1.0 + alpha).expect("alpha > 0"),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub enum OffspringSampler {
    Table(Vec<f64>),
    Poisson(Poisson<f64>),
    Geometric(Geometric),
    Stable { p0: f64, tail: Zeta<f64> },
}

impl OffspringSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Table(cum) => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u64
            }
            Self::Poisson(d) => d.sample(rng) as u64,
            Self::Geometric(d) => d.sample(rng),
            Self::Stable { p0, tail } => {
                if rng.random::<f64>() < *p0 {
                    0
                } else {
                    tail.sample(rng).min(u64::MAX as f64) as u64
                }
            }
        }
    }
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Riemann zeta for real `s > 1`, by Euler-Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    const N: usize = 12;
    // B_2j / (2j)!
    const COEFFS: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
    ];
    let nf = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let mut sum = head + nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // rising factorial s (s+1) ... (s + 2j - 2) times N^(-s-2j+1)
    let mut rising = s;
    let mut power = nf.powf(-s - 1.0);
    for (j, c) in COEFFS.iter().enumerate() {
        sum += c * rising * power;
        let a = s + (2 * j + 1) as f64;
        rising *= a * (a + 1.0);
        power /= nf * nf;
    }
    sum
}

/// Normalizing sequence `B_n` for the stable domain of attraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// `sigma * sqrt(n)`.
    Gaussian { sigma: f64 },
    /// `kappa * n^(1/alpha)`.
    Stable { alpha: f64, kappa: f64 },
}

impl Normalization {
    pub fn b(&self, n: f64) -> f64 {
        match *self {
            Self::Gaussian { sigma } => sigma * n.sqrt(),
            Self::Stable { alpha, kappa } => kappa * n.powf(1.0 / alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableFamily {
    pub alpha: f64,
    pub mu: OffspringDistribution,
    pub normalization: Normalization,
}

/// The offspring law and normalization for index `alpha`: Poisson(1) with
/// `B_n = sqrt(n)` at `alpha = 2`, else the zeta-type law with `kappa = 1`.
pub fn stable_family(alpha: f64) -> Result<StableFamily, GeneratorError> {
    stable_family_with(alpha, OffspringDistribution::Poisson { mean: 1.0 }, 1.0)
}

/// As [`stable_family`], with the finite-variance law used at `alpha = 2`
/// and the calibration constant `kappa` used below 2.
pub fn stable_family_with(
    alpha: f64,
    finite_variance: OffspringDistribution,
    kappa: f64,
) -> Result<StableFamily, GeneratorError> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(GeneratorError::Alpha(alpha));
    }
    if alpha == 2.0 {
        finite_variance.check_conditionable()?;
        let sigma = finite_variance.variance().sqrt();
        return Ok(StableFamily {
            alpha,
            mu: finite_variance,
            normalization: Normalization::Gaussian { sigma },
        });
    }
    Ok(StableFamily {
        alpha,
        mu: OffspringDistribution::Stable { alpha },
        normalization: Normalization::Stable { alpha, kappa },
    })
}

/// Uniform labelled tree on `0..n`, decoded from a uniform Prüfer word and
/// rooted at a uniform vertex.
pub fn cayley<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Tree, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::ZeroSize);
    }
    let root = rng.random_range(0..n);
    if n == 1 {
        return Ok(Tree::single().with_root(0)?);
    }
    let word: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    Ok(Tree::from_edges(n, prufer_decode(n, &word))?.with_root(root)?)
}

/// Linear-time Prüfer decoding.
pub fn prufer_decode(n: usize, word: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(word.len() + 2, n);
    let mut degree = vec![1usize; n];
    for &v in word {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = (0..n).find(|&v| degree[v] == 1).unwrap();
    let mut leaf = ptr;
    for &v in word {
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 && v < ptr {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n - 1));
    edges
}

/// Rotates a degree word with `sum = len - 1` so that its Łukasiewicz path
/// `sum (d_i - 1)` stays nonnegative until the last step.
pub fn cycle_lemma_rotate(word: &mut [u64]) {
    let mut s: i64 = 0;
    let mut min = i64::MAX;
    let mut start = 0;
    for (i, &d) in word.iter().enumerate() {
        s += d as i64 - 1;
        if s < min {
            min = s;
            start = i + 1;
        }
    }
    word.rotate_left(start % word.len().max(1));
    assert!(is_lukasiewicz(word), "cycle lemma rotation failed");
}

/// Whether partial sums of `d_i - 1` are nonnegative before the last step
/// and equal -1 at the end.
pub fn is_lukasiewicz(word: &[u64]) -> bool {
    let mut s: i64 = 0;
    for (i, &d) in word.iter().enumerate() {
        s += d as i64 - 1;
        if s < 0 && i + 1 < word.len() {
            return false;
        }
    }
    s == -1
}

/// Decodes a Łukasiewicz word into a plane tree labelled in depth-first
/// order and rooted at 0.
pub fn plane_tree_from_word(word: &[u64]) -> Result<Tree, GeneratorError> {
    if word.is_empty() {
        return Err(GeneratorError::ZeroSize);
    }
    let mut parents = vec![None; word.len()];
    let mut stack: Vec<(usize, u64)> = Vec::new();
    for (v, &d) in word.iter().enumerate() {
        if v > 0 {
            let top = stack
                .last_mut()
                .ok_or_else(|| GeneratorError::Offspring("word is not a tree code".into()))?;
            parents[v] = Some(top.0);
            top.1 -= 1;
            if top.1 == 0 {
                stack.pop();
            }
        }
        if d > 0 {
            stack.push((v, d));
        }
    }
    if !stack.is_empty() {
        return Err(GeneratorError::Offspring("word is not a tree code".into()));
    }
    Ok(Tree::from_parents(&parents)?)
}

/// Child counts in label order of a depth-first labelled plane tree; this
/// recovers the Łukasiewicz word of trees built here.
pub fn child_counts(tree: &Tree) -> Vec<u64> {
    let root = tree.root().unwrap_or(0);
    (0..tree.n())
        .map(|v| tree.neighbors(v).len() as u64 - u64::from(v != root))
        .collect()
}

/// Galton-Watson tree with offspring law `mu` conditioned on `n` vertices.
pub fn gw_conditioned<R: Rng + ?Sized>(
    mu: &OffspringDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Tree, GeneratorError> {
    gw_conditioned_with_budget(mu, n, DEFAULT_RETRY_BUDGET, rng)
}

pub fn gw_conditioned_with_budget<R: Rng + ?Sized>(
    mu: &OffspringDistribution,
    n: usize,
    budget: u64,
    rng: &mut R,
) -> Result<Tree, GeneratorError> {
    mu.check_conditionable()?;
    if n == 0 {
        return Err(GeneratorError::ZeroSize);
    }
    let sampler = mu.sampler();
    let target = (n - 1) as u64;
    let mut word = vec![0u64; n];
    for _ in 0..budget {
        let mut sum = 0u64;
        let mut ok = true;
        for slot in word.iter_mut() {
            *slot = sampler.sample(rng);
            sum = sum.saturating_add(*slot);
            if sum > target {
                ok = false;
                break;
            }
        }
        if ok && sum == target {
            word.shuffle(rng);
            cycle_lemma_rotate(&mut word);
            return plane_tree_from_word(&word);
        }
    }
    Err(GeneratorError::RetryBudget { n, attempts: budget })
}

/// Out-degree counts `N(i)` of a plane tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DegreeSequence {
    counts: Vec<u64>,
}

impl TryFrom<Vec<u64>> for DegreeSequence {
    type Error = GeneratorError;
    fn try_from(v: Vec<u64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<DegreeSequence> for Vec<u64> {
    fn from(s: DegreeSequence) -> Self {
        s.counts
    }
}

impl DegreeSequence {
    /// `counts[i] = N(i)`; must satisfy `sum N(i) = 1 + sum i N(i)`.
    pub fn new(mut counts: Vec<u64>) -> Result<Self, GeneratorError> {
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        let nodes: u64 = counts.iter().sum();
        let expected = 1 + counts
            .iter()
            .enumerate()
            .map(|(i, c)| i as u64 * c)
            .sum::<u64>();
        if nodes != expected {
            return Err(GeneratorError::InfeasibleDegrees { nodes, expected });
        }
        Ok(Self { counts })
    }

    /// Roughly `n mu(i)` vertices of out-degree `i >= 1`, with `N(0)` chosen
    /// to make the sequence feasible.
    pub fn from_offspring_profile(mu: &OffspringDistribution, n: usize) -> Result<Self, GeneratorError> {
        let mut counts = vec![0u64];
        let mut covered = mu.pmf(0);
        let mut i = 1u64;
        while covered < 1.0 - 1e-12 && i < n as u64 {
            let p = mu.pmf(i);
            covered += p;
            counts.push((n as f64 * p).round() as u64);
            i += 1;
        }
        counts[0] = 1 + counts
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| (i as u64 - 1) * c)
            .sum::<u64>();
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `|s|`, the number of vertices.
    pub fn size(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn sigma_squared(&self) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as f64) * (i as f64 - 1.0) * c as f64)
            .sum()
    }

    /// `b_n = sigma_n`.
    pub fn b(&self) -> f64 {
        self.sigma_squared().sqrt()
    }

    fn word(&self) -> Vec<u64> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i as u64, c as usize))
            .collect()
    }
}

/// Uniform rooted plane tree with degree sequence `s`.
pub fn degree_sequence_tree<R: Rng + ?Sized>(s: &DegreeSequence, rng: &mut R) -> Result<Tree, GeneratorError> {
    let mut word = s.word();
    word.shuffle(rng);
    cycle_lemma_rotate(&mut word);
    plane_tree_from_word(&word)
}

/// A decreasing probability vector with positive entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RankedProbability {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<f64>> for RankedProbability {
    type Error = GeneratorError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<RankedProbability> for Vec<f64> {
    fn from(p: RankedProbability) -> Self {
        p.probs
    }
}

impl RankedProbability {
    /// Sorts decreasing, drops zero entries and rescales away rounding error.
    pub fn new(mut probs: Vec<f64>) -> Result<Self, GeneratorError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(GeneratorError::Probability("entries must be nonnegative reals".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GeneratorError::Probability(format!("entries sum to {total}")));
        }
        probs.retain(|&p| p > 0.0);
        probs.sort_by(|a, b| b.total_cmp(a));
        probs.iter_mut().for_each(|p| *p /= total);
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { probs, cumulative })
    }

    pub fn uniform(n: usize) -> Result<Self, GeneratorError> {
        if n == 0 {
            return Err(GeneratorError::ZeroSize);
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    /// `p_i` proportional to `ratio^i` on `n` atoms.
    pub fn geometric_truncated(n: usize, ratio: f64) -> Result<Self, GeneratorError> {
        if n == 0 || !(ratio > 0.0 && ratio <= 1.0) {
            return Err(GeneratorError::Probability(format!("n {n}, ratio {ratio}")));
        }
        let raw: Vec<f64> = (0..n).map(|i| ratio.powi(i as i32)).collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|x| x / total).collect())
    }

    /// One atom of mass `p1`, the rest spread evenly over `n - 1` atoms.
    pub fn one_heavy_atom(n: usize, p1: f64) -> Result<Self, GeneratorError> {
        if n < 2 || !(p1 > 0.0 && p1 < 1.0) || p1 < (1.0 - p1) / (n - 1) as f64 {
            return Err(GeneratorError::Probability(format!("n {n}, p1 {p1}")));
        }
        let mut v = vec![(1.0 - p1) / (n - 1) as f64; n];
        v[0] = p1;
        Self::new(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn p1(&self) -> f64 {
        self.probs[0]
    }

    /// `sigma_p = sqrt(sum p_i^2)`.
    pub fn sigma(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    /// Index of the interval of the ranked partition of `[0, 1)` holding `u`.
    pub fn locate(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.probs.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.locate(rng.random::<f64>())
    }
}

/// Birthday tree on the atoms of `p`, rooted at the first draw and carrying
/// `p` as vertex weights.
pub fn p_tree<R: Rng + ?Sized>(p: &RankedProbability, rng: &mut R) -> Result<Tree, GeneratorError> {
    p_tree_with_cap(p, P_TREE_STEP_CAP, rng)
}

pub fn p_tree_with_cap<R: Rng + ?Sized>(
    p: &RankedProbability,
    cap: u64,
    rng: &mut R,
) -> Result<Tree, GeneratorError> {
    let n = p.len();
    let mut seen = vec![false; n];
    let root = p.sample(rng);
    seen[root] = true;
    let mut prev = root;
    let mut edges = Vec::with_capacity(n - 1);
    let mut steps = 0u64;
    while edges.len() + 1 < n {
        if steps >= cap {
            return Err(GeneratorError::StepCap(cap));
        }
        steps += 1;
        let y = p.sample(rng);
        if !seen[y] {
            seen[y] = true;
            edges.push((prev, y));
        }
        prev = y;
    }
    Ok(Tree::from_edges(n, edges)?
        .with_root(root)?
        .with_weights(p.probs().to_vec())?)
}
