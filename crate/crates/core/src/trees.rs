//! Finite trees and the exact distance functionals used as oracles for the
//! fragmentation engine.
//!
//! Vertices are `0..n`. Every tree keeps a breadth-first orientation from an
//! anchor vertex (the root when there is one, otherwise vertex 0); depths,
//! subtree masses and distances are read off that orientation.

use std::collections::VecDeque;
use std::io::{self, BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::masspart::MASS_TOL;

/// Largest tree for which the O(n²) pairwise functionals are evaluated.
pub const EXACT_REGIME_MAX: usize = 5000;

const NO_PARENT: usize = usize::MAX;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("a tree needs at least one vertex")]
    Empty,
    #[error("{n} vertices need {expected} edges, got {got}")]
    EdgeCount { n: usize, expected: usize, got: usize },
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("parent array must contain exactly one root, found {0}")]
    RootCount(usize),
    #[error("vertex {0} does not exist")]
    InvalidVertex(usize),
    #[error("weights must be {expected} nonnegative reals summing to 1 ({reason})")]
    BadWeights { expected: usize, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("exact functional declined: {n} vertices exceeds {max}")]
    TooLarge { n: usize, max: usize },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    n: usize,
    edges: Vec<(usize, usize)>,
    root: Option<usize>,
    weights: Option<Vec<f64>>,
    adj_start: Vec<usize>,
    adj: Vec<usize>,
    order: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<u32>,
}

impl Tree {
    /// Validates `edges` as a spanning tree on `0..n`.
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if edges.len() != n - 1 {
            return Err(TreeError::EdgeCount {
                n,
                expected: n - 1,
                got: edges.len(),
            });
        }
        let mut degree = vec![0usize; n + 1];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(TreeError::VertexOutOfRange(u, v, n));
            }
            if u == v {
                return Err(TreeError::SelfLoop(u));
            }
            degree[u + 1] += 1;
            degree[v + 1] += 1;
        }
        let mut adj_start = degree;
        for i in 1..=n {
            adj_start[i] += adj_start[i - 1];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![0; 2 * (n - 1)];
        for &(u, v) in &edges {
            adj[fill[u]] = v;
            fill[u] += 1;
            adj[fill[v]] = u;
            fill[v] += 1;
        }
        let mut tree = Self {
            n,
            edges,
            root: None,
            weights: None,
            adj_start,
            adj,
            order: Vec::new(),
            parent: Vec::new(),
            depth: Vec::new(),
        };
        tree.orient(0)?;
        Ok(tree)
    }

    /// Builds a rooted tree from a parent array with a single `None` entry.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self, TreeError> {
        let roots: Vec<usize> = (0..parents.len()).filter(|&v| parents[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(TreeError::RootCount(roots.len()));
        }
        let edges = parents
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
            .collect();
        Self::from_edges(parents.len(), edges)?.with_root(roots[0])
    }

    pub fn single() -> Self {
        Self::from_edges(1, Vec::new()).expect("single vertex")
    }

    /// The path `0 - 1 - ... - (n-1)`, rooted at 0.
    pub fn path(n: usize) -> Result<Self, TreeError> {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v)).collect())?.with_root(0)
    }

    /// Vertex 0 joined to `n - 1` leaves, rooted at the center.
    pub fn star(n: usize) -> Result<Self, TreeError> {
        Self::from_edges(n, (1..n).map(|v| (0, v)).collect())?.with_root(0)
    }

    pub fn with_root(mut self, root: usize) -> Result<Self, TreeError> {
        if root >= self.n {
            return Err(TreeError::InvalidVertex(root));
        }
        self.orient(root)?;
        self.root = Some(root);
        Ok(self)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, TreeError> {
        let bad = |reason: &str| TreeError::BadWeights {
            expected: self.n,
            reason: reason.to_string(),
        };
        if weights.len() != self.n {
            return Err(bad("wrong length"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(bad("negative or non-finite entry"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(bad("sum differs from 1"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    fn orient(&mut self, anchor: usize) -> Result<(), TreeError> {
        let n = self.n;
        let mut parent = vec![NO_PARENT; n];
        let mut depth = vec![0u32; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        seen[anchor] = true;
        order.push(anchor);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    depth[w] = depth[v] + 1;
                    order.push(w);
                }
            }
        }
        if order.len() != n {
            return Err(TreeError::Disconnected);
        }
        self.order = order;
        self.parent = parent;
        self.depth = depth;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.adj_start[v]..self.adj_start[v + 1]]
    }

    /// Mass of vertex `v`: its weight, or `1/n` when unweighted.
    pub fn vertex_mass(&self, v: usize) -> f64 {
        match &self.weights {
            Some(w) => w[v],
            None => 1.0 / self.n as f64,
        }
    }

    /// Depth of `v` below the root (or below vertex 0 when unrooted).
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    pub fn distance(&self, v: usize, w: usize) -> Result<usize, TreeError> {
        for x in [v, w] {
            if x >= self.n {
                return Err(TreeError::InvalidVertex(x));
            }
        }
        let (mut a, mut b) = (v, w);
        let mut d = 0;
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
            d += 1;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
            d += 1;
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
            d += 2;
        }
        Ok(d)
    }

    fn bfs_distances(&self, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
        dist.fill(u32::MAX);
        dist[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    fn farthest_from(&self, source: usize) -> (usize, usize) {
        let mut dist = vec![0; self.n];
        self.bfs_distances(source, &mut dist, &mut VecDeque::new());
        let (v, d) = dist
            .iter()
            .enumerate()
            .max_by_key(|&(v, &d)| (d, std::cmp::Reverse(v)))
            .unwrap();
        (v, *d as usize)
    }

    pub fn diameter(&self) -> usize {
        let (u, _) = self.farthest_from(self.order[0]);
        self.farthest_from(u).1
    }

    /// For each edge, the mass on the side away from the anchor.
    fn edge_split_masses(&self, mass: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut below: Vec<f64> = (0..self.n).map(&mass).collect();
        for &v in self.order.iter().rev() {
            let p = self.parent[v];
            if p != NO_PARENT {
                below[p] += below[v];
            }
        }
        self.edges
            .iter()
            .map(|&(u, v)| if self.parent[v] == u { below[v] } else { below[u] })
            .collect()
    }

    /// `E d(V1, V2)` for two independent vertices drawn from the vertex law,
    /// via `sum_e 2 w(A_e) w(B_e)` over the two sides of each edge.
    pub fn mean_pairwise_distance(&self) -> f64 {
        match &self.weights {
            None => {
                let n = self.n as f64;
                let sizes = self.edge_split_masses(|_| 1.0);
                sizes.iter().map(|a| 2.0 * a * (n - a)).sum::<f64>() / (n * n)
            }
            Some(w) => {
                let total: f64 = w.iter().sum();
                self.edge_split_masses(|v| w[v])
                    .iter()
                    .map(|a| 2.0 * a * (total - a))
                    .sum()
            }
        }
    }

    /// Sum of root-to-vertex distances; `None` when unrooted.
    pub fn total_path_length(&self) -> Option<u64> {
        self.root
            .map(|_| self.depth.iter().map(|&d| d as u64).sum())
    }

    pub fn height(&self) -> Option<usize> {
        self.root
            .map(|_| self.depth.iter().copied().max().unwrap_or(0) as usize)
    }

    pub fn summary(&self) -> TreeSummary {
        TreeSummary {
            n: self.n,
            diameter: self.diameter(),
            height: self.height(),
            total_path_length: self.total_path_length(),
            mean_pairwise_distance: self.mean_pairwise_distance(),
        }
    }

    /// Pair mass at each distance `d`, over ordered pairs including `v = w`.
    pub fn distance_profile(&self) -> Result<DistanceProfile, TreeError> {
        if self.n > EXACT_REGIME_MAX {
            return Err(TreeError::TooLarge {
                n: self.n,
                max: EXACT_REGIME_MAX,
            });
        }
        const CHUNK: usize = 64;
        let sources: Vec<usize> = (0..self.n).collect();
        let partials: Vec<Vec<f64>> = sources
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut hist = Vec::new();
                let mut dist = vec![0u32; self.n];
                let mut queue = VecDeque::with_capacity(self.n);
                for &s in chunk {
                    self.bfs_distances(s, &mut dist, &mut queue);
                    let ws = self.weights.as_ref().map_or(1.0, |w| w[s]);
                    for (v, &d) in dist.iter().enumerate() {
                        let d = d as usize;
                        if hist.len() <= d {
                            hist.resize(d + 1, 0.0);
                        }
                        hist[d] += match &self.weights {
                            None => 1.0,
                            Some(w) => ws * w[v],
                        };
                    }
                }
                hist
            })
            .collect();
        let mut mass = Vec::new();
        for part in partials {
            if mass.len() < part.len() {
                mass.resize(part.len(), 0.0);
            }
            for (d, m) in part.into_iter().enumerate() {
                mass[d] += m;
            }
        }
        let normalizer = match &self.weights {
            None => (self.n as f64) * (self.n as f64),
            Some(_) => 1.0,
        };
        Ok(DistanceProfile { mass, normalizer })
    }

    /// `sum_{v,w} p_v p_w exp(-beta d(v, w))`.
    pub fn laplace_distance_sum(&self, beta: f64) -> Result<f64, TreeError> {
        Ok(self.distance_profile()?.laplace(beta))
    }

    pub fn vertex_sampler(&self) -> VertexSampler {
        VertexSampler::new(self)
    }

    pub fn sample_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.vertex_sampler().sample(rng)
    }

    /// One `u v` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Reads an edge list; `n` is one more than the largest vertex id
    /// (a single vertex when the list is empty). Blank lines and lines
    /// starting with `#` are skipped.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self, TreeError> {
        let mut edges = Vec::new();
        let mut max_id = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: &str| TreeError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize, TreeError> {
                parts
                    .next()
                    .ok_or_else(|| parse_err("expected two vertex ids"))?
                    .parse()
                    .map_err(|_| parse_err("vertex id is not a nonnegative integer"))
            };
            let (u, v) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(parse_err("trailing tokens"));
            }
            max_id = max_id.max(u).max(v);
            edges.push((u, v));
        }
        Self::from_edges(max_id + 1, edges)
    }

    /// One real per line.
    pub fn write_weights<W: Write>(&self, mut out: W) -> io::Result<()> {
        if let Some(w) = &self.weights {
            for x in w {
                writeln!(out, "{x}")?;
            }
        }
        Ok(())
    }
}

/// Reads one nonnegative real per line.
pub fn read_weights<R: BufRead>(input: R) -> Result<Vec<f64>, TreeError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse().map_err(|_| TreeError::Parse {
            line: i + 1,
            message: format!("not a real number: {line:?}"),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSummary {
    pub n: usize,
    pub diameter: usize,
    pub height: Option<usize>,
    pub total_path_length: Option<u64>,
    pub mean_pairwise_distance: f64,
}

/// Pair mass `c_d / normalizer` at each distance `d`. Unweighted profiles
/// keep integer pair counts with normalizer `n²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    mass: Vec<f64>,
    normalizer: f64,
}

impl DistanceProfile {
    pub fn max_distance(&self) -> usize {
        self.mass.len().saturating_sub(1)
    }

    /// Normalized pair mass at distance `d`.
    pub fn at(&self, d: usize) -> f64 {
        self.mass.get(d).copied().unwrap_or(0.0) / self.normalizer
    }

    /// `sum_d c_d f(d)`, normalized.
    pub fn expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(d, &m)| m * f(d))
            .sum::<f64>()
            / self.normalizer
    }

    pub fn laplace(&self, beta: f64) -> f64 {
        self.expectation(|d| (-beta * d as f64).exp())
    }

    /// `sum_d c_d (1 - exp(-beta d))`, evaluated termwise.
    pub fn laplace_deficit(&self, beta: f64) -> f64 {
        self.expectation(|d| -(-beta * d as f64).exp_m1())
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|d| d as f64)
    }
}

/// Draws vertices uniformly, or from the tree's weights by inverse CDF.
#[derive(Debug, Clone)]
pub struct VertexSampler {
    n: usize,
    cumulative: Option<Vec<f64>>,
}

impl VertexSampler {
    pub fn new(tree: &Tree) -> Self {
        let cumulative = tree.weights.as_ref().map(|w| {
            let mut acc = 0.0;
            w.iter()
                .map(|x| {
                    acc += x;
                    acc
                })
                .collect()
        });
        Self {
            n: tree.n,
            cumulative,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.cumulative {
            None => rng.random_range(0..self.n),
            Some(c) => {
                let u = rng.random::<f64>() * c[c.len() - 1];
                c.partition_point(|&x| x <= u).min(self.n - 1)
            }
        }
    }
}

/// Whether two weight vectors agree within the mass tolerance.
pub fn weights_close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= MASS_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// All-pairs distances by Floyd-Warshall on the edge list.
    fn brute_distances(tree: &Tree) -> Vec<Vec<usize>> {
        let n = tree.n();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0;
        }
        for &(u, v) in tree.edges() {
            d[u][v] = 1;
            d[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Tree {
        // random recursive tree with shuffled labels, an independent route from the samplers
        let mut labels: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        labels.shuffle(rng);
        let edges = (1..n)
            .map(|v| (labels[rng.random_range(0..v)], labels[v]))
            .collect();
        Tree::from_edges(n, edges).unwrap()
    }

    #[test]
    fn distance_examples() {
        let p3 = Tree::path(3).unwrap();
        assert_eq!(p3.distance(0, 2).unwrap(), 2);
        assert_eq!(p3.distance(1, 1).unwrap(), 0);
        let s4 = Tree::star(4).unwrap();
        assert_eq!(s4.distance(0, 3).unwrap(), 1);
        assert_eq!(s4.distance(2, 3).unwrap(), 2);
        assert!(matches!(s4.distance(0, 4), Err(TreeError::InvalidVertex(4))));
    }

    #[test]
    fn validation() {
        assert!(matches!(Tree::from_edges(0, vec![]), Err(TreeError::Empty)));
        assert!(matches!(
            Tree::from_edges(3, vec![(0, 1)]),
            Err(TreeError::EdgeCount { .. })
        ));
        assert!(matches!(
            Tree::from_edges(4, vec![(0, 1), (1, 0), (2, 3)]),
            Err(TreeError::Disconnected)
        ));
        assert!(matches!(
            Tree::from_edges(2, vec![(1, 1)]),
            Err(TreeError::SelfLoop(1))
        ));
        assert!(matches!(
            Tree::from_edges(2, vec![(0, 2)]),
            Err(TreeError::VertexOutOfRange(..))
        ));
        assert!(Tree::star(3).unwrap().with_weights(vec![0.5, 0.5, 0.5]).is_err());
        assert!(Tree::from_parents(&[None, Some(0), None]).is_err());
        let t = Tree::from_parents(&[Some(2), Some(2), None]).unwrap();
        assert_eq!(t.root(), Some(2));
        assert_eq!(t.height(), Some(1));
    }

    #[test]
    fn summary_examples() {
        let s = Tree::path(3).unwrap().summary();
        assert_eq!((s.diameter, s.total_path_length), (2, Some(3)));
        assert!((s.mean_pairwise_distance - 8.0 / 9.0).abs() < 1e-15);

        let s = Tree::star(4).unwrap().summary();
        assert_eq!((s.diameter, s.height, s.total_path_length), (2, Some(1), Some(3)));
        assert!((s.mean_pairwise_distance - 18.0 / 16.0).abs() < 1e-15);

        let s = Tree::single().summary();
        assert_eq!(s.diameter, 0);
        assert_eq!(s.mean_pairwise_distance, 0.0);
        assert_eq!(s.total_path_length, None);
        let s = Tree::single().with_root(0).unwrap().summary();
        assert_eq!(s.total_path_length, Some(0));
    }

    #[test]
    fn laplace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 5, 17] {
            let t = random_tree(n, &mut rng);
            assert_eq!(t.laplace_distance_sum(0.0).unwrap(), 1.0);
        }
        let s4 = Tree::star(4).unwrap();
        assert!((s4.laplace_distance_sum(2f64.ln()).unwrap() - 0.53125).abs() < 1e-15);
        let p2 = Tree::path(2).unwrap();
        for beta in [0.1, 1.0, 3.0] {
            let got = p2.laplace_distance_sum(beta).unwrap();
            assert!((got - (0.5 + 0.5 * (-beta).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_regime_is_capped() {
        let big = Tree::path(EXACT_REGIME_MAX + 1).unwrap();
        assert!(matches!(big.laplace_distance_sum(1.0), Err(TreeError::TooLarge { .. })));
    }

    #[test]
    fn brute_force_agreement_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..=50);
            let t = random_tree(n, &mut rng);
            let t = t.clone().with_root(rng.random_range(0..n)).unwrap();
            let d = brute_distances(&t);
            let pair_sum: usize = d.iter().flatten().sum();
            let edge_split: f64 = t.mean_pairwise_distance() * (n * n) as f64;
            assert_eq!(pair_sum as f64, edge_split.round());
            assert!((pair_sum as f64 - edge_split).abs() < 1e-9);

            for _ in 0..5 {
                let (v, w) = (rng.random_range(0..n), rng.random_range(0..n));
                assert_eq!(t.distance(v, w).unwrap(), d[v][w]);
            }
            let diam = *d.iter().flatten().max().unwrap();
            let s = t.summary();
            assert_eq!(s.diameter, diam);
            let root = t.root().unwrap();
            assert_eq!(s.total_path_length.unwrap() as usize, d[root].iter().sum::<usize>());
            assert!(s.mean_pairwise_distance <= s.diameter as f64 + 1e-12);
            assert!(
                s.mean_pairwise_distance
                    <= 2.0 * s.total_path_length.unwrap() as f64 / n as f64 + 1e-12
            );
            for beta in [0.0, 0.01, 0.3, 2.0] {
                let lap = t.laplace_distance_sum(beta).unwrap();
                let brute: f64 = d
                    .iter()
                    .flatten()
                    .map(|&x| (-beta * x as f64).exp())
                    .sum::<f64>()
                    / (n * n) as f64;
                assert!((lap - brute).abs() < 1e-12);
                assert!(1.0 - lap <= beta * s.mean_pairwise_distance + 1e-15);
            }
        }
    }

    #[test]
    fn weighted_functionals_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=20);
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let t = random_tree(n, &mut rng).with_weights(w.clone()).unwrap();
            let d = brute_distances(&t);
            let mut mean = 0.0;
            let mut lap = 0.0;
            for v in 0..n {
                for u in 0..n {
                    mean += w[v] * w[u] * d[v][u] as f64;
                    lap += w[v] * w[u] * (-0.7 * d[v][u] as f64).exp();
                }
            }
            assert!((t.mean_pairwise_distance() - mean).abs() < 1e-12);
            assert!((t.laplace_distance_sum(0.7).unwrap() - lap).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(Tree::single().sample_vertex(&mut rng), 0);
        let w = Tree::path(3).unwrap().with_weights(vec![1.0, 0.0, 0.0]).unwrap();
        let s = w.vertex_sampler();
        assert!((0..1000).all(|_| s.sample(&mut rng) == 0));

        let t = Tree::star(4).unwrap();
        let s = t.vertex_sampler();
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[s.sample(&mut rng)] += 1;
        }
        let sd = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 4.0).abs() <= 4.0 * sd);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tree(30, &mut rng);
        let mut buf = Vec::new();
        t.write_edge_list(&mut buf).unwrap();
        let back = Tree::read_edge_list(&buf[..]).unwrap();
        assert_eq!(back.edges(), t.edges());
        assert_eq!(Tree::read_edge_list(&b""[..]).unwrap().n(), 1);
        let err = Tree::read_edge_list(&b"0 1\n1 x\n"[..]).unwrap_err();
        assert!(matches!(err, TreeError::Parse { line: 2, .. }));

        let wt = Tree::path(2).unwrap().with_weights(vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        wt.write_weights(&mut buf).unwrap();
        assert_eq!(read_weights(&buf[..]).unwrap(), vec![0.25, 0.75]);
    }
}
