//! Right-continuous step paths, continuous piecewise-linear paths, the
//! uniform distance between them, and certified bounds on the Skorohod J1
//! distance.
//!
//! Also hosts the monotone counterexample family `g_n`: continuous
//! distribution functions of `U[1/2 - 1/n, 1/2]` which stay pairwise
//! uniformly separated and therefore have no J1-convergent subsequence.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masspart::{product_metric, MassPartition};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("path needs at least one breakpoint")]
    Empty,
    #[error("first breakpoint must be 0, got {0}")]
    DoesNotStartAtZero(f64),
    #[error("times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("{breakpoints} breakpoints but {values} values")]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("breakpoint {0} lies beyond the horizon")]
    BeyondHorizon(f64),
    #[error("t = {t} outside [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("paths live on different horizons ({0} vs {1})")]
    HorizonMismatch(f64, f64),
    #[error("J1 bounds need a finite horizon")]
    InfiniteHorizon,
    #[error("counterexample index must be >= 2, got {0}")]
    InvalidIndex(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// A càdlàg step function: `values[k]` holds on `[breakpoints[k], breakpoints[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath<P> {
    breakpoints: Vec<f64>,
    values: Vec<P>,
    horizon: f64,
}

impl<P: Clone> StepPath<P> {
    pub fn new(breakpoints: Vec<f64>, values: Vec<P>, horizon: f64) -> Result<Self, PathError> {
        if breakpoints.is_empty() {
            return Err(PathError::Empty);
        }
        if breakpoints.len() != values.len() {
            return Err(PathError::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: values.len(),
            });
        }
        if breakpoints[0] != 0.0 {
            return Err(PathError::DoesNotStartAtZero(breakpoints[0]));
        }
        if let Some(k) = breakpoints.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(PathError::NotIncreasing(k + 1));
        }
        let last = *breakpoints.last().unwrap();
        if last > horizon || horizon.is_nan() {
            return Err(PathError::BeyondHorizon(last));
        }
        Ok(Self {
            breakpoints,
            values,
            horizon,
        })
    }

    /// A path constant at `value` on `[0, horizon]`.
    pub fn constant(value: P, horizon: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![value],
            horizon,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[P] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn index_at(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t) - 1
    }

    /// Right-continuous evaluation.
    pub fn evaluate(&self, t: f64) -> Result<&P, PathError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(PathError::OutOfDomain {
                t,
                lo: 0.0,
                hi: self.horizon,
            });
        }
        Ok(&self.values[self.index_at(t)])
    }

    /// Sup of `dist(f(t), g(t))` over the merged breakpoints, where both
    /// paths are constant.
    pub fn sup_distance_by(
        &self,
        other: &Self,
        dist: impl Fn(&P, &P) -> f64,
    ) -> Result<f64, PathError> {
        if self.horizon != other.horizon {
            return Err(PathError::HorizonMismatch(self.horizon, other.horizon));
        }
        let (mut i, mut j) = (0, 0);
        let mut sup = dist(&self.values[0], &other.values[0]);
        loop {
            let next_i = self.breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let next_j = other.breakpoints.get(j + 1).copied().unwrap_or(f64::INFINITY);
            let next = next_i.min(next_j);
            if next == f64::INFINITY {
                break;
            }
            if next_i == next {
                i += 1;
            }
            if next_j == next {
                j += 1;
            }
            sup = sup.max(dist(&self.values[i], &other.values[j]));
        }
        Ok(sup)
    }

    /// Builds `self ∘ λ⁻¹`-style reparametrizations: the same values with
    /// breakpoints moved by `map`. Collisions keep the later value.
    fn remap_times(&self, map: impl Fn(f64) -> f64) -> Self {
        let mut breakpoints: Vec<f64> = Vec::with_capacity(self.breakpoints.len());
        let mut values: Vec<P> = Vec::with_capacity(self.values.len());
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            let t = if *b == 0.0 { 0.0 } else { map(*b) };
            if let Some(&last) = breakpoints.last() {
                if t <= last {
                    *values.last_mut().unwrap() = v.clone();
                    continue;
                }
            }
            breakpoints.push(t);
            values.push(v.clone());
        }
        Self {
            breakpoints,
            values,
            horizon: self.horizon,
        }
    }
}

impl StepPath<f64> {
    /// Exact sup-norm distance between two real step paths.
    pub fn uniform_distance(&self, other: &Self) -> Result<f64, PathError> {
        self.sup_distance_by(other, |a, b| (a - b).abs())
    }

    fn jumps(&self) -> Vec<(f64, f64)> {
        (1..self.breakpoints.len())
            .map(|k| (self.breakpoints[k], self.values[k] - self.values[k - 1]))
            .collect()
    }

    /// Writes `t,value` rows, one per breakpoint.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), PathError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value"])?;
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R, horizon: f64) -> Result<Self, PathError> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for row in r.deserialize() {
            let (t, v): (f64, f64) = row?;
            breakpoints.push(t);
            values.push(v);
        }
        Self::new(breakpoints, values, horizon)
    }
}

impl StepPath<MassPartition> {
    /// Sup over time of the product metric between the two states.
    pub fn uniform_product_distance(&self, other: &Self) -> Result<f64, PathError> {
        self.sup_distance_by(other, product_metric)
    }

    /// Writes `t,m1..mK` rows, one per breakpoint.
    pub fn write_csv<W: io::Write>(&self, out: W, top_k: usize) -> Result<(), PathError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(MassPartition::csv_header(top_k));
        w.write_record(&header)?;
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            let mut row = vec![t.to_string()];
            row.extend(v.csv_row(top_k).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct StepPathRepr<P> {
    breakpoints: Vec<f64>,
    values: Vec<P>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
}

impl<P: Serialize + Clone> Serialize for StepPath<P> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StepPathRepr {
            breakpoints: self.breakpoints.clone(),
            values: self.values.clone(),
            horizon: self.horizon.is_finite().then_some(self.horizon),
        }
        .serialize(s)
    }
}

impl<'de, P: Deserialize<'de> + Clone> Deserialize<'de> for StepPath<P> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = StepPathRepr::<P>::deserialize(d)?;
        Self::new(
            repr.breakpoints,
            repr.values,
            repr.horizon.unwrap_or(f64::INFINITY),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// A continuous path interpolating linearly between knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    knots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
}

impl PiecewiseLinearPath {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, PathError> {
        if knots.is_empty() {
            return Err(PathError::Empty);
        }
        if let Some(k) = knots.windows(2).position(|w| !(w[0].0 < w[1].0)) {
            return Err(PathError::NotIncreasing(k + 1));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn evaluate(&self, t: f64) -> Result<f64, PathError> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&t) {
            return Err(PathError::OutOfDomain { t, lo, hi });
        }
        Ok(interpolate(&self.knots, t))
    }

    /// Exact sup-norm distance: both paths are linear between merged knots.
    pub fn uniform_distance(&self, other: &Self) -> Result<f64, PathError> {
        let (a, b) = (self.domain(), other.domain());
        if a != b {
            return Err(PathError::HorizonMismatch(a.1, b.1));
        }
        let mut times: Vec<f64> = self
            .knots
            .iter()
            .chain(&other.knots)
            .map(|k| k.0)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        Ok(times
            .into_iter()
            .map(|t| (interpolate(&self.knots, t) - interpolate(&other.knots, t)).abs())
            .fold(0.0, f64::max))
    }

    pub fn monotonicity(&self) -> Option<Monotonicity> {
        let up = self.knots.windows(2).any(|w| w[1].1 > w[0].1);
        let down = self.knots.windows(2).any(|w| w[1].1 < w[0].1);
        match (up, down) {
            (false, false) => Some(Monotonicity::Constant),
            (true, false) => Some(Monotonicity::Increasing),
            (false, true) => Some(Monotonicity::Decreasing),
            (true, true) => None,
        }
    }
}

/// Linear interpolation through sorted knots, exact at knot times.
fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let k = knots.partition_point(|&(s, _)| s <= t);
    if k == 0 {
        return knots[0].1;
    }
    let (t0, v0) = knots[k - 1];
    if t0 == t || k == knots.len() {
        return v0;
    }
    let (t1, v1) = knots[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Bounds on the J1 distance between two real step paths on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct J1Bound {
    /// Attained by the time change below, so the true distance is at most this.
    pub upper: f64,
    /// No time change can do better than this.
    pub lower: f64,
    /// Knots `(s, λ(s))` of the piecewise-linear time change certifying `upper`.
    pub time_change: Vec<(f64, f64)>,
}

/// Certified upper bound on `d_J1(f, g)` plus a lower certificate.
///
/// Candidates are the identity time change (the uniform distance) and the
/// time change induced by an order-preserving alignment of jumps, chosen by
/// dynamic programming on a surrogate cost. Each candidate is evaluated
/// exactly as `max(sup|λ - id|, sup|f - g∘λ|)`. Both argument orders are
/// tried so the result is symmetric.
pub fn j1_upper_bound(f: &StepPath<f64>, g: &StepPath<f64>) -> Result<J1Bound, PathError> {
    if f.horizon != g.horizon {
        return Err(PathError::HorizonMismatch(f.horizon, g.horizon));
    }
    if !f.horizon.is_finite() {
        return Err(PathError::InfiniteHorizon);
    }
    let horizon = f.horizon;
    let identity = vec![(0.0, 0.0), (horizon, horizon)];
    let mut best = (f.uniform_distance(g)?, identity);
    for (a, b, flip) in [(f, g, false), (g, f, true)] {
        let knots = align_jumps(a, b, horizon);
        let value = time_change_cost(a, b, &knots)?;
        if value < best.0 {
            let knots = if flip {
                knots.into_iter().map(|(s, t)| (t, s)).collect()
            } else {
                knots
            };
            best = (value, knots);
        }
    }

    let max_jump = |p: &StepPath<f64>| p.jumps().into_iter().map(|j| j.1.abs()).fold(0.0, f64::max);
    let start = (f.values[0] - g.values[0]).abs();
    let end = (f.values.last().unwrap() - g.values.last().unwrap()).abs();
    let jump_gap = (max_jump(f) - max_jump(g)).abs() / 2.0;
    let lower = start.max(end).max(jump_gap).min(best.0);

    Ok(J1Bound {
        upper: best.0,
        lower,
        time_change: best.1,
    })
}

/// Order-preserving partial matching of the jumps of `a` and `b` under an
/// additive surrogate: matched pairs cost `max(|Δt|, |Δh|)`, unmatched
/// jumps cost their height. Returns the knots of the induced time change.
fn align_jumps(a: &StepPath<f64>, b: &StepPath<f64>, horizon: f64) -> Vec<(f64, f64)> {
    let (ja, jb) = (a.jumps(), b.jumps());
    let (na, nb) = (ja.len(), jb.len());
    let mut cost = vec![vec![0.0f64; nb + 1]; na + 1];
    for i in 1..=na {
        cost[i][0] = cost[i - 1][0] + ja[i - 1].1.abs();
    }
    for j in 1..=nb {
        cost[0][j] = cost[0][j - 1] + jb[j - 1].1.abs();
    }
    let matchable = |x: f64, y: f64| (x < horizon) == (y < horizon);
    for i in 1..=na {
        for j in 1..=nb {
            let (ta, ha) = ja[i - 1];
            let (tb, hb) = jb[j - 1];
            let mut c = (cost[i - 1][j] + ha.abs()).min(cost[i][j - 1] + hb.abs());
            if matchable(ta, tb) {
                c = c.min(cost[i - 1][j - 1] + (ta - tb).abs().max((ha - hb).abs()));
            }
            cost[i][j] = c;
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (na, nb);
    while i > 0 && j > 0 {
        let (ta, ha) = ja[i - 1];
        let (tb, hb) = jb[j - 1];
        let here = cost[i][j];
        if matchable(ta, tb)
            && here == cost[i - 1][j - 1] + (ta - tb).abs().max((ha - hb).abs())
        {
            pairs.push((ta, tb));
            i -= 1;
            j -= 1;
        } else if here == cost[i - 1][j] + ha.abs() {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    let mut knots = vec![(0.0, 0.0)];
    knots.extend(pairs.into_iter().filter(|&(s, _)| s < horizon));
    knots.push((horizon, horizon));
    knots
}

/// `max(sup|λ - id|, sup|a - b∘λ|)` for the piecewise-linear `λ` with the given knots.
fn time_change_cost(
    a: &StepPath<f64>,
    b: &StepPath<f64>,
    knots: &[(f64, f64)],
) -> Result<f64, PathError> {
    let inverse: Vec<(f64, f64)> = knots.iter().map(|&(s, t)| (t, s)).collect();
    let composed = b.remap_times(|t| interpolate(&inverse, t));
    let displacement = knots.iter().map(|(s, t)| (s - t).abs()).fold(0.0, f64::max);
    Ok(displacement.max(a.uniform_distance(&composed)?))
}

/// `g_n` and `f_n = (g_n, 1 - g_n)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexamplePair {
    pub n: usize,
    pub g: PiecewiseLinearPath,
    pub f: [PiecewiseLinearPath; 2],
}

/// `g_n` is 0 up to `1/2 - 1/n`, rises linearly to 1 at `1/2`, then stays at 1.
pub fn counterexample_pair(n: usize) -> Result<CounterexamplePair, PathError> {
    if n < 2 {
        return Err(PathError::InvalidIndex(n));
    }
    let ramp_start = 0.5 - 1.0 / n as f64;
    let mut knots = Vec::with_capacity(4);
    if ramp_start > 0.0 {
        knots.push((0.0, 0.0));
    }
    knots.extend([(ramp_start, 0.0), (0.5, 1.0), (1.0, 1.0)]);
    let complement = knots.iter().map(|&(t, v)| (t, 1.0 - v)).collect();
    let g = PiecewiseLinearPath::new(knots)?;
    Ok(CounterexamplePair {
        n,
        f: [g.clone(), PiecewiseLinearPath::new(complement)?],
        g,
    })
}

impl CounterexamplePair {
    /// Every coordinate of `f_n` is monotone, at most `m` coordinates are
    /// nonzero, and the coordinates sum to one (unit ℓ¹ norm) pointwise.
    pub fn satisfies_monotone_hypothesis(&self, m: usize) -> bool {
        let monotone = self.f.iter().all(|c| c.monotonicity().is_some());
        let unit_mass = self.f[0]
            .knots()
            .iter()
            .all(|&(t, v)| (v + interpolate(self.f[1].knots(), t) - 1.0).abs() < 1e-15);
        monotone && unit_mass && self.f.len() <= m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masspart::normalize;

    fn step(bp: &[f64], vals: &[f64], h: f64) -> StepPath<f64> {
        StepPath::new(bp.to_vec(), vals.to_vec(), h).unwrap()
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let half = normalize(vec![0.5, 0.5]).unwrap();
        let p = StepPath::new(vec![0.0, 0.5], vec![MassPartition::unit(), half.clone()], 1.0).unwrap();
        assert_eq!(p.evaluate(0.5).unwrap(), &half);
        assert_eq!(p.evaluate(0.499).unwrap(), &MassPartition::unit());
        assert!(p.evaluate(1.5).is_err());
        assert!(p.evaluate(-0.1).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            StepPath::new(vec![0.1], vec![1.0], 1.0),
            Err(PathError::DoesNotStartAtZero(_))
        ));
        assert!(matches!(
            StepPath::new(vec![0.0, 0.5, 0.5], vec![1.0, 2.0, 3.0], 1.0),
            Err(PathError::NotIncreasing(2))
        ));
        assert!(matches!(
            StepPath::new(vec![0.0, 2.0], vec![1.0, 2.0], 1.0),
            Err(PathError::BeyondHorizon(_))
        ));
        assert!(matches!(
            StepPath::new(vec![0.0], vec![1.0, 2.0], 1.0),
            Err(PathError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn counterexample_shapes() {
        let c2 = counterexample_pair(2).unwrap();
        assert_eq!(c2.g.knots(), &[(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]);
        assert_eq!(c2.g.evaluate(0.25).unwrap(), 0.5);
        let c4 = counterexample_pair(4).unwrap();
        assert_eq!(c4.g.evaluate(0.375).unwrap(), 0.5);
        assert_eq!(c4.g.evaluate(0.25).unwrap(), 0.0);
        assert_eq!(c4.g.evaluate(0.9).unwrap(), 1.0);
        assert!(counterexample_pair(1).is_err());
        assert!(c4.satisfies_monotone_hypothesis(2));
        assert!(!c4.satisfies_monotone_hypothesis(1));
    }

    #[test]
    fn uniform_distance_examples() {
        let g2 = counterexample_pair(2).unwrap().g;
        let g4 = counterexample_pair(4).unwrap().g;
        assert_eq!(g2.uniform_distance(&g2).unwrap(), 0.0);
        assert_eq!(g2.uniform_distance(&g4).unwrap(), 0.5);

        let f = step(&[0.0, 0.9], &[0.0, 0.1], 1.0);
        let g = step(&[0.0], &[0.0], 1.0);
        assert!((f.uniform_distance(&g).unwrap() - 0.1).abs() < 1e-15);
        assert!(f.uniform_distance(&step(&[0.0], &[0.0], 2.0)).is_err());
    }

    #[test]
    fn pairwise_separation_small() {
        for n in 2..=16usize {
            let gn = counterexample_pair(n).unwrap().g;
            let x = 0.5 - 1.0 / (2 * n) as f64;
            let g2n = counterexample_pair(2 * n).unwrap().g;
            let direct = (gn.evaluate(x).unwrap() - g2n.evaluate(x).unwrap()).abs();
            assert!(direct >= 0.5 - 1e-15);
            assert!(gn.uniform_distance(&g2n).unwrap() >= direct);
        }
    }

    #[test]
    fn j1_examples() {
        let f = step(&[0.0, 0.5], &[0.0, 1.0], 1.0);
        assert_eq!(j1_upper_bound(&f, &f).unwrap().upper, 0.0);

        let g = step(&[0.0, 0.52], &[0.0, 1.0], 1.0);
        let b = j1_upper_bound(&f, &g).unwrap();
        assert!(b.upper <= 0.02 + 1e-12, "{b:?}");
        assert!(b.lower <= b.upper);

        let zero = step(&[0.0], &[0.0], 1.0);
        let b = j1_upper_bound(&f, &zero).unwrap();
        assert!(b.upper <= 1.0);
        assert!(b.lower >= 0.5 && b.lower <= b.upper);
        let late = step(&[0.0, 0.5, 0.7], &[0.0, 1.0, 0.0], 1.0);
        assert_eq!(j1_upper_bound(&late, &zero).unwrap().lower, 0.5);
    }

    /// Grid search over time changes with a single interior knot `0.5 -> s`.
    fn coarse_time_change_search(f: &StepPath<f64>, g: &StepPath<f64>) -> f64 {
        (1..100)
            .map(|k| {
                let s = k as f64 / 100.0;
                let knots = [(0.0, 0.0), (0.5, s), (1.0, 1.0)];
                time_change_cost(f, g, &knots).unwrap()
            })
            .fold(f.uniform_distance(g).unwrap(), f64::min)
    }

    #[test]
    fn j1_jump_against_zero_matches_grid_search() {
        let f = step(&[0.0, 0.5], &[0.0, 1.0], 1.0);
        let zero = step(&[0.0], &[0.0], 1.0);
        let grid = coarse_time_change_search(&f, &zero);
        let b = j1_upper_bound(&f, &zero).unwrap();
        assert_eq!(grid, 1.0);
        assert!(b.upper <= grid && b.lower >= 0.5);
    }

    #[test]
    fn j1_bounds_match_statements() {
        let f = step(&[0.0, 0.2, 0.6], &[0.0, 1.0, 0.3], 1.0);
        let g = step(&[0.0, 0.25, 0.55, 0.8], &[0.0, 0.9, 0.35, 0.4], 1.0);
        let fg = j1_upper_bound(&f, &g).unwrap();
        let gf = j1_upper_bound(&g, &f).unwrap();
        assert_eq!(fg.upper, gf.upper);
        assert!(fg.upper <= f.uniform_distance(&g).unwrap());
        assert!(fg.upper < 0.11, "{fg:?}");
        // the reported time change reproduces the bound
        assert!((time_change_cost(&f, &g, &fg.time_change).unwrap() - fg.upper).abs() < 1e-12);
    }

    #[test]
    fn step_path_json_and_csv() {
        let p = step(&[0.0, 0.5], &[1.0, 0.5], 2.0);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"breakpoints":[0.0,0.5],"values":[1.0,0.5],"horizon":2.0}"#);
        assert_eq!(serde_json::from_str::<StepPath<f64>>(&s).unwrap(), p);
        let open = StepPath::constant(1.0, f64::INFINITY);
        let s = serde_json::to_string(&open).unwrap();
        assert_eq!(s, r#"{"breakpoints":[0.0],"values":[1.0]}"#);
        assert_eq!(serde_json::from_str::<StepPath<f64>>(&s).unwrap(), open);

        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(StepPath::read_csv(&buf[..], 2.0).unwrap(), p);
    }

    use proptest::prelude::*;

    fn arb_step() -> impl Strategy<Value = StepPath<f64>> {
        prop::collection::vec((0.01f64..0.99, -1.0f64..1.0), 0..6).prop_map(|mut jumps| {
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            jumps.dedup_by(|a, b| a.0 == b.0);
            let mut bp = vec![0.0];
            let mut vals = vec![0.0];
            for (t, v) in jumps {
                bp.push(t);
                vals.push(v);
            }
            StepPath::new(bp, vals, 1.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn j1_properties(f in arb_step(), g in arb_step()) {
            let fg = j1_upper_bound(&f, &g).unwrap();
            let gf = j1_upper_bound(&g, &f).unwrap();
            prop_assert!(fg.upper <= f.uniform_distance(&g).unwrap());
            prop_assert_eq!(fg.upper, gf.upper);
            prop_assert!(fg.lower <= fg.upper);
            prop_assert_eq!(j1_upper_bound(&f, &f).unwrap().upper, 0.0);
        }

        #[test]
        fn right_continuous_at_breakpoints(f in arb_step()) {
            for (t, v) in f.breakpoints().iter().zip(f.values()) {
                prop_assert_eq!(f.evaluate(*t).unwrap(), v);
            }
        }
    }
}
