//! Edge-deletion fragmentation of a tree.
//!
//! Each edge carries a deletion clock. The whole trajectory is rebuilt in one
//! pass by adding edges back in reverse deletion order with a union-find, then
//! reading the merges forwards as splits. Component ids: the whole tree is 0,
//! and the split at event `k` creates components `2k + 1` (the heavier child)
//! and `2k + 2`.

use std::collections::{BTreeMap, BinaryHeap};
use std::io;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cadlag::{PathError, StepPath};
use crate::masspart::{MassPartition, RefinementWitness};
use crate::trees::Tree;

#[derive(Debug, Error)]
pub enum FragmentError {
    #[error("clock law parameter must be positive and finite, got {0}")]
    BadParameter(f64),
    #[error("{clocks} clocks for {edges} edges")]
    ClockCount { clocks: usize, edges: usize },
    #[error("clock {index} is {value}, outside the law's support")]
    ClockOutOfSupport { index: usize, value: f64 },
    #[error("coupling needs uniform clocks")]
    NotUniform,
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("malformed trajectory: {0}")]
    Malformed(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ClockLaw {
    Exponential { rate: f64 },
    Uniform { t_max: f64 },
}

impl ClockLaw {
    fn parameter(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => rate,
            Self::Uniform { t_max } => t_max,
        }
    }

    fn check(&self) -> Result<(), FragmentError> {
        let p = self.parameter();
        if p.is_finite() && p > 0.0 {
            Ok(())
        } else {
            Err(FragmentError::BadParameter(p))
        }
    }

    /// `P(T > t)` for one clock.
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Uniform { t_max } => (1.0 - t / t_max).clamp(0.0, 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                let exp = Exp::new(rate).expect("positive rate");
                loop {
                    let t: f64 = exp.sample(rng);
                    if t > 0.0 && t.is_finite() {
                        return t;
                    }
                }
            }
            Self::Uniform { t_max } => loop {
                let t = t_max * rng.random::<f64>();
                if t > 0.0 && t < t_max {
                    return t;
                }
            },
        }
    }
}

/// One deletion time per edge, aligned with `Tree::edges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeClocks {
    times: Vec<f64>,
    law: ClockLaw,
}

impl EdgeClocks {
    pub fn new(times: Vec<f64>, law: ClockLaw) -> Result<Self, FragmentError> {
        law.check()?;
        for (index, &value) in times.iter().enumerate() {
            let ok = value.is_finite()
                && value > 0.0
                && match law {
                    ClockLaw::Uniform { t_max } => value <= t_max,
                    ClockLaw::Exponential { .. } => true,
                };
            if !ok {
                return Err(FragmentError::ClockOutOfSupport { index, value });
            }
        }
        Ok(Self { times, law })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn law(&self) -> ClockLaw {
        self.law
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Edge indices in deletion order, ties broken by index.
    pub fn deletion_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.times.len()).collect();
        order.sort_by(|&a, &b| self.times[a].total_cmp(&self.times[b]).then(a.cmp(&b)));
        order
    }
}

pub fn draw_clocks<R: Rng + ?Sized>(tree: &Tree, law: ClockLaw, rng: &mut R) -> Result<EdgeClocks, FragmentError> {
    law.check()?;
    let times = (0..tree.edges().len()).map(|_| law.sample(rng)).collect();
    Ok(EdgeClocks { times, law })
}

/// Maps uniform `(0, t_n)` clocks to exponential clocks of rate `1/t_n` by
/// `T = -t_n ln(1 - T̂/t_n)`, preserving the deletion order.
pub fn couple_clocks(clocks: &EdgeClocks) -> Result<EdgeClocks, FragmentError> {
    let ClockLaw::Uniform { t_max } = clocks.law else {
        return Err(FragmentError::NotUniform);
    };
    let times = clocks
        .times
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            let t = time_change(value, t_max, Direction::B)?;
            if t.is_finite() {
                Ok(t)
            } else {
                Err(FragmentError::ClockOutOfSupport { index, value })
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(EdgeClocks {
        times,
        law: ClockLaw::Exponential { rate: 1.0 / t_max },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `a(t) = t_n (1 - exp(-t/t_n))`.
    A,
    /// `b(t) = -t_n ln(max(1 - t/t_n, 0))`, infinite for `t >= t_n`.
    B,
}

pub fn time_change(t: f64, t_n: f64, direction: Direction) -> Result<f64, FragmentError> {
    if !(t >= 0.0) {
        return Err(FragmentError::NegativeTime(t));
    }
    if !(t_n > 0.0 && t_n.is_finite()) {
        return Err(FragmentError::BadParameter(t_n));
    }
    Ok(match direction {
        Direction::A => -t_n * (-t / t_n).exp_m1(),
        Direction::B if t >= t_n => f64::INFINITY,
        Direction::B => -t_n * (-t / t_n).ln_1p(),
    })
}

/// One split: component `parent` breaks into two children at `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    #[serde(rename = "t")]
    pub time: f64,
    pub parent: usize,
    pub children: [f64; 2],
    /// Vertex counts of the two children.
    pub sizes: [u64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StoppingTimeSpec {
    Constant(f64),
    FirstSplit,
    /// First time the largest mass is at most the threshold.
    FirstMaxBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingTime {
    At(f64),
    Never,
}

impl StoppingTime {
    pub fn time(&self) -> Option<f64> {
        match *self {
            Self::At(t) => Some(t),
            Self::Never => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentationTrajectory {
    n: usize,
    weighted: bool,
    events: Vec<SplitEvent>,
    mass: Vec<f64>,
    size: Vec<u64>,
    q_after: Vec<f64>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[v] != root {
            let next = self.parent[v];
            self.parent[v] = root;
            v = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (a, b) = if self.rank[a] < self.rank[b] { (b, a) } else { (a, b) };
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        a
    }
}

pub fn fragment(tree: &Tree, clocks: &EdgeClocks) -> Result<FragmentationTrajectory, FragmentError> {
    let edges = tree.edges();
    if clocks.len() != edges.len() {
        return Err(FragmentError::ClockCount {
            clocks: clocks.len(),
            edges: edges.len(),
        });
    }
    let n = tree.n();
    let order = clocks.deletion_order();
    let weights = tree.weights();

    // nodes 0..n are single vertices, node n + k is the component split at event k
    let mut node_size = vec![1u64; n + order.len()];
    let mut node_mass: Vec<f64> = (0..n).map(|v| weights.map_or(1.0 / n as f64, |w| w[v])).collect();
    node_mass.resize(n + order.len(), 0.0);
    let mut node_children = vec![[0usize; 2]; order.len()];
    let mut uf = UnionFind::new(n);
    let mut node_of_root: Vec<usize> = (0..n).collect();
    for (k, &e) in order.iter().enumerate().rev() {
        let (u, v) = edges[e];
        let (ru, rv) = (uf.find(u), uf.find(v));
        let (a, b) = (node_of_root[ru], node_of_root[rv]);
        let node = n + k;
        node_size[node] = node_size[a] + node_size[b];
        node_mass[node] = match weights {
            Some(_) => node_mass[a] + node_mass[b],
            None => node_size[node] as f64 / n as f64,
        };
        let heavier_first = (node_mass[a], node_size[a]) >= (node_mass[b], node_size[b]);
        node_children[k] = if heavier_first { [a, b] } else { [b, a] };
        let r = uf.union(ru, rv);
        node_of_root[r] = node;
    }

    let mut id_of_node = vec![usize::MAX; n + order.len()];
    let top = if order.is_empty() { 0 } else { n };
    id_of_node[top] = 0;
    let mut events = Vec::with_capacity(order.len());
    let mut mass = vec![1.0];
    let mut size = vec![n as u64];
    let mut q_after = Vec::with_capacity(order.len());
    let mut sum_sq: u128 = (n as u128) * (n as u128);
    let mut q_weighted = 1.0;
    for (k, &e) in order.iter().enumerate() {
        let node = n + k;
        let [c1, c2] = node_children[k];
        id_of_node[c1] = 2 * k + 1;
        id_of_node[c2] = 2 * k + 2;
        let (s1, s2) = (node_size[c1], node_size[c2]);
        let (m1, m2) = (node_mass[c1], node_mass[c2]);
        events.push(SplitEvent {
            time: clocks.times[e],
            parent: id_of_node[node],
            children: [m1, m2],
            sizes: [s1, s2],
        });
        mass.extend([m1, m2]);
        size.extend([s1, s2]);
        let q = if weights.is_some() {
            q_weighted -= 2.0 * m1 * m2;
            q_weighted
        } else {
            sum_sq -= 2 * s1 as u128 * s2 as u128;
            sum_sq as f64 / ((n as f64) * (n as f64))
        };
        q_after.push(q);
    }
    Ok(FragmentationTrajectory {
        n,
        weighted: weights.is_some(),
        events,
        mass,
        size,
        q_after,
    })
}

impl FragmentationTrajectory {
    /// Rebuilds a trajectory from its events without checking mass
    /// conservation, so audits can be run on hand-made inputs. Events must
    /// be time sorted and each parent must be alive when it splits.
    pub fn from_events(n: usize, weighted: bool, events: Vec<SplitEvent>) -> Result<Self, FragmentError> {
        let mut mass = vec![1.0];
        let mut size = vec![n as u64];
        let mut split = vec![false];
        let mut q = 1.0;
        let mut q_after = Vec::with_capacity(events.len());
        for (k, ev) in events.iter().enumerate() {
            if k > 0 && ev.time < events[k - 1].time {
                return Err(FragmentError::Malformed(format!("event {k} is out of time order")));
            }
            if !(ev.time > 0.0 && ev.time.is_finite()) {
                return Err(FragmentError::Malformed(format!("event {k} has time {}", ev.time)));
            }
            if ev.parent > 2 * k || split[ev.parent] {
                return Err(FragmentError::Malformed(format!(
                    "event {k} splits component {} which is not alive",
                    ev.parent
                )));
            }
            split[ev.parent] = true;
            split.extend([false, false]);
            let [m1, m2] = ev.children;
            q += m1 * m1 + m2 * m2 - mass[ev.parent] * mass[ev.parent];
            q_after.push(q);
            mass.extend([m1, m2]);
            size.extend(ev.sizes);
        }
        Ok(Self {
            n,
            weighted,
            events,
            mass,
            size,
            q_after,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weighted(&self) -> bool {
        self.weighted
    }

    pub fn events(&self) -> &[SplitEvent] {
        &self.events
    }

    pub fn component_mass(&self, id: usize) -> f64 {
        self.mass[id]
    }

    pub fn component_size(&self, id: usize) -> u64 {
        self.size[id]
    }

    /// Creation time of a component (0 for the whole tree).
    pub fn created_at(&self, id: usize) -> f64 {
        if id == 0 {
            0.0
        } else {
            self.events[(id - 1) / 2].time
        }
    }

    /// The component that split to create `id`.
    pub fn parent_of(&self, id: usize) -> Option<usize> {
        (id > 0).then(|| self.events[(id - 1) / 2].parent)
    }

    /// `Q` right after event `k`.
    pub fn q_after(&self, k: usize) -> f64 {
        self.q_after[k]
    }

    fn events_until(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.time <= t)
    }

    /// Ids of the components alive at `t`.
    pub fn alive_at(&self, t: f64) -> Result<Vec<usize>, FragmentError> {
        if !(t >= 0.0) {
            return Err(FragmentError::NegativeTime(t));
        }
        let k = self.events_until(t);
        let mut dead = vec![false; 2 * k + 1];
        for ev in &self.events[..k] {
            dead[ev.parent] = true;
        }
        Ok((0..=2 * k).filter(|&id| !dead[id]).collect())
    }

    /// Ranked component masses at `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<MassPartition, FragmentError> {
        let mut masses: Vec<f64> = self
            .alive_at(t)?
            .into_iter()
            .map(|id| self.mass[id])
            .filter(|&m| m > 0.0)
            .collect();
        masses.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(MassPartition::from_sorted_unchecked(masses))
    }

    pub fn q_at(&self, t: f64) -> Result<f64, FragmentError> {
        if !(t >= 0.0) {
            return Err(FragmentError::NegativeTime(t));
        }
        let k = self.events_until(t);
        Ok(if k == 0 { 1.0 } else { self.q_after[k - 1] })
    }

    pub fn s_k_at(&self, t: f64, k: usize) -> Result<f64, FragmentError> {
        Ok(self.state_at(t)?.top_sum(k))
    }

    /// `Q` as a step path on `[0, ∞)`; simultaneous events share one step.
    pub fn q_process(&self) -> StepPath<f64> {
        let mut breakpoints = vec![0.0];
        let mut values = vec![1.0];
        for (ev, &q) in self.events.iter().zip(&self.q_after) {
            if *breakpoints.last().unwrap() == ev.time {
                *values.last_mut().unwrap() = q;
            } else {
                breakpoints.push(ev.time);
                values.push(q);
            }
        }
        StepPath::new(breakpoints, values, f64::INFINITY).expect("event times are sorted")
    }

    pub fn stopping_time(&self, spec: StoppingTimeSpec) -> StoppingTime {
        match spec {
            StoppingTimeSpec::Constant(t) => StoppingTime::At(t),
            StoppingTimeSpec::FirstSplit => self.events.first().map_or(StoppingTime::Never, |e| StoppingTime::At(e.time)),
            StoppingTimeSpec::FirstMaxBelow(theta) => {
                if self.mass[0] <= theta {
                    return StoppingTime::At(0.0);
                }
                let key = |m: f64| m.to_bits();
                let mut heap = BinaryHeap::new();
                heap.push((key(self.mass[0]), 0usize));
                let mut dead = vec![false; self.mass.len()];
                for (k, ev) in self.events.iter().enumerate() {
                    dead[ev.parent] = true;
                    heap.push((key(ev.children[0].max(0.0)), 2 * k + 1));
                    heap.push((key(ev.children[1].max(0.0)), 2 * k + 2));
                    let simultaneous = self.events.get(k + 1).is_some_and(|next| next.time == ev.time);
                    if simultaneous {
                        continue;
                    }
                    while heap.peek().is_some_and(|&(_, id)| dead[id]) {
                        heap.pop();
                    }
                    let max = heap.peek().map_or(0.0, |&(bits, _)| f64::from_bits(bits));
                    if max <= theta {
                        return StoppingTime::At(ev.time);
                    }
                }
                StoppingTime::Never
            }
        }
    }

    /// States at `t1 <= t2` and the witness of `state(t2) ≼ state(t1)` given
    /// by component containment.
    pub fn containment_witness(
        &self,
        t1: f64,
        t2: f64,
    ) -> Result<(MassPartition, MassPartition, RefinementWitness), FragmentError> {
        if t2 < t1 {
            return Err(FragmentError::Malformed(format!("t2 = {t2} precedes t1 = {t1}")));
        }
        let ranked = |t: f64| -> Result<Vec<usize>, FragmentError> {
            let mut ids: Vec<usize> = self.alive_at(t)?.into_iter().filter(|&id| self.mass[id] > 0.0).collect();
            ids.sort_by(|&a, &b| self.mass[b].total_cmp(&self.mass[a]).then(a.cmp(&b)));
            Ok(ids)
        };
        let (coarse, fine) = (ranked(t1)?, ranked(t2)?);
        let mut position = BTreeMap::new();
        for (i, &id) in coarse.iter().enumerate() {
            position.insert(id, i);
        }
        let assignment = fine
            .iter()
            .map(|&id| {
                let mut c = id;
                while self.created_at(c) > t1 {
                    c = self.parent_of(c).expect("only the root is created at 0");
                }
                position[&c]
            })
            .collect();
        let wrap = |ids: &[usize]| MassPartition::from_sorted_unchecked(ids.iter().map(|&id| self.mass[id]).collect());
        Ok((wrap(&coarse), wrap(&fine), RefinementWitness::new(assignment)))
    }

    /// Whether both trajectories split the same components into the same
    /// pieces in the same order, ignoring times.
    pub fn same_split_sequence(&self, other: &Self) -> bool {
        self.n == other.n
            && self.events.len() == other.events.len()
            && self
                .events
                .iter()
                .zip(&other.events)
                .all(|(a, b)| a.parent == b.parent && a.children == b.children && a.sizes == b.sizes)
    }

    pub fn to_json(&self) -> Result<String, FragmentError> {
        Ok(serde_json::to_string(&TrajectoryRepr {
            n: self.n,
            weighted: self.weighted,
            events: self.events.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self, FragmentError> {
        let repr: TrajectoryRepr = serde_json::from_str(s)?;
        let mut traj = Self::from_events(repr.n, repr.weighted, repr.events)?;
        if !traj.weighted {
            traj.recompute_integer_q();
        }
        Ok(traj)
    }

    fn recompute_integer_q(&mut self) {
        let nn = (self.n as f64) * (self.n as f64);
        let mut sum_sq: i128 = (self.n as i128) * (self.n as i128);
        for (k, ev) in self.events.iter().enumerate() {
            let p = self.size[ev.parent] as i128;
            let [a, b] = ev.sizes;
            sum_sq += (a as i128).pow(2) + (b as i128).pow(2) - p * p;
            self.q_after[k] = sum_sq as f64 / nn;
        }
    }

    /// Rows `t, m1..mK` at time 0 and after each distinct event time.
    pub fn write_csv<W: io::Write>(&self, out: W, top_k: usize) -> Result<(), FragmentError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(MassPartition::csv_header(top_k));
        w.write_record(&header)?;
        let mut multiset: BTreeMap<u64, usize> = BTreeMap::new();
        let key = |m: f64| m.max(0.0).to_bits();
        let emit = |w: &mut csv::Writer<W>, t: f64, ms: &BTreeMap<u64, usize>| -> Result<(), FragmentError> {
            let mut row = vec![t.to_string()];
            let top = ms
                .iter()
                .rev()
                .flat_map(|(&bits, &c)| std::iter::repeat_n(f64::from_bits(bits), c))
                .chain(std::iter::repeat(0.0))
                .take(top_k);
            row.extend(top.map(|m| m.to_string()));
            w.write_record(&row)?;
            Ok(())
        };
        *multiset.entry(key(self.mass[0])).or_default() += 1;
        emit(&mut w, 0.0, &multiset)?;
        for (k, ev) in self.events.iter().enumerate() {
            let slot = multiset.get_mut(&key(self.mass[ev.parent])).expect("parent alive");
            *slot -= 1;
            if *slot == 0 {
                multiset.remove(&key(self.mass[ev.parent]));
            }
            for m in ev.children {
                *multiset.entry(key(m)).or_default() += 1;
            }
            if self.events.get(k + 1).is_none_or(|next| next.time != ev.time) {
                emit(&mut w, ev.time, &multiset)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads the rows written by [`FragmentationTrajectory::write_csv`].
pub fn read_trajectory_csv<R: io::Read>(input: R) -> Result<Vec<(f64, Vec<f64>)>, FragmentError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let parsed = parsed.map_err(|e| FragmentError::Malformed(e.to_string()))?;
        let (t, rest) = parsed
            .split_first()
            .ok_or_else(|| FragmentError::Malformed("empty row".into()))?;
        rows.push((*t, rest.to_vec()));
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRepr {
    n: usize,
    weighted: bool,
    events: Vec<SplitEvent>,
}
