//! Monte Carlo laboratory around the fragmentation engine: expected `Q(t)`
//! against its exact value, the `1 - E Q(t) <= t r E d` bound, decrement
//! probes after stopping times, scaling studies and trajectory audits.

use std::io;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragmenter::{
    draw_clocks, fragment, ClockLaw, FragmentError, FragmentationTrajectory, StoppingTime, StoppingTimeSpec,
};
use crate::generators::{
    cayley, degree_sequence_tree, gw_conditioned, p_tree, DegreeSequence, GeneratorError, Normalization,
    OffspringDistribution, RankedProbability,
};
use crate::masspart::{moments_with_tol, verify_refinement, SpaceTag};
use crate::seed::{replicate_rng, SimRng};
use crate::stats::mean_se;
use crate::trees::{Tree, TreeError, EXACT_REGIME_MAX};

/// Slack for floating point comparisons in the audits.
pub const AUDIT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("exact evaluation declined for n = {n} > {max}; use mc_expected_q instead")]
    ExactRegime { n: usize, max: usize },
    #[error("at least {min} replicates are required, got {got}")]
    TooFewReplicates { min: usize, got: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub n: usize,
    pub estimate: f64,
    #[serde(rename = "se")]
    pub standard_error: f64,
    #[serde(rename = "exact")]
    pub exact_value: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    fn from_samples(name: &str, n: usize, samples: &[f64], exact: Option<f64>, seed: u64, start: Instant) -> Self {
        let (estimate, standard_error) = mean_se(samples);
        Self {
            name: name.to_string(),
            n,
            estimate,
            standard_error,
            exact_value: exact,
            replicates: samples.len(),
            seed,
            wall_time: start.elapsed(),
        }
    }

    /// `|estimate - exact| <= k * se`; true when no exact value is known.
    pub fn within(&self, k: f64) -> bool {
        self.exact_value
            .is_none_or(|x| (self.estimate - x).abs() <= k * self.standard_error)
    }
}

pub fn write_reports_csv<W: io::Write>(reports: &[ExperimentReport], out: W) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_reports_csv<R: io::Read>(input: R) -> Result<Vec<ExperimentReport>, LabError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// A random tree family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeFamily {
    Fixed(Tree),
    Cayley,
    Gw {
        mu: OffspringDistribution,
        normalization: Normalization,
    },
    /// Degree profile `N(i) ≈ n mu(i)`.
    DegreeProfile(OffspringDistribution),
    DegreeSequence(DegreeSequence),
    PTree(PShape),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PShape {
    Uniform,
    Geometric { ratio: f64 },
    HeavyAtom { p1: f64 },
    Explicit { probs: RankedProbability },
}

impl PShape {
    pub fn at_size(&self, n: usize) -> Result<RankedProbability, GeneratorError> {
        match self {
            Self::Uniform => RankedProbability::uniform(n),
            Self::Geometric { ratio } => RankedProbability::geometric_truncated(n, *ratio),
            Self::HeavyAtom { p1 } => RankedProbability::one_heavy_atom(n, *p1),
            Self::Explicit { probs } => Ok(probs.clone()),
        }
    }
}

impl TreeFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fixed(_) => "fixed",
            Self::Cayley => "cayley",
            Self::Gw { .. } => "gw",
            Self::DegreeProfile(_) | Self::DegreeSequence(_) => "degseq",
            Self::PTree(_) => "ptree",
        }
    }

    /// Prepares the sampler for target size `n`.
    pub fn at_size(&self, n: usize) -> Result<FamilyInstance, LabError> {
        let kind = match self {
            Self::Fixed(t) => InstanceKind::Fixed(t.clone()),
            Self::Cayley => InstanceKind::Cayley(n),
            Self::Gw { mu, normalization } => {
                mu.check_conditionable()?;
                InstanceKind::Gw {
                    mu: mu.clone(),
                    n,
                    normalization: *normalization,
                }
            }
            Self::DegreeProfile(mu) => InstanceKind::Degrees(DegreeSequence::from_offspring_profile(mu, n)?),
            Self::DegreeSequence(s) => InstanceKind::Degrees(s.clone()),
            Self::PTree(shape) => InstanceKind::PTree(shape.at_size(n)?),
        };
        Ok(FamilyInstance { kind })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum InstanceKind {
    Fixed(Tree),
    Cayley(usize),
    Gw {
        mu: OffspringDistribution,
        n: usize,
        normalization: Normalization,
    },
    Degrees(DegreeSequence),
    PTree(RankedProbability),
}

/// A family at a fixed size, ready to sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyInstance {
    kind: InstanceKind,
}

impl FamilyInstance {
    pub fn fixed(tree: Tree) -> Self {
        Self {
            kind: InstanceKind::Fixed(tree),
        }
    }

    pub fn size(&self) -> usize {
        match &self.kind {
            InstanceKind::Fixed(t) => t.n(),
            InstanceKind::Cayley(n) | InstanceKind::Gw { n, .. } => *n,
            InstanceKind::Degrees(s) => s.size() as usize,
            InstanceKind::PTree(p) => p.len(),
        }
    }

    pub fn fixed_tree(&self) -> Option<&Tree> {
        match &self.kind {
            InstanceKind::Fixed(t) => Some(t),
            _ => None,
        }
    }

    /// The distance scale of the family: `sqrt(n)` for Cayley trees, `n / B_n`
    /// for conditioned GW trees, `|s| / b_n` for degree sequences and
    /// `1 / sigma_p` for p-trees.
    pub fn natural_scale(&self) -> f64 {
        match &self.kind {
            InstanceKind::Fixed(_) => 1.0,
            InstanceKind::Cayley(n) => (*n as f64).sqrt(),
            InstanceKind::Gw { n, normalization, .. } => *n as f64 / normalization.b(*n as f64),
            InstanceKind::Degrees(s) => s.size() as f64 / s.b(),
            InstanceKind::PTree(p) => 1.0 / p.sigma(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Tree, LabError> {
        Ok(match &self.kind {
            InstanceKind::Fixed(t) => t.clone(),
            InstanceKind::Cayley(n) => cayley(*n, rng)?,
            InstanceKind::Gw { mu, n, .. } => gw_conditioned(mu, *n, rng)?,
            InstanceKind::Degrees(s) => degree_sequence_tree(s, rng)?,
            InstanceKind::PTree(p) => p_tree(p, rng)?,
        })
    }
}

/// `E[Q(t) | tree]` under exponential clocks of rate `rate`.
pub fn exact_expected_q(tree: &Tree, rate: f64, t: f64) -> Result<f64, LabError> {
    exact_expected_q_law(tree, ClockLaw::Exponential { rate }, t)
}

/// `E[Q(t) | tree] = sum p_v p_w P(T > t)^d(v, w)` for any i.i.d. clock law.
pub fn exact_expected_q_law(tree: &Tree, law: ClockLaw, t: f64) -> Result<f64, LabError> {
    check_exact(tree)?;
    let profile = tree.distance_profile()?;
    Ok(match law {
        ClockLaw::Exponential { rate } => profile.laplace(rate * t),
        ClockLaw::Uniform { .. } => {
            let s = law.survival(t);
            profile.expectation(|d| s.powi(d as i32))
        }
    })
}

fn check_exact(tree: &Tree) -> Result<(), LabError> {
    if tree.n() > EXACT_REGIME_MAX {
        return Err(LabError::ExactRegime {
            n: tree.n(),
            max: EXACT_REGIME_MAX,
        });
    }
    Ok(())
}

fn replicate<T: Send>(
    replicates: usize,
    seed: u64,
    tag: &str,
    f: impl Fn(&mut SimRng) -> Result<T, LabError> + Sync,
) -> Result<Vec<T>, LabError> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, tag, i)))
        .collect()
}

/// Mean and standard error of `Q(t)` over independent (tree, clocks) draws.
pub fn mc_expected_q(
    family: &FamilyInstance,
    law: ClockLaw,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<ExperimentReport, LabError> {
    if replicates < 100 {
        return Err(LabError::TooFewReplicates {
            min: 100,
            got: replicates,
        });
    }
    let start = Instant::now();
    let samples = replicate(replicates, seed, "mc_expected_q", |rng| {
        let tree = family.sample(rng)?;
        let clocks = draw_clocks(&tree, law, rng)?;
        Ok(fragment(&tree, &clocks)?.q_at(t)?)
    })?;
    let exact = match family.fixed_tree() {
        Some(tree) if tree.n() <= EXACT_REGIME_MAX => Some(exact_expected_q_law(tree, law, t)?),
        _ => None,
    };
    Ok(ExperimentReport::from_samples(
        "expected_q",
        family.size(),
        &samples,
        exact,
        seed,
        start,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sof3 {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `1 - E[Q(t) | tree]` against `t r E[d(V1, V2) | tree]`.
pub fn sof3_report(tree: &Tree, rate: f64, t: f64) -> Result<Sof3, LabError> {
    check_exact(tree)?;
    let beta = rate * t;
    let lhs = tree.distance_profile()?.laplace_deficit(beta);
    let rhs = beta * tree.mean_pairwise_distance();
    Ok(Sof3 {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecrementRow {
    pub h: f64,
    /// `E[Q(tau) - Q(tau + h)]`.
    pub lhs: ExperimentReport,
    /// `1 - E Q(h)`.
    pub rhs: ExperimentReport,
    /// Replicates where the stopping time was infinite.
    pub never: usize,
}

impl DecrementRow {
    /// `lhs <= rhs + k (se_lhs + se_rhs)`.
    pub fn holds(&self, k: f64) -> bool {
        self.lhs.estimate <= self.rhs.estimate + k * (self.lhs.standard_error + self.rhs.standard_error)
    }
}

/// Estimates `E[Q(tau) - Q(tau + h)]` and `1 - E Q(h)` on the same
/// trajectories, for each `h` in `hs`. Replicates where `tau` is infinite are
/// excluded from the left side and counted.
pub fn decrement_probe(
    family: &FamilyInstance,
    law: ClockLaw,
    stopping: StoppingTimeSpec,
    hs: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<DecrementRow>, LabError> {
    if hs.iter().any(|&h| !(h > 0.0)) {
        return Err(LabError::Invalid("h must be positive".into()));
    }
    let start = Instant::now();
    let per_rep = replicate(replicates, seed, "decrement_probe", |rng| {
        let tree = family.sample(rng)?;
        let tr = fragment(&tree, &draw_clocks(&tree, law, rng)?)?;
        let tau = tr.stopping_time(stopping);
        hs.iter()
            .map(|&h| {
                let lhs = match tau {
                    StoppingTime::At(s) => Some(tr.q_at(s)? - tr.q_at(s + h)?),
                    StoppingTime::Never => None,
                };
                Ok((lhs, 1.0 - tr.q_at(h)?))
            })
            .collect::<Result<Vec<_>, LabError>>()
    })?;
    Ok(hs
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let lhs: Vec<f64> = per_rep.iter().filter_map(|r| r[j].0).collect();
            let rhs: Vec<f64> = per_rep.iter().map(|r| r[j].1).collect();
            DecrementRow {
                h,
                lhs: ExperimentReport::from_samples("decrement_lhs", family.size(), &lhs, None, seed, start),
                rhs: ExperimentReport::from_samples("decrement_rhs", family.size(), &rhs, None, seed, start),
                never: replicates - lhs.len(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub family: String,
    pub n: usize,
    pub scale: f64,
    pub replicates: usize,
    pub diameter: f64,
    pub diameter_se: f64,
    pub tpl_over_n: f64,
    pub mean_distance: f64,
    pub mean_distance_se: f64,
    pub diameter_ratio: f64,
    pub tpl_ratio: f64,
    pub distance_ratio: f64,
}

/// Mean diameter, total path length over n and mean pairwise distance per
/// size, each also divided by the family's natural scale.
pub fn scaling_study(
    family: &TreeFamily,
    sizes: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>, LabError> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Invalid("sizes must be nonempty and increasing".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let inst = family.at_size(n)?;
            let tag = format!("scaling_{}_{n}", family.name());
            let stats = replicate(replicates, seed, &tag, |rng| {
                let tree = inst.sample(rng)?;
                let tpl = tree.total_path_length().unwrap_or(0) as f64 / tree.n() as f64;
                Ok((tree.diameter() as f64, tpl, tree.mean_pairwise_distance()))
            })?;
            let col = |f: fn(&(f64, f64, f64)) -> f64| stats.iter().map(f).collect::<Vec<f64>>();
            let (d, d_se) = mean_se(&col(|s| s.0));
            let (tpl, _) = mean_se(&col(|s| s.1));
            let (md, md_se) = mean_se(&col(|s| s.2));
            let scale = inst.natural_scale();
            let (d, tpl, md) = if inst.size() == 1 { (0.0, 0.0, 0.0) } else { (d, tpl, md) };
            Ok(ScalingRow {
                family: family.name().to_string(),
                n: inst.size(),
                scale,
                replicates,
                diameter: d,
                diameter_se: d_se,
                tpl_over_n: tpl,
                mean_distance: md,
                mean_distance_se: md_se,
                diameter_ratio: d / scale,
                tpl_ratio: tpl / scale,
                distance_ratio: md / scale,
            })
        })
        .collect()
}

/// `(max - min) / min` of a sequence of positive ratios.
pub fn relative_spread(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = xs
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    (hi - lo) / lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NotInS1,
    QIncreased,
    SkIncreased,
    SkDecrementBound,
    SplitInequality,
    MassNotConserved,
    Refinement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: AuditReport) {
        self.checks += other.checks;
        self.violations.extend(other.violations);
    }

    fn check(&mut self, ok: bool, kind: ViolationKind, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(Violation { kind, detail: detail() });
        }
    }
}

/// Checks, on the grid and at every split: S1 membership, monotone `Q` and
/// `S_k`, `S_k(t1) - S_k(t2) <= 2 sqrt(k (Q(t1) - Q(t2)))`, the split
/// inequality `x (x - y1) <= x^2 - sum y_i^2`, mass conservation, and the
/// containment witness of the refinement order.
pub fn trajectory_audit(traj: &FragmentationTrajectory, grid: &[f64], ks: &[usize]) -> Result<AuditReport, LabError> {
    let mut report = AuditReport::default();
    for (k, ev) in traj.events().iter().enumerate() {
        let x = traj.component_mass(ev.parent);
        let [a, b] = ev.children;
        let y1 = a.max(b);
        report.check(x * (x - y1) <= x * x - a * a - b * b + AUDIT_TOL, ViolationKind::SplitInequality, || {
            format!("event {k}: x = {x}, y = ({a}, {b})")
        });
        report.check((a + b - x).abs() <= AUDIT_TOL, ViolationKind::MassNotConserved, || {
            format!("event {k}: {a} + {b} != {x}")
        });
    }

    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let states = grid.iter().map(|&t| traj.state_at(t)).collect::<Result<Vec<_>, _>>()?;
    let qs = grid.iter().map(|&t| traj.q_at(t)).collect::<Result<Vec<_>, _>>()?;
    for (i, (&t, state)) in grid.iter().zip(&states).enumerate() {
        let m = moments_with_tol(state, 1e-9);
        report.check(m.space_tag == SpaceTag::S1, ViolationKind::NotInS1, || {
            format!("t = {t}: total mass {}", m.total_mass)
        });
        for j in i + 1..grid.len() {
            let t2 = grid[j];
            let dq = qs[i] - qs[j];
            report.check(dq >= -AUDIT_TOL, ViolationKind::QIncreased, || {
                format!("Q({t}) = {} < Q({t2}) = {}", qs[i], qs[j])
            });
            for &k in ks {
                let ds = state.top_sum(k) - states[j].top_sum(k);
                report.check(ds >= -AUDIT_TOL, ViolationKind::SkIncreased, || {
                    format!("S_{k}({t}) < S_{k}({t2}) by {}", -ds)
                });
                let bound = 2.0 * (k as f64 * dq.max(0.0)).sqrt();
                report.check(ds <= bound + AUDIT_TOL, ViolationKind::SkDecrementBound, || {
                    format!("S_{k} drop {ds} over [{t}, {t2}] exceeds {bound}")
                });
            }
            let (x, y, w) = traj.containment_witness(t, t2)?;
            report.check(verify_refinement(&y, &x, &w), ViolationKind::Refinement, || {
                format!("state at {t2} does not refine state at {t}")
            });
        }
    }
    Ok(report)
}

/// `points` equally spaced times on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| horizon * i as f64 / (points - 1) as f64).collect(),
    }
}
