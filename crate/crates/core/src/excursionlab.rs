//! Normalized Brownian excursions, excursion lengths of the tilted path
//! `e(x) - t x` above its running minimum, and the comparison of the largest
//! limit mass with Cayley-tree fragmentation under uniform `(0, sqrt n)`
//! clocks.

use std::io;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragmenter::{draw_clocks, fragment, ClockLaw, FragmentError};
use crate::generators::{cayley, GeneratorError};
use crate::masspart::{MassPartition, RefinementWitness};
use crate::seed::replicate_rng;
use crate::stats::{ks_two_sample, KsResult};

/// Excursions whose height above the running minimum stays within
/// `DUST_FACTOR / mesh` are treated as dust.
pub const DUST_FACTOR: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ExcursionError {
    #[error("mesh must be at least 2, got {0}")]
    Mesh(usize),
    #[error("drift must be finite and nonnegative, got {0}")]
    Drift(f64),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Values at the grid points `k / mesh`, `k = 0..=mesh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    mesh: usize,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(values: Vec<f64>) -> Result<Self, ExcursionError> {
        if values.len() < 3 {
            return Err(ExcursionError::Mesh(values.len().saturating_sub(1)));
        }
        Ok(Self {
            mesh: values.len() - 1,
            values,
        })
    }

    pub fn mesh(&self) -> usize {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_mesh(mesh: usize) -> Result<(), ExcursionError> {
    if mesh < 2 {
        return Err(ExcursionError::Mesh(mesh));
    }
    Ok(())
}

fn vervaat(walk: &[f64]) -> Vec<f64> {
    let m = walk.len() - 1;
    let last = walk[m];
    let bridge: Vec<f64> = (0..=m).map(|k| walk[k] - k as f64 / m as f64 * last).collect();
    let argmin = (0..m).min_by(|&a, &b| bridge[a].total_cmp(&bridge[b])).expect("mesh >= 2");
    let mut e: Vec<f64> = (0..=m).map(|k| bridge[(argmin + k) % m] - bridge[argmin]).collect();
    e[m] = 0.0;
    e
}

fn walk_from(increments: &[f64]) -> Vec<f64> {
    let mut walk = Vec::with_capacity(increments.len() + 1);
    walk.push(0.0);
    let mut s = 0.0;
    for &dx in increments {
        s += dx;
        walk.push(s);
    }
    walk
}

fn gaussian_increments<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    let scale = (1.0 / count as f64).sqrt();
    (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

/// Brownian bridge on the grid by mean correction of a Gaussian walk, then
/// the cyclic shift at its minimum.
pub fn brownian_excursion<R: Rng + ?Sized>(mesh: usize, rng: &mut R) -> Result<SampledPath, ExcursionError> {
    check_mesh(mesh)?;
    SampledPath::new(vervaat(&walk_from(&gaussian_increments(mesh, rng))))
}

/// Excursions at `mesh` and `2 mesh` driven by the same Gaussian noise: the
/// coarse increments are sums of consecutive pairs of fine ones.
pub fn coupled_excursions<R: Rng + ?Sized>(
    mesh: usize,
    rng: &mut R,
) -> Result<(SampledPath, SampledPath), ExcursionError> {
    check_mesh(mesh)?;
    let fine = gaussian_increments(2 * mesh, rng);
    let coarse: Vec<f64> = fine.chunks(2).map(|c| c[0] + c[1]).collect();
    Ok((
        SampledPath::new(vervaat(&walk_from(&coarse)))?,
        SampledPath::new(vervaat(&walk_from(&fine)))?,
    ))
}

/// Grid index ranges `[a, b]` of the excursions of `path(x) - drift x`
/// above its running minimum, in left-to-right order, dust excluded.
pub fn excursion_intervals(path: &SampledPath, drift: f64) -> Result<Vec<(usize, usize)>, ExcursionError> {
    if !(drift.is_finite() && drift >= 0.0) {
        return Err(ExcursionError::Drift(drift));
    }
    let m = path.mesh;
    let tol = DUST_FACTOR / m as f64;
    let y = |k: usize| path.values[k] - drift * k as f64 / m as f64;
    let mut intervals = Vec::new();
    let (mut start, mut floor, mut height) = (0, y(0), 0.0f64);
    for k in 1..=m {
        let v = y(k);
        if v <= floor {
            if height > tol {
                intervals.push((start, k));
            }
            start = k;
            floor = v;
            height = 0.0;
        } else {
            height = height.max(v - floor);
        }
    }
    Ok(intervals)
}

/// Lengths of the excursions of `path(x) - drift x` above its running
/// minimum, decreasing.
pub fn excursion_masses(path: &SampledPath, drift: f64) -> Result<MassPartition, ExcursionError> {
    let m = path.mesh as f64;
    let mut lengths: Vec<f64> = excursion_intervals(path, drift)?
        .into_iter()
        .map(|(a, b)| (b - a) as f64 / m)
        .collect();
    lengths.sort_by(|a, b| b.total_cmp(a));
    Ok(MassPartition::from_sorted_unchecked(lengths))
}

/// Masses at drifts `t1 <= t2` and the witness of the later partition
/// refining the earlier one, read off from interval containment.
pub fn containment_witness(
    path: &SampledPath,
    t1: f64,
    t2: f64,
) -> Result<(MassPartition, MassPartition, RefinementWitness), ExcursionError> {
    if t2 < t1 {
        return Err(ExcursionError::Invalid(format!("t2 = {t2} precedes t1 = {t1}")));
    }
    let ranked = |t: f64| -> Result<Vec<(usize, usize)>, ExcursionError> {
        let mut iv = excursion_intervals(path, t)?;
        iv.sort_by(|x, y| (y.1 - y.0).cmp(&(x.1 - x.0)).then(x.0.cmp(&y.0)));
        Ok(iv)
    };
    let (coarse, fine) = (ranked(t1)?, ranked(t2)?);
    let mut assignment = Vec::with_capacity(fine.len());
    for &(a, b) in &fine {
        let i = coarse.iter().position(|&(c, d)| c <= a && b <= d).ok_or_else(|| {
            ExcursionError::Invalid(format!("interval [{a}, {b}] at drift {t2} is not nested at drift {t1}"))
        })?;
        assignment.push(i);
    }
    let m = path.mesh as f64;
    let wrap = |iv: &[(usize, usize)]| MassPartition::from_sorted_unchecked(iv.iter().map(|&(a, b)| (b - a) as f64 / m).collect());
    Ok((wrap(&coarse), wrap(&fine), RefinementWitness::new(assignment)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub n: usize,
    pub t: f64,
    pub mesh: usize,
    pub discrete_samples: usize,
    pub limit_samples: usize,
    pub ks: KsResult,
    pub discrete_mean: f64,
    pub limit_mean: f64,
}

/// Largest component mass at time `t` of a Cayley tree on `n` vertices
/// whose edges die at independent uniform `(0, sqrt n)` times.
pub fn cayley_largest_mass<R: Rng + ?Sized>(n: usize, t: f64, rng: &mut R) -> Result<f64, ExcursionError> {
    let tree = cayley(n, rng)?;
    let clocks = draw_clocks(
        &tree,
        ClockLaw::Uniform {
            t_max: (n as f64).sqrt(),
        },
        rng,
    )?;
    Ok(fragment(&tree, &clocks)?.state_at(t)?.get(0))
}

pub fn limit_largest_mass<R: Rng + ?Sized>(mesh: usize, t: f64, rng: &mut R) -> Result<f64, ExcursionError> {
    Ok(excursion_masses(&brownian_excursion(mesh, rng)?, t)?.get(0))
}

/// Two-sample KS between the discrete and limit laws of the largest mass.
pub fn marginal_comparison(
    n: usize,
    t: f64,
    replicates: usize,
    mesh: usize,
    seed: u64,
) -> Result<MarginalReport, ExcursionError> {
    if n < 100 {
        return Err(ExcursionError::Invalid(format!("n must be at least 100, got {n}")));
    }
    if replicates < 500 {
        return Err(ExcursionError::Invalid(format!(
            "at least 500 replicates are required, got {replicates}"
        )));
    }
    check_mesh(mesh)?;
    let discrete: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| cayley_largest_mass(n, t, &mut replicate_rng(seed, "limit_discrete", i)))
        .collect::<Result<_, _>>()?;
    let limit: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| limit_largest_mass(mesh, t, &mut replicate_rng(seed, "limit_excursion", i)))
        .collect::<Result<_, _>>()?;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(MarginalReport {
        n,
        t,
        mesh,
        discrete_samples: discrete.len(),
        limit_samples: limit.len(),
        ks: ks_two_sample(&discrete, &limit),
        discrete_mean: mean(&discrete),
        limit_mean: mean(&limit),
    })
}

/// Top three limit masses of one excursion at one drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub replicate: u64,
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

/// One excursion per replicate, evaluated along the whole drift grid.
pub fn limit_samples(ts: &[f64], replicates: usize, mesh: usize, seed: u64) -> Result<Vec<LimitSample>, ExcursionError> {
    let per_replicate: Vec<Vec<LimitSample>> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let e = brownian_excursion(mesh, &mut replicate_rng(seed, "limit_excursion", i))?;
            ts.iter()
                .map(|&t| {
                    let x = excursion_masses(&e, t)?;
                    Ok(LimitSample {
                        replicate: i,
                        t,
                        m1: x.get(0),
                        m2: x.get(1),
                        m3: x.get(2),
                    })
                })
                .collect()
        })
        .collect::<Result<_, ExcursionError>>()?;
    Ok(per_replicate.into_iter().flatten().collect())
}

pub fn write_limit_csv<W: io::Write>(samples: &[LimitSample], out: W) -> Result<(), ExcursionError> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_limit_csv<R: io::Read>(input: R) -> Result<Vec<LimitSample>, ExcursionError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
