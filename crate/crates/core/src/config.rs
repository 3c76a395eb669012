//! Experiment configuration files.
//!
//! A config is TOML with three sections plus two optional ones:
//!
//! ```toml
//! [experiment]
//! seed = 7              # u64; integers above i64::MAX may be given as strings
//! replicates = 1000
//! sizes = [500, 1000]
//! times = [0.2, 1.0]    # default [1.0]
//! top_k = 10            # default 10
//! out = "out"           # default "out", relative to the config file
//!
//! [family]
//! kind = "gw"           # cayley | path | star | fixed | gw | degseq | ptree
//! offspring = { kind = "stable", alpha = 1.5 }
//!
//! [clocks]
//! law = "exponential"   # or "uniform"
//! scale = "natural"     # rate = 1 / scale, or t_max = scale, of the family at each size
//!
//! [tails]               # optional
//! x_grid = [8.0, 10.0, 12.0]
//!
//! [limit]               # optional
//! mesh = 16384
//! ```
//!
//! `fixed` takes `edges` (and optionally `weights`) file paths; `degseq`
//! takes either `offspring` (a profile scaled to each size) or `counts`;
//! `ptree` takes `shape = "uniform" | "geometric" | "heavy_atom" |
//! "explicit"` with `ratio`, `p1` or `probs`. Clocks accept a fixed `rate` or
//! `t_max` when `scale = "fixed"` (the default).

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fragmenter::ClockLaw;
use crate::generators::{stable_family, DegreeSequence, Normalization, OffspringDistribution, RankedProbability};
use crate::tightlab::{FamilyInstance, PShape, TreeFamily};
use crate::trees::{read_weights, Tree};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub family: FamilySpec,
    #[serde(default)]
    pub clocks: ClockSpec,
    #[serde(default)]
    pub tails: TailsSection,
    #[serde(default)]
    pub limit: LimitSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(deserialize_with = "seed_value")]
    pub seed: u64,
    pub replicates: usize,
    pub sizes: Vec<usize>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_times() -> Vec<f64> {
    vec![1.0]
}

fn default_top_k() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn seed_value<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => u64::try_from(v).map_err(|_| serde::de::Error::custom("seed must be nonnegative")),
        Raw::Text(s) => s
            .trim()
            .parse()
            .map_err(|_| serde::de::Error::custom(format!("seed {s:?} is not a 64-bit unsigned integer"))),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Cayley {},
    Path {},
    Star {},
    Fixed {
        edges: PathBuf,
        weights: Option<PathBuf>,
    },
    Gw {
        offspring: OffspringDistribution,
    },
    Degseq {
        offspring: Option<OffspringDistribution>,
        counts: Option<Vec<u64>>,
    },
    Ptree {
        shape: String,
        ratio: Option<f64>,
        p1: Option<f64>,
        probs: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    #[default]
    Exponential,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockScale {
    #[default]
    Fixed,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSpec {
    #[serde(default)]
    pub law: ClockKind,
    #[serde(default)]
    pub scale: ClockScale,
    pub rate: Option<f64>,
    pub t_max: Option<f64>,
}

impl ClockSpec {
    /// The clock law for one family instance.
    pub fn law_for(&self, instance: &FamilyInstance) -> ClockLaw {
        let scale = instance.natural_scale();
        match (self.law, self.scale) {
            (ClockKind::Exponential, ClockScale::Natural) => ClockLaw::Exponential { rate: 1.0 / scale },
            (ClockKind::Exponential, ClockScale::Fixed) => ClockLaw::Exponential {
                rate: self.rate.unwrap_or(1.0),
            },
            (ClockKind::Uniform, ClockScale::Natural) => ClockLaw::Uniform { t_max: scale },
            (ClockKind::Uniform, ClockScale::Fixed) => ClockLaw::Uniform {
                t_max: self.t_max.unwrap_or(1.0),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsSection {
    pub t_grid: Option<Vec<f64>>,
    pub x_grid: Option<Vec<f64>>,
    pub k_grid: Option<Vec<f64>>,
    pub chernoff_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    #[serde(default = "default_mesh")]
    pub mesh: usize,
}

impl Default for LimitSection {
    fn default() -> Self {
        Self { mesh: default_mesh() }
    }
}

fn default_mesh() -> usize {
    1 << 14
}

/// A parsed config with its source hash and the directory relative paths
/// resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    pub base_dir: PathBuf,
    source: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl LoadedConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Line {
            line: e.span().map_or(1, |s| line_at(text, s.start)),
            message: e.message().to_string(),
        })?;
        let loaded = Self {
            config,
            sha256: sha256_hex(text.as_bytes()),
            base_dir: base_dir.into(),
            source: text.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let message = message.into();
        match line_of_key(&self.source, key) {
            Some(line) => ConfigError::Line { line, message },
            None => ConfigError::Invalid(message),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.config.experiment;
        if e.sizes.is_empty() {
            return Err(self.invalid("sizes", "sizes must be nonempty"));
        }
        if e.sizes.contains(&0) {
            return Err(self.invalid("sizes", "sizes must be positive"));
        }
        if e.replicates == 0 {
            return Err(self.invalid("replicates", "replicates must be positive"));
        }
        if e.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(self.invalid("times", "times must be finite and nonnegative"));
        }
        let c = &self.config.clocks;
        if let Some(r) = c.rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(self.invalid("rate", "rate must be positive"));
            }
        }
        if let Some(t) = c.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(self.invalid("t_max", "t_max must be positive"));
            }
        }
        if self.config.limit.mesh < 2 {
            return Err(self.invalid("mesh", "mesh must be at least 2"));
        }
        if let FamilySpec::Fixed { edges, weights } = &self.config.family {
            for (key, p) in [("edges", Some(edges)), ("weights", weights.as_ref())] {
                if let Some(p) = p {
                    if !self.resolve(p).is_file() {
                        return Err(self.invalid(key, format!("file {} does not exist", p.display())));
                    }
                }
            }
        }
        if let FamilySpec::Ptree { shape, .. } = &self.config.family {
            if !["uniform", "geometric", "heavy_atom", "explicit"].contains(&shape.as_str()) {
                return Err(self.invalid("shape", format!("unknown p-tree shape {shape:?}")));
            }
        }
        self.tree_family().map(|_| ())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.config.experiment.out)
    }

    pub fn tree_family(&self) -> Result<FamilyFactory, ConfigError> {
        Ok(match &self.config.family {
            FamilySpec::Cayley {} => FamilyFactory::Family(TreeFamily::Cayley),
            FamilySpec::Path {} => FamilyFactory::Path,
            FamilySpec::Star {} => FamilyFactory::Star,
            FamilySpec::Fixed { edges, weights } => {
                let read = |p: &Path| {
                    fs::File::open(self.resolve(p))
                        .map(BufReader::new)
                        .map_err(|e| self.invalid("edges", e.to_string()))
                };
                let mut tree = Tree::read_edge_list(read(edges)?).map_err(|e| self.invalid("edges", e.to_string()))?;
                if let Some(w) = weights {
                    let w = read_weights(read(w)?).map_err(|e| self.invalid("weights", e.to_string()))?;
                    tree = tree.with_weights(w).map_err(|e| self.invalid("weights", e.to_string()))?;
                }
                FamilyFactory::Family(TreeFamily::Fixed(tree))
            }
            FamilySpec::Gw { offspring } => {
                offspring
                    .check_conditionable()
                    .map_err(|e| self.invalid("offspring", e.to_string()))?;
                let normalization = match offspring {
                    OffspringDistribution::Stable { alpha } => stable_family(*alpha)
                        .map_err(|e| self.invalid("offspring", e.to_string()))?
                        .normalization,
                    mu => Normalization::Gaussian {
                        sigma: mu.variance().sqrt(),
                    },
                };
                FamilyFactory::Family(TreeFamily::Gw {
                    mu: offspring.clone(),
                    normalization,
                })
            }
            FamilySpec::Degseq { offspring, counts } => match (offspring, counts) {
                (Some(mu), None) => FamilyFactory::Family(TreeFamily::DegreeProfile(mu.clone())),
                (None, Some(c)) => FamilyFactory::Family(TreeFamily::DegreeSequence(
                    DegreeSequence::new(c.clone()).map_err(|e| self.invalid("counts", e.to_string()))?,
                )),
                _ => return Err(self.invalid("kind", "degseq needs exactly one of offspring or counts")),
            },
            FamilySpec::Ptree {
                shape,
                ratio,
                p1,
                probs,
            } => {
                let need = |v: Option<f64>, key: &str| v.ok_or_else(|| self.invalid("shape", format!("shape {shape:?} needs {key}")));
                let shape = match shape.as_str() {
                    "uniform" => PShape::Uniform,
                    "geometric" => PShape::Geometric {
                        ratio: need(*ratio, "ratio")?,
                    },
                    "heavy_atom" => PShape::HeavyAtom { p1: need(*p1, "p1")? },
                    "explicit" => PShape::Explicit {
                        probs: RankedProbability::new(
                            probs.clone().ok_or_else(|| self.invalid("shape", "shape \"explicit\" needs probs"))?,
                        )
                        .map_err(|e| self.invalid("probs", e.to_string()))?,
                    },
                    other => return Err(self.invalid("shape", format!("unknown p-tree shape {other:?}"))),
                };
                FamilyFactory::Family(TreeFamily::PTree(shape))
            }
        })
    }
}

/// A [`TreeFamily`] or one of the deterministic shapes sized per run.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyFactory {
    Family(TreeFamily),
    Path,
    Star,
}

impl FamilyFactory {
    pub fn family_at(&self, n: usize) -> Result<TreeFamily, ConfigError> {
        let fixed = |t: Result<Tree, _>| {
            t.map(TreeFamily::Fixed)
                .map_err(|e: crate::trees::TreeError| ConfigError::Invalid(e.to_string()))
        };
        match self {
            Self::Family(f) => Ok(f.clone()),
            Self::Path => fixed(Tree::path(n)),
            Self::Star => fixed(Tree::star(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "[experiment]\nseed = 7\nreplicates = 100\nsizes = [10, 20]\n\n[family]\nkind = \"cayley\"\n";

    #[test]
    fn parses_defaults() {
        let c = LoadedConfig::parse(BASIC, ".").unwrap();
        assert_eq!(c.config.experiment.seed, 7);
        assert_eq!(c.config.experiment.times, vec![1.0]);
        assert_eq!(c.config.experiment.top_k, 10);
        assert_eq!(c.config.limit.mesh, 1 << 14);
        assert_eq!(c.config.clocks.law, ClockKind::Exponential);
        assert_eq!(c.sha256, sha256_hex(BASIC.as_bytes()));
        assert_eq!(c.sha256.len(), 64);
    }

    #[test]
    fn big_seed_as_string() {
        let text = BASIC.replace("seed = 7", "seed = \"18446744073709551615\"");
        assert_eq!(LoadedConfig::parse(&text, ".").unwrap().config.experiment.seed, u64::MAX);
        let text = BASIC.replace("seed = 7", "seed = -1");
        assert!(matches!(LoadedConfig::parse(&text, "."), Err(ConfigError::Line { line: 2, .. })));
    }

    #[test]
    fn errors_carry_lines() {
        let text = BASIC.replace("sizes = [10, 20]", "sizes = []");
        match LoadedConfig::parse(&text, ".") {
            Err(ConfigError::Line { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let text = BASIC.replace("kind = \"cayley\"", "kind = \"cayley\"\ncolour = 3");
        assert!(matches!(LoadedConfig::parse(&text, "."), Err(ConfigError::Line { line: 6..=8, .. })));
        let text = BASIC.replace("replicates = 100", "replicates = \"many\"");
        assert!(matches!(LoadedConfig::parse(&text, "."), Err(ConfigError::Line { line: 3, .. })));
        let text = BASIC.replace("kind = \"cayley\"", "kind = \"fixed\"\nedges = \"missing.txt\"");
        assert!(matches!(LoadedConfig::parse(&text, "."), Err(ConfigError::Line { line: 8, .. })));
    }

    #[test]
    fn families_and_clocks() {
        let text = BASIC.replace("kind = \"cayley\"", "kind = \"gw\"\noffspring = { kind = \"stable\", alpha = 1.5 }")
            + "\n[clocks]\nlaw = \"uniform\"\nscale = \"natural\"\n";
        let c = LoadedConfig::parse(&text, ".").unwrap();
        let FamilyFactory::Family(f) = c.tree_family().unwrap() else { panic!() };
        let inst = f.at_size(1000).unwrap();
        let ClockLaw::Uniform { t_max } = c.config.clocks.law_for(&inst) else { panic!() };
        assert!((t_max - 1000f64.powf(1.0 - 1.0 / 1.5)).abs() < 1e-9);

        let text = BASIC.replace("kind = \"cayley\"", "kind = \"ptree\"\nshape = \"heavy_atom\"\np1 = 0.3");
        let c = LoadedConfig::parse(&text, ".").unwrap();
        assert_eq!(
            c.tree_family().unwrap(),
            FamilyFactory::Family(TreeFamily::PTree(PShape::HeavyAtom { p1: 0.3 }))
        );
        let text = BASIC.replace("kind = \"cayley\"", "kind = \"ptree\"\nshape = \"geometric\"");
        assert!(LoadedConfig::parse(&text, ".").is_err());

        let text = BASIC.replace("kind = \"cayley\"", "kind = \"degseq\"\ncounts = [2, 1, 1]");
        assert!(LoadedConfig::parse(&text, ".").is_ok());
        let text = BASIC.replace("kind = \"cayley\"", "kind = \"degseq\"\ncounts = [2, 1, 2]");
        assert!(LoadedConfig::parse(&text, ".").is_err());

        let text = BASIC.replace("kind = \"cayley\"", "kind = \"path\"");
        let c = LoadedConfig::parse(&text, ".").unwrap();
        assert_eq!(
            c.tree_family().unwrap().family_at(3).unwrap(),
            TreeFamily::Fixed(Tree::path(3).unwrap())
        );
    }
}
