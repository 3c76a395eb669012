//! The `treefrag` command line: subcommands, artifact writing and exit codes
//! (0 pass, 1 check failure, 2 usage or config error).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::acceptance::{run_criterion, CRITERIA, DEFAULT_SEED};
use crate::cadlag::counterexample_pair;
use crate::config::{ConfigError, FamilySpec, LoadedConfig};
use crate::excursionlab::{limit_samples, marginal_comparison, write_limit_csv, MarginalReport};
use crate::fragmenter::{draw_clocks, fragment};
use crate::poissonlab::{identity_test, tail_report_with, write_tail_csv, PoissonError, TailGrids};
use crate::seed::replicate_rng;
use crate::tightlab::{
    mc_expected_q, scaling_study, trajectory_audit, write_reports_csv, TreeFamily,
};

#[derive(Debug, Parser)]
#[command(name = "treefrag", version, about = "Tree fragmentation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of masses written per state row.
    #[arg(long = "top-k", global = true)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample trees and write edge lists plus a functional summary.
    Generate,
    /// Fragment one tree per size and write its trajectory as JSON and CSV.
    Fragment,
    /// Monte Carlo expected Q and scaling statistics.
    Stats,
    /// Poisson-embedding identity and tail tables for a p-tree family.
    Tails,
    /// Largest-mass comparison with the Brownian excursion limit.
    Limit,
    /// Pairwise uniform distances of the counterexample paths.
    Counterexample,
    /// The full acceptance suite.
    Acceptance {
        /// Run only these criteria.
        #[arg(long)]
        only: Vec<u8>,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 2,
            Self::Check(_) | Self::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

/// Everything the subcommands share once flags and config are resolved.
pub struct Context {
    pub config: Option<LoadedConfig>,
    pub seed: u64,
    pub out: PathBuf,
    pub top_k: usize,
    meta: Value,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self, RunError> {
        let config = cli.config.as_deref().map(LoadedConfig::load).transpose()?;
        let seed = cli
            .seed
            .or(config.as_ref().map(|c| c.config.experiment.seed))
            .unwrap_or(DEFAULT_SEED);
        let out = cli
            .out
            .clone()
            .or(config.as_ref().map(LoadedConfig::out_dir))
            .unwrap_or_else(|| PathBuf::from("out"));
        let top_k = cli
            .top_k
            .or(config.as_ref().map(|c| c.config.experiment.top_k))
            .unwrap_or(10);
        let hash = config.as_ref().map_or("none".to_string(), |c| c.sha256.clone());
        Ok(Self {
            meta: json!({ "config_sha256": hash, "seed": seed }),
            config,
            seed,
            out,
            top_k,
        })
    }

    fn config(&self, command: &str) -> Result<&LoadedConfig, RunError> {
        self.config
            .as_ref()
            .ok_or_else(|| RunError::Usage(format!("{command} needs --config")))
    }

    /// The comment line heading every CSV artifact.
    pub fn header(&self) -> String {
        format!("# config_sha256={} seed={}", self.meta["config_sha256"].as_str().unwrap_or("none"), self.seed)
    }

    fn path(&self, name: &str) -> Result<PathBuf, RunError> {
        fs::create_dir_all(&self.out).map_err(|e| runtime(format!("{}: {e}", self.out.display())))?;
        Ok(self.out.join(name))
    }

    fn write_with(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<(), RunError>) -> Result<PathBuf, RunError> {
        let path = self.path(name)?;
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.header()).map_err(runtime)?;
        body(&mut buf)?;
        fs::write(&path, buf).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_rows<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf, RunError> {
        self.write_with(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            for r in rows {
                w.serialize(r).map_err(runtime)?;
            }
            w.flush().map_err(runtime)
        })
    }

    /// Writes `value` (a JSON object) with an added `meta` key.
    fn write_json(&self, name: &str, mut value: Value) -> Result<PathBuf, RunError> {
        if let Value::Object(map) = &mut value {
            map.insert("meta".into(), self.meta.clone());
        }
        let path = self.path(name)?;
        let text = serde_json::to_string_pretty(&value).map_err(runtime)? + "\n";
        fs::write(&path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Reads any CSV artifact written by the runner, skipping its header line.
pub fn read_artifact_csv<T: DeserializeOwned, R: io::Read>(input: R) -> Result<Vec<T>, csv::Error> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input)
        .deserialize()
        .collect()
}

/// Parses the arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs `cli`, returning lines for stdout.
pub fn run(cli: &Cli) -> Result<Vec<String>, RunError> {
    let ctx = Context::new(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(RunError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(runtime)?;
    pool.install(|| match &cli.command {
        Command::Generate => generate(&ctx),
        Command::Fragment => fragment_cmd(&ctx),
        Command::Stats => stats(&ctx),
        Command::Tails => tails(&ctx),
        Command::Limit => limit(&ctx),
        Command::Counterexample => counterexample(&ctx),
        Command::Acceptance { only } => acceptance(&ctx, only),
    })
}

fn families(cfg: &LoadedConfig) -> Result<Vec<(usize, TreeFamily)>, RunError> {
    let factory = cfg.tree_family()?;
    cfg.config
        .experiment
        .sizes
        .iter()
        .map(|&n| Ok((n, factory.family_at(n)?)))
        .collect()
}

#[derive(Serialize)]
struct TreeRow {
    n: usize,
    replicate: u64,
    vertices: usize,
    diameter: usize,
    height: Option<usize>,
    total_path_length: Option<u64>,
    mean_distance: f64,
}

fn generate(ctx: &Context) -> Result<Vec<String>, RunError> {
    use rayon::prelude::*;
    let cfg = ctx.config("generate")?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (n, family) in families(cfg)? {
        let inst = family.at_size(n).map_err(runtime)?;
        let tag = format!("generate_{n}");
        let trees: Vec<_> = (0..cfg.config.experiment.replicates as u64)
            .into_par_iter()
            .map(|i| inst.sample(&mut replicate_rng(ctx.seed, &tag, i)).map_err(runtime))
            .collect::<Result<_, _>>()?;
        for (i, t) in trees.iter().enumerate() {
            let s = t.summary();
            rows.push(TreeRow {
                n,
                replicate: i as u64,
                vertices: t.n(),
                diameter: s.diameter,
                height: s.height,
                total_path_length: s.total_path_length,
                mean_distance: s.mean_pairwise_distance,
            });
        }
        let first = &trees[0];
        let path = ctx.write_with(&format!("tree_n{n}.edges"), |buf| first.write_edge_list(buf).map_err(runtime))?;
        lines.push(format!("wrote {}", path.display()));
        if first.weights().is_some() {
            let path = ctx.write_with(&format!("tree_n{n}.weights"), |buf| first.write_weights(buf).map_err(runtime))?;
            lines.push(format!("wrote {}", path.display()));
        }
    }
    let path = ctx.write_rows("trees.csv", &rows)?;
    lines.push(format!("wrote {} ({} trees)", path.display(), rows.len()));
    Ok(lines)
}

fn fragment_cmd(ctx: &Context) -> Result<Vec<String>, RunError> {
    let cfg = ctx.config("fragment")?;
    let mut lines = Vec::new();
    for (n, family) in families(cfg)? {
        let inst = family.at_size(n).map_err(runtime)?;
        let law = cfg.config.clocks.law_for(&inst);
        let rng = &mut replicate_rng(ctx.seed, &format!("fragment_{n}"), 0);
        let tree = inst.sample(rng).map_err(runtime)?;
        let traj = fragment(&tree, &draw_clocks(&tree, law, rng).map_err(runtime)?).map_err(runtime)?;
        let value: Value = serde_json::from_str(&traj.to_json().map_err(runtime)?).map_err(runtime)?;
        let json_path = ctx.write_json(&format!("trajectory_n{n}.json"), value)?;
        let csv_path = ctx.write_with(&format!("trajectory_n{n}.csv"), |buf| {
            traj.write_csv(buf, ctx.top_k).map_err(runtime)
        })?;
        let audit = trajectory_audit(&traj, &cfg.config.experiment.times, &[1, 2, 5]).map_err(runtime)?;
        if let Some(v) = audit.violations.first() {
            return Err(RunError::Check(format!("trajectory audit at n = {n}: {:?}: {}", v.kind, v.detail)));
        }
        lines.push(format!(
            "n = {n}: {} splits, audit {} checks ok; wrote {} and {}",
            traj.events().len(),
            audit.checks,
            json_path.display(),
            csv_path.display()
        ));
    }
    Ok(lines)
}

fn stats(ctx: &Context) -> Result<Vec<String>, RunError> {
    let cfg = ctx.config("stats")?;
    let e = &cfg.config.experiment;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (n, family) in families(cfg)? {
        let inst = family.at_size(n).map_err(runtime)?;
        let law = cfg.config.clocks.law_for(&inst);
        for &t in &e.times {
            let r = mc_expected_q(&inst, law, t, e.replicates, ctx.seed).map_err(|e| RunError::Usage(e.to_string()))?;
            if !r.within(4.0) {
                failures.push(format!("expected Q at n = {n}, t = {t}: {} vs exact {:?}", r.estimate, r.exact_value));
            }
            reports.push(r);
        }
    }
    let mut lines = vec![format!("wrote {}", ctx.write_with("expected_q.csv", |buf| {
        write_reports_csv(&reports, buf).map_err(runtime)
    })?.display())];
    let random = !matches!(
        cfg.config.family,
        FamilySpec::Fixed { .. } | FamilySpec::Path {} | FamilySpec::Star {}
    );
    if random && e.sizes.windows(2).all(|w| w[0] < w[1]) {
        let family = cfg.tree_family()?.family_at(e.sizes[0])?;
        let rows = scaling_study(&family, &e.sizes, e.replicates, ctx.seed).map_err(runtime)?;
        lines.push(format!("wrote {}", ctx.write_rows("scaling.csv", &rows)?.display()));
    }
    match failures.is_empty() {
        true => Ok(lines),
        false => Err(RunError::Check(failures.join("; "))),
    }
}

fn tails(ctx: &Context) -> Result<Vec<String>, RunError> {
    let cfg = ctx.config("tails")?;
    let e = &cfg.config.experiment;
    let Ok(TreeFamily::PTree(shape)) = cfg.tree_family()?.family_at(e.sizes[0]) else {
        return Err(RunError::Usage("tails needs a ptree family".into()));
    };
    let p = shape.at_size(e.sizes[0]).map_err(runtime)?;
    let poisson = |err: PoissonError| match err {
        PoissonError::Generator(_) | PoissonError::Csv(_) => runtime(err),
        other => RunError::Usage(other.to_string()),
    };
    let mut grids = TailGrids::defaults(&p);
    let section = &cfg.config.tails;
    for (dst, src) in [
        (&mut grids.t, &section.t_grid),
        (&mut grids.x, &section.x_grid),
        (&mut grids.k, &section.k_grid),
        (&mut grids.chernoff, &section.chernoff_grid),
    ] {
        if let Some(g) = src {
            *dst = g.clone();
        }
    }
    let identity = identity_test(&p, e.replicates, ctx.seed).map_err(poisson)?;
    let report = tail_report_with(&p, e.replicates, ctx.seed, &grids).map_err(poisson)?;
    let mut lines = vec![format!(
        "wrote {}",
        ctx.write_json("identity.json", serde_json::to_value(&identity).map_err(runtime)?)?.display()
    )];
    for (name, rows) in [
        ("tails_time.csv", &report.time_tail),
        ("tails_distance.csv", &report.distance_tail),
        ("tails_binomial.csv", &report.binomial),
        ("tails_chernoff.csv", &report.chernoff),
    ] {
        let path = ctx.write_with(name, |buf| write_tail_csv(rows, buf).map_err(runtime))?;
        lines.push(format!("wrote {}", path.display()));
    }
    if identity.test.p_value <= 0.01 {
        return Err(RunError::Check(format!("identity test p = {}", identity.test.p_value)));
    }
    let broken: Vec<String> = report
        .time_tail
        .iter()
        .map(|r| ("time tail", r))
        .chain(report.distance_tail.iter().map(|r| ("distance tail", r)))
        .filter(|(_, r)| !r.pass)
        .map(|(what, r)| format!("{what} at {}: {} > {}", r.x_or_t, r.upper_conf, r.paper_bound))
        .collect();
    match broken.is_empty() {
        true => Ok(lines),
        false => Err(RunError::Check(broken.join("; "))),
    }
}

fn limit(ctx: &Context) -> Result<Vec<String>, RunError> {
    let cfg = ctx.config("limit")?;
    let e = &cfg.config.experiment;
    let mesh = cfg.config.limit.mesh;
    let mut reports: Vec<MarginalReport> = Vec::new();
    for &n in &e.sizes {
        for &t in &e.times {
            reports.push(marginal_comparison(n, t, e.replicates, mesh, ctx.seed).map_err(|e| RunError::Usage(e.to_string()))?);
        }
    }
    #[derive(Serialize)]
    struct Row {
        n: usize,
        t: f64,
        mesh: usize,
        discrete_samples: usize,
        limit_samples: usize,
        ks: f64,
        p_value: f64,
        discrete_mean: f64,
        limit_mean: f64,
    }
    let rows: Vec<Row> = reports
        .iter()
        .map(|r| Row {
            n: r.n,
            t: r.t,
            mesh: r.mesh,
            discrete_samples: r.discrete_samples,
            limit_samples: r.limit_samples,
            ks: r.ks.statistic,
            p_value: r.ks.p_value,
            discrete_mean: r.discrete_mean,
            limit_mean: r.limit_mean,
        })
        .collect();
    let samples = limit_samples(&e.times, e.replicates, mesh, ctx.seed).map_err(runtime)?;
    Ok(vec![
        format!("wrote {}", ctx.write_rows("limit_ks.csv", &rows)?.display()),
        format!(
            "wrote {}",
            ctx.write_with("limit_samples.csv", |buf| write_limit_csv(&samples, buf).map_err(runtime))?.display()
        ),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CounterexampleRow {
    pub n: usize,
    pub m: usize,
    pub distance: f64,
}

/// Uniform distances between `g_n` and `g_m` for `2 <= n < m <= 64`.
pub fn counterexample_rows() -> Result<Vec<CounterexampleRow>, RunError> {
    let paths: Vec<_> = (2..=64).map(counterexample_pair).collect::<Result<_, _>>().map_err(runtime)?;
    let mut rows = Vec::new();
    for n in 2..=64usize {
        for m in n + 1..=64 {
            rows.push(CounterexampleRow {
                n,
                m,
                distance: paths[n - 2].g.uniform_distance(&paths[m - 2].g).map_err(runtime)?,
            });
        }
    }
    let hypothesis = paths.iter().all(|p| p.satisfies_monotone_hypothesis(2));
    if !hypothesis {
        return Err(RunError::Check("monotone hypothesis with M = 2".into()));
    }
    Ok(rows)
}

fn counterexample(ctx: &Context) -> Result<Vec<String>, RunError> {
    let rows = counterexample_rows()?;
    let path = ctx.write_rows("counterexample.csv", &rows)?;
    let far = rows.iter().filter(|r| r.m >= 2 * r.n);
    let min = far.clone().map(|r| r.distance).fold(f64::INFINITY, f64::min);
    if let Some(r) = far.clone().find(|r| r.distance < 0.5 - 1e-12) {
        return Err(RunError::Check(format!("uniform distance ({}, {}) = {}", r.n, r.m, r.distance)));
    }
    Ok(vec![
        format!("wrote {} ({} pairs)", path.display(), rows.len()),
        format!("min distance over m >= 2n: {min:.12}"),
    ])
}

fn acceptance(ctx: &Context, only: &[u8]) -> Result<Vec<String>, RunError> {
    let ids: Vec<u8> = if only.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        if let Some(bad) = only.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
            return Err(RunError::Usage(format!("no criterion {bad}")));
        }
        only.to_vec()
    };
    let mut outcomes = Vec::new();
    let stdout = io::stdout();
    for id in ids {
        let o = run_criterion(id, ctx.seed);
        let _ = writeln!(stdout.lock(), "{o}");
        outcomes.push(o);
    }
    let path = ctx.write_json("acceptance.json", json!({ "criteria": outcomes }))?;
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("criterion {} ({})", o.id, o.name))
        .collect();
    if !failed.is_empty() {
        return Err(RunError::Check(failed.join(", ")));
    }
    Ok(vec![format!("all {} criteria passed; wrote {}", outcomes.len(), path.display())])
}
