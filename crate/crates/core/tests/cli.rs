use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde::Deserialize;
use treefrag::excursionlab::read_limit_csv;
use treefrag::fragmenter::{read_trajectory_csv, FragmentationTrajectory};
use treefrag::poissonlab::read_tail_csv;
use treefrag::runner::{read_artifact_csv, CounterexampleRow};
use treefrag::tightlab::{read_reports_csv, ScalingRow};
use treefrag::trees::Tree;

fn treefrag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treefrag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treefrag-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_ok(args: &[&str]) -> String {
    let out = treefrag(args);
    assert!(
        out.status.success(),
        "{args:?}: {}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const TWO_VERTEX: &str = "[experiment]\nseed = 3\nreplicates = 100\nsizes = [2]\ntimes = [0.0, 1.0]\n\n[family]\nkind = \"path\"\n";

#[test]
fn fragment_is_byte_identical_across_runs_and_threads() {
    let dir = scratch("fragment");
    let cfg = write_config(&dir, TWO_VERTEX);
    let mut outputs = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = dir.join(run);
        run_ok(&["fragment", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        outputs.push((
            fs::read(out.join("trajectory_n2.json")).unwrap(),
            fs::read(out.join("trajectory_n2.csv")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let json = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(json.contains("\"config_sha256\""));
    let traj = FragmentationTrajectory::from_json(&json).unwrap();
    assert_eq!(traj.n(), 2);
    assert_eq!(traj.events().len(), 1);
    assert_eq!(traj.events()[0].children, [0.5, 0.5]);
    let rows = read_trajectory_csv(&outputs[0].1[..]).unwrap();
    assert_eq!(rows[0].1[..2], [1.0, 0.0]);
    assert_eq!(rows[1].0, traj.events()[0].time);
    assert_eq!(rows[1].1[..2], [0.5, 0.5]);

    let seeded = dir.join("d");
    run_ok(&["fragment", "--config", &cfg, "--out", seeded.to_str().unwrap(), "--seed", "4"]);
    assert_ne!(fs::read(seeded.join("trajectory_n2.json")).unwrap(), outputs[0].0);
}

#[test]
fn counterexample_csv() {
    let dir = scratch("counterexample");
    run_ok(&["counterexample", "--out", dir.to_str().unwrap()]);
    let text = fs::read_to_string(dir.join("counterexample.csv")).unwrap();
    assert!(text.starts_with("# config_sha256=none seed="));
    let rows: Vec<CounterexampleRow> = read_artifact_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 63 * 62 / 2);
    assert!(rows.iter().filter(|r| r.m >= 2 * r.n).all(|r| r.distance >= 0.5 - 1e-12));
    assert!(rows.iter().all(|r| (r.distance - (1.0 - r.n as f64 / r.m as f64)).abs() < 1e-12));
}

#[derive(Deserialize)]
struct TreeRow {
    n: usize,
    vertices: usize,
    diameter: usize,
    mean_distance: f64,
}

#[test]
fn generate_and_stats_round_trip() {
    let dir = scratch("generate");
    let cfg = write_config(
        &dir,
        "[experiment]\nseed = 9\nreplicates = 100\nsizes = [50, 100]\ntimes = [0.5, 1.0]\nout = \"out\"\n\n[family]\nkind = \"ptree\"\nshape = \"geometric\"\nratio = 0.95\n\n[clocks]\nlaw = \"uniform\"\nscale = \"natural\"\n",
    );
    run_ok(&["generate", "--config", &cfg]);
    let out = dir.join("out");
    let rows: Vec<TreeRow> = read_artifact_csv(fs::File::open(out.join("trees.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.vertices == r.n && r.mean_distance <= r.diameter as f64));
    let edges = fs::read(out.join("tree_n50.edges")).unwrap();
    let tree = Tree::read_edge_list(&edges[..]).unwrap();
    assert_eq!(tree.n(), 50);
    assert!(out.join("tree_n50.weights").is_file());

    run_ok(&["stats", "--config", &cfg]);
    let reports = read_reports_csv(fs::File::open(out.join("expected_q.csv")).unwrap()).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r.replicates == 100 && r.estimate > 0.0 && r.estimate <= 1.0));
    let scaling: Vec<ScalingRow> = read_artifact_csv(fs::File::open(out.join("scaling.csv")).unwrap()).unwrap();
    assert_eq!(scaling.iter().map(|r| r.n).collect::<Vec<_>>(), vec![50, 100]);
}

#[test]
fn exact_stats_on_a_fixed_tree() {
    let dir = scratch("fixed");
    fs::write(dir.join("star.edges"), "# star on four vertices\n0 1\n0 2\n0 3\n").unwrap();
    let cfg = write_config(
        &dir,
        "[experiment]\nseed = 2\nreplicates = 10000\nsizes = [4]\ntimes = [0.6931471805599453]\n\n[family]\nkind = \"fixed\"\nedges = \"star.edges\"\n",
    );
    let out = dir.join("out");
    run_ok(&["stats", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let reports = read_reports_csv(fs::File::open(out.join("expected_q.csv")).unwrap()).unwrap();
    assert!((reports[0].exact_value.unwrap() - 0.53125).abs() < 1e-12);
    assert!(!out.join("scaling.csv").exists());
}

#[test]
fn tails_and_limit_artifacts_parse() {
    let dir = scratch("tails");
    let cfg = write_config(
        &dir,
        "[experiment]\nseed = 5\nreplicates = 2000\nsizes = [50]\n\n[family]\nkind = \"ptree\"\nshape = \"uniform\"\n",
    );
    let out = dir.join("out");
    run_ok(&["tails", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let time = read_tail_csv(fs::File::open(out.join("tails_time.csv")).unwrap()).unwrap();
    assert_eq!(time.len(), 5);
    assert!(time.iter().all(|r| r.pass));
    assert_eq!(read_tail_csv(fs::File::open(out.join("tails_distance.csv")).unwrap()).unwrap().len(), 3);
    let identity: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("identity.json")).unwrap()).unwrap();
    assert_eq!(identity["meta"]["seed"], 5);

    let cfg = write_config(
        &dir,
        "[experiment]\nseed = 5\nreplicates = 500\nsizes = [100]\ntimes = [0.0, 1.0]\n\n[family]\nkind = \"cayley\"\n\n[limit]\nmesh = 1024\n",
    );
    run_ok(&["limit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let samples = read_limit_csv(fs::File::open(out.join("limit_samples.csv")).unwrap()).unwrap();
    assert_eq!(samples.len(), 1000);
    assert!(samples.iter().filter(|s| s.t == 0.0).all(|s| s.m1 == 1.0));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = scratch("errors");
    let cfg = write_config(&dir, &TWO_VERTEX.replace("sizes = [2]", "sizes = \"two\""));
    let out = treefrag(&["fragment", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    assert_eq!(treefrag(&["fragment"]).status.code(), Some(2));
    assert_eq!(treefrag(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(treefrag(&["acceptance", "--only", "12"]).status.code(), Some(2));
    let cfg = write_config(&dir, &TWO_VERTEX.replace("kind = \"path\"", "kind = \"cayley\"\n[tails]\nx_grid = [4.0]"));
    assert_eq!(treefrag(&["tails", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn acceptance_subcommand_single_criterion() {
    let dir = scratch("acceptance");
    let stdout = run_ok(&["acceptance", "--only", "10", "--out", dir.to_str().unwrap()]);
    assert!(stdout.contains("[PASS] criterion 10"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("acceptance.json")).unwrap()).unwrap();
    assert_eq!(json["criteria"][0]["passed"], true);
}
