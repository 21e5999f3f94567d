use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hopsim");

const SMALL: &str = "\
sbm_blocks = 30,30
p_in = 0.2
p_out = 0.02
servers = 3
layers = 2
fanout = 3
dim = 6
hidden = 4
classes = 3
batch = 4
iterations = 2
epochs = 3
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn compare_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}parallel = true\n"));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run(&["compare", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["compare", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("epoch,strategy,sim_seconds,steps,feature_bytes"));
    assert_eq!(text.lines().count(), 1 + 6 * 3);
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = run(&["train", "--config", &cfg, "--seed", "1"]);
    let b = run(&["train", "--config", &cfg, "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(run(&["train", "--config", &cfg, "--seed", "1"]).stdout, a.stdout);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "no_such_key = 3\n");
    assert_eq!(run(&["train", "--config", &bad]).status.code(), Some(2));
    let bad = write_config(dir.path(), "servers = 0\n");
    assert_eq!(run(&["compare", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(run(&["train", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn graph_and_partition_outputs_feed_back_in() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let edges = dir.path().join("g.txt");
    let parts = dir.path().join("p.txt");
    assert!(run(&["gen-graph", "--config", &cfg, "--out", edges.to_str().unwrap()]).status.success());
    assert!(run(&["partition", "--config", &cfg, "--out", parts.to_str().unwrap()]).status.success());
    let from_files = format!(
        "{SMALL}graph = edges\ngraph_path = {}\npartitioner = file\npartition_file = {}\n",
        edges.display(),
        parts.display()
    );
    let cfg2 = write_config(dir.path(), &from_files);
    let direct = run(&["train", "--config", &cfg]);
    let via_files = run(&["train", "--config", &cfg2]);
    assert!(via_files.status.success(), "{}", String::from_utf8_lossy(&via_files.stderr));
    assert_eq!(direct.stdout, via_files.stdout);
}

#[test]
fn train_dumps_batches_and_params() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let batches = dir.path().join("b.txt");
    let params = dir.path().join("p.txt");
    let out = run(&[
        "train",
        "--config",
        &cfg,
        "--dump-batches",
        batches.to_str().unwrap(),
        "--dump-params",
        params.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(batches).unwrap();
    assert_eq!(text.lines().count(), 3 * 2 * 3);
    let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
    assert_eq!(&first[..3], &["0", "0", "0"]);
    assert_eq!(first[3].split(',').count(), 4);
    assert!(!fs::read_to_string(params).unwrap().trim().is_empty());
}

#[test]
fn locality_and_merge_study_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["locality", "--config", &cfg, "--servers", "2,4", "--partitioners", "hash,greedy", "--batch", "16", "--iterations", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("servers,layers,sampler,partitioner,r_micro_pct,r_sub_pct"));
    assert_eq!(text.lines().count(), 5);

    let cfg = write_config(dir.path(), &format!("{SMALL}sync_overhead = 1\nbandwidth = inf\nlatency = 0\nkernel_launch = 0\ncompute_rate = 0\nepochs = 5\n"));
    let out = run(&["merge-study", "--config", &cfg]);
    assert!(out.status.success());
    let log = String::from_utf8(out.stderr).unwrap();
    assert!(log.contains("columns per epoch [3, 3, 2, 1, 1]"), "{log}");
}
