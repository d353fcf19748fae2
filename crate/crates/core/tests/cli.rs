use std::path::Path;
use std::process::{Command, Output};

use gmk::data::load_dataset;
use gmk::eval::{encode_query, identify, identification_report, verification_sweep, QuerySet};
use gmk::learning::io::{load_model, save_model};
use gmk::learning::train;
use gmk::types::ModelConfig;

fn gmk(root: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gmk"));
    cmd.args(args)
        .arg(format!("--data.dir={}", root.join("data").display()))
        .arg(format!("--output.model_dir={}", root.join("model").display()))
        .arg(format!("--output.metrics_dir={}", root.join("metrics").display()))
        .arg(format!("--output.transcript={}", root.join("t.gmkt").display()))
        .env_remove("GMK_SEED");
    cmd.output().unwrap()
}

fn ok(root: &Path, args: &[&str]) -> String {
    let out = gmk(root, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &[&str] = &["--num_identities=16", "--dim=24", "--code_len=12", "--sparsity=3"];

fn with<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(SMALL);
    v.extend_from_slice(extra);
    v
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn errors_have_category_prefix_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, "[data]\nno_such_key = 3\n").unwrap();
    let bad = bad.display().to_string();
    for (args, category) in [
        (vec!["gen-data", "--noise_sigma=-1"], "config"),
        (vec!["gen-data", "--no_such_key=3"], "usage"),
        (vec!["gen-data", "--config", bad.as_str()], "config"),
        (vec!["train"], "io"),
        (vec!["frobnicate"], "usage"),
    ] {
        let out = gmk(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with(&format!("ERROR:{category}:")), "{args:?}: {err}");
    }
}

#[test]
fn gen_data_creates_missing_directories() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b");
    ok(&nested, &with("gen-data", &[]));
    let data = load_dataset(&nested.join("data")).unwrap();
    assert_eq!(data.enrolled.len(), 16);
}

#[test]
fn env_seed_overrides_config_but_not_flags() {
    let dir = tempfile::tempdir().unwrap();
    let read = |p: &Path| std::fs::read(p.join("data/enrolled.csv")).unwrap();
    let run = |sub: &str, env: Option<&str>, extra: &[&str]| {
        let root = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gmk"));
        cmd.args(with("gen-data", extra)).arg(format!("--data.dir={}", root.join("data").display()));
        match env {
            Some(s) => cmd.env("GMK_SEED", s),
            None => cmd.env_remove("GMK_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        read(&root)
    };
    let env5 = run("env5", Some("5"), &[]);
    let flag5 = run("flag5", None, &["--seed=5"]);
    let both = run("both", Some("9"), &["--seed=5"]);
    let zero = run("zero", None, &[]);
    assert_eq!(env5, flag5);
    assert_eq!(both, flag5);
    assert_ne!(env5, zero);
}

#[test]
fn singleton_groups_report_zero_within_trace() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &[]));
    ok(dir.path(), &with("train", &["--groups=16"]));
    let log = std::fs::read_to_string(dir.path().join("model/train.log")).unwrap();
    assert!(log.contains("final within_trace=0"), "{log}");
}

#[test]
fn baseline_keeps_assignment_fixed() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &[]));
    ok(dir.path(), &with("train", &["--groups=4", "--baseline=true", "--group_size=4"]));
    let trace = std::fs::read_to_string(dir.path().join("model/trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",0")), "{trace}");
    let model = load_model(&dir.path().join("model")).unwrap();
    assert_eq!(model.assignment.sizes(), vec![4; 4]);
}

#[test]
fn noiseless_singletons_verify_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &["--noise_sigma=0"]));
    ok(dir.path(), &with("train", &["--groups=16", "--lambda=0.5", "--gamma=0.05"]));
    ok(dir.path(), &with("eval-verify", &[]));
    let pfn = csv_column(&dir.path().join("metrics/verify.csv"), "pfn_at_pfp05");
    assert_eq!(pfn, vec!["0"]);
}

#[test]
fn single_group_identification_never_errs() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &[]));
    ok(dir.path(), &with("train", &["--groups=1"]));
    ok(dir.path(), &with("eval-identify", &[]));
    let p = csv_column(&dir.path().join("metrics/identify.csv"), "p_epsilon");
    assert_eq!(p, vec!["0"]);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &[]));
    ok(dir.path(), &with("train", &["--sweep.group_size=2,4", "--sweep.sparsity=2,3"]));
    let index = csv_column(&dir.path().join("model/index.csv"), "point");
    assert_eq!(index.len(), 4);
    for mode in ["verify", "identify", "security"] {
        ok(dir.path(), &with(&format!("eval-{mode}"), &[]));
        let rows = csv_column(&dir.path().join(format!("metrics/{mode}.csv")), "point");
        assert_eq!(rows, index, "{mode}");
    }
}

#[test]
fn saved_model_evaluates_like_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &[]));
    let data = load_dataset(&dir.path().join("data")).unwrap();
    let cfg = ModelConfig { code_len: 12, sparsity: 3, groups: 4, seed: 3, ..ModelConfig::default() };
    let model = train(&data.enrolled, &cfg).unwrap();
    save_model(&dir.path().join("saved"), &model, &[]).unwrap();
    let loaded = load_model(&dir.path().join("saved")).unwrap();
    assert_eq!(loaded, model);
    let q = QuerySet::from_dataset(&data, &model).unwrap();
    let ql = QuerySet::from_dataset(&data, &loaded).unwrap();
    assert_eq!(verification_sweep(&model, &q, 1).unwrap(), verification_sweep(&loaded, &ql, 1).unwrap());
    assert_eq!(
        identification_report(&model, &q, 0.05).unwrap(),
        identification_report(&loaded, &ql, 0.05).unwrap()
    );
}

fn demo(root: &Path, extra: &[&str]) -> (String, String) {
    let out = ok(root, &with("protocol-demo", extra));
    let get = |key: &str| {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap_or_else(|| panic!("{key} missing in {out}"))
            .to_string()
    };
    (get("decision"), get("plaintext_decision"))
}

#[test]
fn protocol_demo_decisions() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with("gen-data", &[]));
    ok(dir.path(), &with("train", &["--groups=16"]));
    assert_eq!(demo(dir.path(), &["--source=enrolled", "--query=5", "--tau=0"]), ("accept".into(), "accept".into()));
    assert_eq!(demo(dir.path(), &["--source=enrolled", "--query=5", "--tau=-1"]), ("reject".into(), "reject".into()));

    // cross-check against the plaintext evaluator on the stored model
    let model = load_model(&dir.path().join("model")).unwrap();
    let data = load_dataset(&dir.path().join("data")).unwrap();
    for (source, query, tau) in [("genuine", 3usize, 6i64), ("impostor", 2, 6), ("impostor", 0, 12)] {
        let x = match source {
            "genuine" => data.genuine.column(query),
            _ => data.impostors.column(query),
        };
        let p = encode_query(&model, &x).unwrap();
        let expected = if identify(&model, &p, tau).unwrap().is_some() { "accept" } else { "reject" };
        let (decision, plain) = demo(
            dir.path(),
            &[&format!("--source={source}"), &format!("--query={query}"), &format!("--tau={tau}")],
        );
        assert_eq!(decision, expected, "{source} {query} {tau}");
        assert_eq!(plain, expected);
    }
    assert!(std::fs::metadata(dir.path().join("t.gmkt")).unwrap().len() > 0);
}
