use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cbl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbl"))
        .args(args)
        .current_dir(dir)
        .env_remove("CBL_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

const TINY: &[&str] = &["--runs", "2", "--epochs", "2", "--embed-dim", "8", "--heads", "2", "--ff-dim", "16"];

#[test]
fn gen_writes_an_audited_dataset_deterministically() {
    let t = tempfile::tempdir().unwrap();
    let args = ["gen", "--paradigm", "three-frame", "--train", "320", "--test", "80", "--seed", "7", "--out"];
    let a = cbl(t.path(), &[&args[..], &["a"]].concat());
    let b = cbl(t.path(), &[&args[..], &["b"]].concat());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(code(&b), 0);
    for f in ["train.jsonl", "test.jsonl", "config.json", "audit.json"] {
        assert_eq!(read(t.path().join("a").join(f)), read(t.path().join("b").join(f)), "{f}");
    }
    assert_eq!(read(t.path().join("a/train.jsonl")).lines().count(), 320);
    let manifest: serde_json::Value = serde_json::from_str(&read(t.path().join("a/manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "gen");
    assert_eq!(manifest["seeds"], serde_json::json!([7]));
    assert_eq!(manifest["config"]["paradigm"], "three-frame");
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_2() {
    let t = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["gen", "--paradigm", "three-frame", "--train", "0", "--test", "80", "--out", "x"],
        &["gen", "--paradigm", "nine-frame", "--train", "10", "--test", "10", "--out", "x"],
        &["gen", "--paradigm", "three-frame", "--train", "10", "--test", "10"],
        &["exp", "exp7"],
        &["exp", "exp3", "--naive-sizes", "640,999", "--out", "x"],
        &["exp", "exp1", "--encoding", "pixels", "--out", "x"],
        &["probe", "--log", "missing.csv"],
        &["probe", "--log", "missing.csv", "--drop", "sometimes"],
        &["report", "nowhere"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = cbl(t.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn malformed_probe_log_exits_2() {
    let t = tempfile::tempdir().unwrap();
    std::fs::write(t.path().join("bad.csv"), "sequence_id,actor_kind,question_kind,outcome\na0_s0,animate,Q1_grasp,maybe\n").unwrap();
    let o = cbl(t.path(), &["probe", "--log", "bad.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let t = tempfile::tempdir().unwrap();
    std::fs::write(t.path().join("c.json"), r#"{"paradigm": "five-frame", "train": 40, "test": 10, "seed": 3, "out": "from-file"}"#).unwrap();
    let o = cbl(t.path(), &["gen", "--config", "c.json", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&read(t.path().join("from-file/manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["paradigm"], "five-frame");
    assert_eq!(manifest["seeds"], serde_json::json!([4]));

    std::fs::write(t.path().join("typo.json"), r#"{"paradgm": "five-frame"}"#).unwrap();
    assert_eq!(code(&cbl(t.path(), &["gen", "--config", "typo.json"])), 2);
}

#[test]
fn seed_env_var_overrides_the_default_only() {
    let t = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_cbl"));
        c.args(["gen", "--paradigm", "three-frame", "--train", "20", "--test", "8", "--out", out])
            .args(extra)
            .current_dir(t.path())
            .env("CBL_SEED", "11");
        assert!(c.status().unwrap().success());
        let m: serde_json::Value = serde_json::from_str(&read(t.path().join(out).join("manifest.json"))).unwrap();
        m["seeds"][0].as_u64().unwrap()
    };
    assert_eq!(run(&[], "env"), 11);
    assert_eq!(run(&["--seed", "2"], "flag"), 2);
}

#[test]
fn train_writes_checkpoint_and_curve_and_can_continue() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(&cbl(t.path(), &["gen", "--paradigm", "three-frame", "--train", "64", "--test", "16", "--out", "d"])), 0);
    let model = ["--embed-dim", "8", "--heads", "2", "--ff-dim", "16", "--epochs", "2"];
    let o = cbl(t.path(), &[&["train", "--data", "d", "--kind", "naive", "--out", "m"][..], &model].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve = read(t.path().join("m/curve.csv"));
    assert_eq!(curve.lines().next(), Some("epoch,test_acc,train_loss"));
    assert_eq!(curve.lines().count(), 4);
    assert!(t.path().join("m/model.ckpt").is_file());

    let o = cbl(t.path(), &["train", "--data", "d", "--kind", "naive", "--from", "m/model.ckpt", "--epochs", "1", "--out", "m2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // a checkpoint built for the naive token space cannot read binary inputs
    let o = cbl(t.path(), &["train", "--data", "d", "--encoding", "binary", "--from", "m/model.ckpt", "--out", "m3"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exp_writes_report_and_reproduces_from_its_manifest() {
    let t = tempfile::tempdir().unwrap();
    let o = cbl(t.path(), &[&["exp", "exp4", "--out", "r1"][..], TINY].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let root = t.path().join("r1/exp4");
    for kind in ["cognitive", "naive"] {
        for cond in ["T1", "T2"] {
            let csv = read(root.join(kind).join(cond).join("curve.csv"));
            assert!(csv.starts_with("epoch,mean_acc,sem,n_runs,condition,model_kind\n"));
            assert_eq!(csv.lines().count(), 4);
        }
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(root.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 9);

    let o = cbl(t.path(), &["exp", "exp4", "--config", "r1/exp4/manifest.json", "--out", "r2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for rel in ["report.json", "naive/T2/curve.csv", "cognitive/T1/summary.json"] {
        assert_eq!(read(root.join(rel)), read(t.path().join("r2/exp4").join(rel)), "{rel}");
    }

    let o = cbl(t.path(), &["report", "r1", "--out", "summary.csv"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("exp4") && table.contains("naive") && table.contains("T2"));
    assert_eq!(read(t.path().join("summary.csv")).lines().count(), 5);
}

#[test]
fn exp1_default_sizes_give_four_curves() {
    let t = tempfile::tempdir().unwrap();
    let o = cbl(t.path(), &[&["exp", "exp1", "--epochs", "1", "--out", "r"][..], &TINY[..2], &TINY[4..]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut curves = 0;
    for kind in ["cognitive", "naive"] {
        for size in ["small", "large"] {
            curves += t.path().join("r/exp1").join(kind).join(size).join("curve.csv").is_file() as usize;
        }
    }
    assert_eq!(curves, 4);
}

#[test]
fn probe_reproduces_the_fixture_analysis() {
    let t = tempfile::tempdir().unwrap();
    let log = fixture("probe_log.csv");
    let o = cbl(t.path(), &["probe", "--log", log.to_str().unwrap(), "--out", "p"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a: serde_json::Value = serde_json::from_str(&read(t.path().join("p/analysis.json"))).unwrap();
    assert_eq!(a["full"]["n"], 176);
    assert_eq!(a["full"]["k_success"], 73);
    assert!((a["full"]["p_value"].as_f64().unwrap() - 0.023).abs() < 0.002);
    assert_eq!(a["filtered"]["n"], 147);
    assert!((a["filtered"]["p_value"].as_f64().unwrap() - 0.934).abs() < 0.005);
    assert!(t.path().join("p/manifest.json").is_file());

    let o = cbl(t.path(), &["probe", "--log", log.to_str().unwrap(), "--drop", "none"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(!text.contains("filtered"));
    assert!(text.contains("by actor kind"));
}

#[test]
fn probe_template_matches_the_shipped_schema() {
    let t = tempfile::tempdir().unwrap();
    let o = cbl(t.path(), &["probe", "--template", "t.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(t.path().join("t.csv")), read(fixture("probe_log_template.csv")));
}

#[test]
fn thread_flag_is_accepted_and_sequential_matches_parallel() {
    let t = tempfile::tempdir().unwrap();
    let a = cbl(t.path(), &[&["--threads", "2", "exp", "exp4", "--out", "a"][..], TINY].concat());
    let b = cbl(t.path(), &[&["--sequential", "exp", "exp4", "--out", "b"][..], TINY].concat());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(code(&b), 0);
    assert_eq!(read(t.path().join("a/exp4/report.json")), read(t.path().join("b/exp4/report.json")));
    assert_eq!(code(&cbl(t.path(), &["--threads", "0", "report", "a"])), 2);
}
