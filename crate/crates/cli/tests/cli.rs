use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperkern")).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scheme_commands() {
    let out = hk(&["scheme", "vertices", "--n", "4", "--p", "2", "--json"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let third: Vec<f64> = serde_json::from_value(v["vertices"][2].clone()).unwrap();
    for (a, b) in third.iter().zip([1.0, -1.5, 3.0]) {
        assert!((a - b).abs() < 1e-9);
    }
    let out = hk(&["scheme", "delta", "--n", "4", "--p", "2"]);
    assert_eq!(json_of(&out)["delta"][0][0], 6.0);

    let good = hk(&["scheme", "check", "--n", "4", "--p", "2", "--beta", "1,-1.5,3"]);
    assert_eq!(good.status.code(), Some(0));
    let bad = hk(&["scheme", "check", "--n", "4", "--p", "2", "--beta", "0,0,2"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json_of(&bad)["admissible"], false);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hk(&["scheme", "delta", "--n", "4"]).status.code(), Some(2));
    assert_eq!(hk(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hk(&["scheme", "delta", "--n", "4", "--p", "3"]).status.code(), Some(2));
    assert_eq!(hk(&["verify", "--inject", "nonsense"]).status.code(), Some(2));
}

#[test]
fn kernel_eval_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("u.json");
    assert!(hk(&["kernel", "universal", "--n", "4", "--out", path(&spec)]).status.success());
    let out = hk(&["kernel", "eval", "--spec", path(&spec), "--x", "1100", "--y", "1100"]);
    assert!((json_of(&out)["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn gen_train_and_rademacher() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let out = hk(&["gen", "--n", "8", "--s", "3", "--literals", "0", "--m", "60", "--seed", "3", "--out", path(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for algo in ["pegasos", "mkl"] {
        let model = dir.path().join(format!("{algo}.json"));
        let out = hk(&[
            "train", "--algo", algo, "--data", path(&data), "--loss", "hinge", "--B", "1", "--eps", "0.1",
            "--seed", "1", "--out", path(&model),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let saved: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
        for key in ["spec", "support", "alphas", "report"] {
            assert!(saved.get(key).is_some(), "{key}");
        }
        assert_eq!(saved["support"].as_array().unwrap().len(), 60);
        assert_eq!(saved["report"]["seed"], 1);
    }

    let out = hk(&["rademacher", "--data", path(&data), "--B", "1", "--trials", "50", "--seed", "2", "--json"]);
    let v = json_of(&out);
    assert!(v["mean"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());
    assert!(v.get("stderr").is_some());
}

#[test]
fn same_seed_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let ma = dir.path().join("ma.json");
    let mb = dir.path().join("mb.json");
    for (d, m) in [(&a, &ma), (&b, &mb)] {
        hk(&["gen", "--n", "6", "--p", "3", "--literals", "0,1", "--m", "30", "--noise", "0.1", "--seed", "5", "--out", path(d)]);
        hk(&["train", "--algo", "pegasos", "--data", path(d), "--seed", "5", "--epochs", "20", "--out", path(m)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
}

#[test]
fn embed_build_and_apply() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.bin");
    let out = hk(&["embed", "build", "--n", "2", "--eps", "0.3", "--seed", "4", "--out", path(&pair), "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let info = json_of(&out);
    let width = info["width"].as_u64().unwrap() as usize;
    assert_eq!(&std::fs::read(&pair).unwrap()[..4], b"JKEM");

    let input = dir.path().join("pts.jsonl");
    std::fs::write(&input, "{\"x\": [0.0, 0.0], \"y\": 1}\n{\"x\": [0.5, 1.0], \"y\": -1}\n").unwrap();
    let bits = dir.path().join("bits.jsonl");
    let out = hk(&["embed", "apply", "--pair", path(&pair), "--role", "2", "--in", path(&input), "--out", path(&bits)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&bits).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let first = rows[0]["x"].as_str().unwrap();
    assert_eq!(first.len(), width);
    assert!(first.chars().all(|c| c == '0'));
    assert_eq!(hk(&["embed", "apply", "--pair", path(&pair), "--role", "3", "--in", path(&input)]).status.code(), Some(2));

    let wide = hk(&["embed", "build", "--n", "50", "--eps", "0.01", "--out", path(&dir.path().join("x.bin"))]);
    assert_eq!(wide.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&wide.stderr).contains("epsilon must be at least"));
}

#[test]
fn bench_reports() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = hk(&[
        "bench", "--n", "10", "--s", "3", "--literals", "2", "--m", "80", "--algo", "sparse-analytic", "--out",
        path(&report), "--quiet",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["test"]["zero_one"], 0.0);
    assert_eq!(v["config"]["algo"], "sparse-analytic");
}

#[test]
fn verify_and_fault_injection() {
    let out = hk(&["verify", "--max-n", "5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["passed"], true);
    for (fault, check) in [("delta-sign", "spectral"), ("vertex-norm", "vertex_validity"), ("conjugate-sign", "fenchel_young")] {
        let out = hk(&["verify", "--max-n", "5", "--inject", fault, "--json"]);
        assert_eq!(out.status.code(), Some(1), "{fault}");
        let v = json_of(&out);
        assert_eq!(v["failures"][0]["check"], check);
        assert!(v["failures"][0]["params"].is_object());
    }
}
