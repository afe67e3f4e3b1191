use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gamecx::behavioral::predict;
use gamecx::model::ModelSpec;
use gamecx::{Params, Role};
use gamecx_cli::io::{read_games, read_records, read_trials};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gamecx"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stderr),
        String::from_utf8_lossy(&out.stdout)
    );
    out
}

fn small_games(dir: &Path, seed: &str, name: &str) -> PathBuf {
    run(dir, &["generate", "--seed", seed, "--quotas", "1,1,1", "--untrimmed", "-o", name]);
    dir.join(name)
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|_| panic!("no JSON error record in {stderr:?}"))
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_games(dir.path(), "7", "a.json");
    let b = small_games(dir.path(), "7", "b.json");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(dir.path().join("a.json.provenance.json")).unwrap(), fs::read(dir.path().join("b.json.provenance.json")).unwrap());
    let c = small_games(dir.path(), "8", "c.json");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let games = read_games(&a).unwrap();
    assert_eq!(games.len(), 288);
    let prov: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a.json.provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["seed"], 7);
    assert_eq!(prov["command"], "generate");
}

#[test]
fn default_quotas_give_2416_instances() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["generate", "--seed", "1", "-o", "g.json"]);
    assert_eq!(read_games(&dir.path().join("g.json")).unwrap().len(), 2416);
}

#[test]
fn unknown_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let games = small_games(dir.path(), "1", "g.json");
    let out = bin()
        .current_dir(dir.path())
        .args(["simulate", "--games", games.to_str().unwrap(), "--model", "L9+QR", "-o", "t.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "invalid_spec");
    assert_eq!(rec["exit_code"], 2);
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn bad_flags_and_missing_files_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["fit", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"], "usage");
    let out = bin().current_dir(dir.path()).args(["classify", "--games", "missing.json", "-o", "x.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"], "io");
    assert!(bin().arg("--help").output().unwrap().status.success());
}

#[test]
fn classify_solve_and_features_cover_every_game() {
    let dir = tempfile::tempdir().unwrap();
    let games = small_games(dir.path(), "3", "g.json");
    let g = games.to_str().unwrap();
    for (cmd, file) in [("classify", "c.csv"), ("solve", "s.csv"), ("features", "f.csv")] {
        run(dir.path(), &[cmd, "--games", g, "-o", file]);
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# gamecx") && lines[1].starts_with("# config_hash=") && lines[2] == "# seed=none");
        assert_eq!(lines.len(), 3 + 1 + 288, "{cmd}");
    }
    let solve = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    // every generated game has a pure equilibrium
    assert!(solve.lines().skip(4).all(|l| l.split(',').nth(2).unwrap() != "0"));
    let features = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert_eq!(features.lines().nth(3).unwrap().split(',').count(), 19);
}

#[test]
fn simulate_then_aggregate_recovers_model_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let games = small_games(dir.path(), "5", "g.json");
    let g = games.to_str().unwrap();
    run(
        dir.path(),
        &["simulate", "--games", g, "--model", "L2+QR+Risk", "--eta", "0.2", "--alpha", "0.03", "--participants", "2000", "--roles", "both", "--seed", "4", "-o", "t.csv"],
    );
    let trials = read_trials(&dir.path().join("t.csv")).unwrap();
    assert_eq!(trials.len(), 288 * 2 * 2000);
    run(dir.path(), &["aggregate", "--trials", "t.csv", "--games", g, "-o", "r.csv"]);
    let records = read_records(&dir.path().join("r.csv")).unwrap();
    assert_eq!(records.len(), 288 * 2);
    let spec = ModelSpec::level_k(2).with_risk();
    let params = Params::new(0.2, 0.2, 0.03);
    let mut worst: f64 = 0.0;
    for r in &records {
        let p = predict(&spec, &params, &r.game, r.role).unwrap();
        let sd = (p * (1.0 - p) / 2000.0).sqrt().max(1e-3);
        worst = worst.max((r.p_first - p).abs() / sd);
        assert_eq!(r.n, 2000);
        assert!(r.rt_norm.is_some() && r.conf_norm.is_none());
    }
    // 576 records: a 4.5 sd excursion has probability well under 1%
    assert!(worst < 4.5, "worst deviation {worst} sd");
    assert!(records.iter().any(|r| r.role == Role::Col));
}

#[test]
fn full_pipeline_runs_without_manual_edits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_games(d, "11", "g.json");
    run(d, &["simulate", "--games", "g.json", "--model", "L1+QR+Risk", "--eta", "0.15", "--alpha", "0.02", "--participants", "40", "--rt-correlation", "0.2", "--confidence", "--seed", "2", "-o", "t.csv"]);
    run(d, &["aggregate", "--trials", "t.csv", "--games", "g.json", "-o", "r.csv"]);
    run(d, &["fit", "--records", "r.csv", "--model", "L1+QR+Risk", "--starts", "2", "--test-fraction", "0.2", "-o", "fit.json"]);
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(d.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["label"], "L1+QR+Risk");
    assert!(fit["provenance"]["config_hash"].as_str().unwrap().len() == 64);
    let eta = fit["result"]["model"]["params"]["eta_self"].as_f64().unwrap();
    assert!((eta - 0.15).abs() < 0.05, "{eta}");

    run(d, &["cv", "--records", "r.csv", "--models", "Nash,L1+QR,L1+QR+Risk", "--rounds", "3", "--starts", "1", "--upper-mse", "0.001", "--upper-r2", "0.99", "-o", "cv.csv"]);
    let cv = fs::read_to_string(d.join("cv.csv")).unwrap();
    let lines: Vec<&str> = cv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "model,mse_mean,mse_se,r2_mean,r2_se,completeness,rounds");
    let models: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["Random", "Nash", "L1+QR", "L1+QR+Risk"]);

    run(d, &["train", "--records", "r.csv", "--model", "L1+nQR", "--hidden", "8", "--epochs", "40", "--eval-interval", "10", "--seed", "1", "-o", "ckpt.json", "--metrics", "m.json"]);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(d.join("m.json")).unwrap()).unwrap();
    assert!(m["validation"]["mse"].as_f64().unwrap().is_finite());
    run(d, &["index", "--checkpoint", "ckpt.json", "--records", "r.csv", "--lambda", "0.001", "--tree", "-o", "index.json"]);
    let idx: serde_json::Value = serde_json::from_slice(&fs::read(d.join("index.json")).unwrap()).unwrap();
    assert_eq!(idx["index"]["weights"].as_array().unwrap().len(), 18);
    assert!(idx["tree"]["depth"].as_u64().unwrap() <= 3);

    let out = run(d, &["correlate", "--index", "index.json", "--records", "r.csv"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n"], 288);
    assert!(report["r"].as_f64().unwrap().abs() <= 1.0);
    run(d, &["correlate", "--index", "index.json", "--records", "r.csv", "--field", "conf_norm", "-o", "c.json"]);

    run(d, &["psychometric", "--records", "r.csv", "--index", "index.json", "--bins", "4", "-o", "p.csv"]);
    let psy = fs::read_to_string(d.join("p.csv")).unwrap();
    assert!(psy.lines().any(|l| l.starts_with("group,bin,lower,upper,n,")));
    let total: usize =
        psy.lines().filter(|l| l.starts_with("low,") || l.starts_with("high,")).map(|l| l.split(',').nth(4).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 288);
}

#[test]
fn fit_rejects_neural_labels_and_index_needs_a_precision_net() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_games(d, "2", "g.json");
    run(d, &["simulate", "--games", "g.json", "--participants", "5", "-o", "t.csv"]);
    run(d, &["aggregate", "--trials", "t.csv", "--games", "g.json", "-o", "r.csv"]);
    let out = bin().current_dir(d).args(["fit", "--records", "r.csv", "--model", "L1+nQR", "-o", "f.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    run(d, &["train", "--records", "r.csv", "--model", "MLP", "--hidden", "4", "--epochs", "5", "--eval-interval", "5", "-o", "mlp.json"]);
    let out = bin().current_dir(d).args(["index", "--checkpoint", "mlp.json", "--records", "r.csv", "-o", "i.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // simulating from a checkpoint reproduces its predictions' scale
    run(d, &["simulate", "--games", "g.json", "--checkpoint", "mlp.json", "--participants", "3", "-o", "t2.csv"]);
}
