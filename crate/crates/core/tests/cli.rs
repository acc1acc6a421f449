use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csc::dataio::{load_dataset_bundle, load_model, load_rrr_model, read_matrix, write_matrix, MODEL_FILE};
use csc::evalkit::{diagnostics_report, evaluate};
use csc::{csc_fit, CscConfig, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

mod common;
use common::randn;

fn csc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csc")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = csc(args);
    assert!(
        out.status.success(),
        "csc {args:?} exited with {}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Simulates a small structured dataset and returns its manifest path.
fn simulate(root: &Path) -> PathBuf {
    let data = root.join("data");
    ok(&[
        "simulate", "--scenario", "structured", "--p", "6", "--q", "5", "--g", "8", "--n", "20", "--n-test", "50",
        "--dict-size", "6", "--seed", "7", "--out", &s(&data),
    ]);
    data.join("manifest.json")
}

fn value_of(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no {key} in output:\n{stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn fit_and_evaluate_match_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(tmp.path());
    let model_dir = tmp.path().join("model");
    ok(&[
        "fit", "csc", "--data", &s(&manifest), "--k", "8", "--lambda", "0.05", "--max-alternations", "25", "--seed",
        "3", "--out", &s(&model_dir),
    ]);
    assert!(model_dir.join("run.json").exists());
    assert!(model_dir.join("diagnostics.csv").exists());

    let stdout = ok(&["evaluate", "--model", &s(&model_dir), "--data", &s(&manifest), "--truth"]);

    let data = load_dataset_bundle(&manifest).unwrap();
    let config = CscConfig {
        k: 8,
        lambda: 0.05,
        max_alternations: 25,
        rng_seed: 3,
        ..CscConfig::default()
    };
    let (model, diag) = csc_fit(&data.train, &config).unwrap();
    let (loaded, loaded_diag) = load_model(&model_dir).unwrap();
    assert_eq!(loaded.dictionary, model.dictionary);
    assert_eq!(loaded.coefficients, model.coefficients);
    assert_eq!(loaded_diag.as_ref(), Some(&diag));

    let report = evaluate(
        &model.estimates(),
        data.test.as_ref().unwrap(),
        Some(&data.truth.as_ref().unwrap().b_star),
    )
    .unwrap();
    assert_eq!(value_of(&stdout, "estimation_error"), report.estimation_error.unwrap());
    assert_eq!(value_of(&stdout, "prediction_error"), report.prediction_error);

    let printed = ok(&["diagnose", "--model", &s(&model_dir)]);
    assert_eq!(printed, diagnostics_report(&diag));
}

#[test]
fn rrr_encode_cv_and_holdout_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(tmp.path());
    let root = tmp.path();

    let rrr_dir = root.join("rrr");
    ok(&["fit", "rrr", "--data", &s(&manifest), "--radius-rule", "ols", "--out", &s(&rrr_dir)]);
    let rrr = load_rrr_model(&rrr_dir).unwrap();
    assert_eq!(rrr.estimates.len(), 8);
    let eval = ok(&["evaluate", "--model", &s(&rrr_dir), "--data", &s(&manifest), "--split", "train"]);
    let train = load_dataset_bundle(&manifest).unwrap().train;
    assert_eq!(value_of(&eval, "prediction_error"), evaluate(&rrr.estimates, &train, None).unwrap().prediction_error);

    let model_dir = root.join("model");
    ok(&[
        "fit", "csc", "--data", &s(&manifest), "--k", "8", "--max-alternations", "10", "--groups-subset", "5",
        "--out", &s(&model_dir),
    ]);
    let (model, _) = load_model(&model_dir).unwrap();
    assert_eq!(model.coefficients.num_groups(), 8);

    let encoded_dir = root.join("encoded");
    ok(&["encode", "--model", &s(&model_dir), "--data", &s(&manifest), "--lambda", "0.2", "--out", &s(&encoded_dir)]);
    let (encoded, _) = load_model(&encoded_dir).unwrap();
    assert_eq!(encoded.dictionary, model.dictionary);
    assert_eq!(encoded.config.lambda, 0.2);

    let cv_dir = root.join("cv");
    let cv = ok(&[
        "cv-lambda", "--data", &s(&manifest), "--k", "6", "--max-alternations", "5", "--grid", "0.02,0.2", "--folds",
        "2", "--out", &s(&cv_dir),
    ]);
    let best = value_of(&cv, "best");
    assert!(best == 0.02 || best == 0.2);
    assert!(cv_dir.join("cv_lambda.csv").exists());
    assert!(cv_dir.join("run.json").exists());

    let ho_dir = root.join("holdout");
    let table = ok(&[
        "holdout2", "--data", &s(&manifest), "--method", "both", "--k", "6", "--max-alternations", "5",
        "--radius", "2", "--trials", "6", "--out", &s(&ho_dir),
    ]);
    assert!(table.contains("confidence"));
    assert!(ho_dir.join("holdout2_csc.json").exists());
    assert!(ho_dir.join("holdout2_rrr.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(csc(&["fit", "csc", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(csc(&["frobnicate"]).status.code(), Some(1));
    let missing = tmp.path().join("missing.json");
    assert_eq!(
        csc(&["fit", "csc", "--data", &s(&missing), "--out", &s(&tmp.path().join("m"))]).status.code(),
        Some(2)
    );
    let manifest = simulate(tmp.path());
    let bad_tau = csc(&["fit", "csc", "--data", &s(&manifest), "--tau=-1", "--out", &s(&tmp.path().join("m"))]);
    assert_eq!(bad_tau.status.code(), Some(2));
}

#[test]
fn archive_lists_one_file_per_entry_and_reports_missing_files() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(tmp.path());
    let model_dir = tmp.path().join("model");
    ok(&[
        "fit", "csc", "--data", &s(&manifest), "--k", "20", "--max-alternations", "3", "--out", &s(&model_dir),
    ]);
    let envelope: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(model_dir.join(MODEL_FILE)).unwrap()).unwrap();
    let files = envelope["matrix_files"].as_array().unwrap();
    assert_eq!(files.len(), 20);

    std::fs::remove_file(model_dir.join(files[4].as_str().unwrap())).unwrap();
    assert!(matches!(load_model(&model_dir), Err(Error::MissingArtifact(_))));
}

#[test]
fn loads_an_externally_shaped_dataset() {
    // G = 9 groups of 434 features, 192 responses and 60 samples.
    let (g_count, p, q, n) = (9, 434, 192, 60);
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut groups = Vec::new();
    for g in 0..g_count {
        let x = format!("x{g}.csv");
        let y = format!("y{g}.csv");
        write_matrix(&randn(p, n, &mut rng), dir.join(&x)).unwrap();
        write_matrix(&randn(q, n, &mut rng), dir.join(&y)).unwrap();
        groups.push(serde_json::json!({"x": x, "y": y}));
    }
    let manifest = serde_json::json!({
        "format_version": "1",
        "p": p, "q": q, "n": n, "G": g_count,
        "groups": groups,
        "provenance": {"note": "external recordings"},
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    let data = load_dataset_bundle(&path).unwrap();
    assert_eq!(data.train.num_groups(), g_count);
    assert_eq!((data.train.p(), data.train.q(), data.train.n()), (p, q, n));
    assert_eq!(data.train.group(3).x, read_matrix(dir.join("x3.csv")).unwrap());

    // A manifest that overstates p is rejected.
    let mut wrong = manifest.clone();
    wrong["p"] = serde_json::json!(p + 1);
    std::fs::write(&path, serde_json::to_string(&wrong).unwrap()).unwrap();
    assert!(matches!(load_dataset_bundle(&path), Err(Error::Validation(_))));
}
