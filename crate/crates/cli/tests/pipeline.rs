use std::path::Path;
use std::process::Command;

use sha2::{Digest, Sha256};

use games_cli::{run_pipeline, run_stage, CliError, DataSource, ExperimentConfig, FailureKind, SynthParams};
use games_core::games::GamesConfig;

fn tiny(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic(SynthParams {
            power_nodes: 4,
            gas_nodes: 2,
            gas_storage: 1,
            days: 8,
            hours: 6,
            candidate_lines: 1,
            ..Default::default()
        }),
        games: GamesConfig { max_epochs: 20, ..Default::default() },
        k_list: vec![2],
        reduction_goals: vec![0.8],
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

fn stage_of(err: &CliError) -> &str {
    match err {
        CliError::Stage { stage, .. } => stage,
        CliError::Config(_) => "config",
    }
}

#[test]
fn tiny_pipeline_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let manifest = run_pipeline(&cfg, None).unwrap();
    assert_eq!(manifest.stages, ["synth", "train", "embed", "cluster", "plan", "evaluate", "compare"]);
    assert_eq!(manifest.master_seed, cfg.seed);
    assert_eq!(manifest.config_sha256, cfg.hash());
    for rel in [
        "data/power_topology.json",
        "data/instance.json",
        "model.json",
        "training_log.csv",
        "embeddings.json",
        "days/embeddings_k2.json",
        "days/raw_k2.json",
        "baseline.json",
        "plans/raw_k2_g80.json",
        "solutions/embeddings_k2_g80.json",
        "solutions/raw_k2_g80_days.csv",
        "comparison.csv",
        "summary.csv",
        "plots/plot_total.csv",
    ] {
        let bytes = std::fs::read(dir.path().join(rel)).unwrap_or_else(|_| panic!("{rel} missing"));
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(manifest.files.get(rel), Some(&digest), "{rel}");
    }
    let on_disk: games_cli::Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    let comparison = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(comparison.lines().count(), 3);
}

#[test]
fn pipeline_stops_after_the_requested_stage() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&tiny(dir.path()), Some("cluster")).unwrap();
    assert_eq!(manifest.stages.last().map(String::as_str), Some("cluster"));
    assert!(dir.path().join("days/raw_k2.json").exists());
    assert!(!dir.path().join("baseline.json").exists());
    assert!(matches!(run_pipeline(&tiny(dir.path()), Some("deploy")), Err(CliError::Config(_))));
}

#[test]
fn missing_topology_aborts_in_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    run_stage(&cfg, "synth").unwrap();
    std::fs::remove_file(dir.path().join("data/power_topology.json")).unwrap();
    let err = run_stage(&cfg, "train").unwrap_err();
    assert_eq!(stage_of(&err), "ingest");
    assert!(err.to_string().contains("power_topology.json"), "{err}");
    assert_eq!(err.exit_code(), 2);

    let files = ExperimentConfig {
        data: DataSource::Files { dataset_dir: dir.path().join("data"), instance: dir.path().join("data/instance.json") },
        output_dir: dir.path().join("second"),
        ..cfg
    };
    let err = run_stage(&files, "synth").unwrap_err();
    assert_eq!(stage_of(&err), "ingest");
}

#[test]
fn later_stage_without_inputs_names_that_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    run_stage(&cfg, "synth").unwrap();
    let err = run_stage(&cfg, "embed").unwrap_err();
    assert_eq!(stage_of(&err), "embed");
    assert!(matches!(run_stage(&cfg, "deploy"), Err(CliError::Config(_))));
}

#[test]
fn exit_codes_follow_failure_kind() {
    let code = |kind| CliError::stage("plan", kind, "x").exit_code();
    assert_eq!(code(FailureKind::Input), 2);
    assert_eq!(code(FailureKind::Infeasible), 3);
    assert_eq!(code(FailureKind::Numerical), 4);
    assert_eq!(code(FailureKind::Io), 1);
}

#[test]
fn binary_reports_config_errors_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_games"))
        .args(["synth", "--config"])
        .arg(dir.path().join("missing.json"))
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("missing.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"k_list": []}"#).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_games"))
        .args(["pipeline", "--config"])
        .arg(&bad)
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn binary_runs_a_stage_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let cfg = tiny(&dir.path().join("ignored"));
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_games"))
        .args(["synth", "--seed", "77", "--gap", "0.001", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: games_cli::Manifest =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.master_seed, 77);
    assert!(!dir.path().join("ignored").exists());
}
