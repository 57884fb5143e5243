use std::path::Path;

use hybrid_ids::experiment::{
    run_experiment, run_experiment_in_memory, ExperimentConfig, PipelineKind,
};
use hybrid_ids::synth::{generate_synthetic, SynthSpec, SyntheticFiles};
use hybrid_ids::{Error, FusionMode};

fn corpus(dir: &Path) -> SyntheticFiles {
    generate_synthetic(&SynthSpec::benchmark(1200, 5)).unwrap().write(dir.join("data")).unwrap()
}

fn config(files: &SyntheticFiles, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        files.flow_csv.clone(),
        files.host_tensors.clone(),
        files.label_map.clone(),
    );
    cfg.rounds = 2;
    cfg.event_select = Some((2, 2));
    cfg.message_select = Some((3, 4));
    cfg.classifier.params.rounds = 5;
    cfg.classifier.params.max_depth = 3;
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn single_flow_only_round_builds_no_plans() {
    let dir = tempfile::tempdir().unwrap();
    let files = corpus(dir.path());
    let mut cfg = config(&files, &dir.path().join("out"));
    cfg.rounds = 1;
    cfg.mode = FusionMode::FlowOnly;
    cfg.pipeline = PipelineKind::Flat;
    let outcome = run_experiment_in_memory(&cfg).unwrap();
    assert_eq!(outcome.rounds.len(), 1);
    assert!(outcome.rounds[0].event_plan.is_none());
    assert!(outcome.rounds[0].message_plan.is_none());
    assert_eq!(outcome.mean.macro_f1, outcome.rounds[0].report.macro_f1);
}

#[test]
fn rounds_use_offset_seeds_and_mean_averages_them() {
    let dir = tempfile::tempdir().unwrap();
    let files = corpus(dir.path());
    let mut cfg = config(&files, &dir.path().join("out"));
    cfg.seed = 40;
    let outcome = run_experiment_in_memory(&cfg).unwrap();
    let seeds: Vec<u64> = outcome.rounds.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![40, 41]);
    assert_eq!(outcome.rounds[1].event_plan.as_ref().unwrap().seed(), 41);
    let mean = (outcome.rounds[0].report.macro_f1 + outcome.rounds[1].report.macro_f1) / 2.0;
    assert!((outcome.mean.macro_f1 - mean).abs() < 1e-15);
    let f1 = (outcome.rounds[0].report.per_class[2].f1 + outcome.rounds[1].report.per_class[2].f1) / 2.0;
    assert!((outcome.mean.f1[2] - f1).abs() < 1e-15);
}

#[test]
fn outputs_are_written_per_round_and_cache_hits_change_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let files = corpus(dir.path());
    let out = dir.path().join("out");
    let cfg = config(&files, &out);
    let cold = run_experiment(&cfg).unwrap();
    for name in ["round-00/report.json", "round-01/plans.json", "round-01/report_confusion.csv", "summary.json", "summary.txt"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let cached = std::fs::read_dir(out.join("cache")).unwrap().count();
    assert_eq!(cached, 4);
    let summary = std::fs::read(out.join("summary.json")).unwrap();
    let warm = run_experiment(&cfg).unwrap();
    assert_eq!(cold, warm);
    assert_eq!(std::fs::read(out.join("summary.json")).unwrap(), summary);
    assert_eq!(std::fs::read_dir(out.join("cache")).unwrap().count(), 4);
    assert_eq!(run_experiment_in_memory(&cfg).unwrap(), cold);
}

#[test]
fn config_file_paths_resolve_against_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let text = r#"
rounds = 1
mode = "flow-event"
event_select = [2, 2]
pipeline = "flat"
out_dir = "results"

[data]
flow_csv = "data/flow.csv"
host_tensors = "data/host.hft"
label_map = "data/labels.toml"

[classifier.params]
rounds = 3
max_depth = 2
"#;
    let path = dir.path().join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.out_dir, dir.path().join("results"));
    let outcome = run_experiment(&cfg).unwrap();
    assert_eq!(outcome.rounds.len(), 1);
    assert!(dir.path().join("results/summary.txt").exists());
}

#[test]
fn invalid_configs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let files = corpus(dir.path());
    let mut cfg = config(&files, dir.path());
    cfg.data.test_fraction = 1.5;
    let err = run_experiment_in_memory(&cfg).unwrap_err();
    assert_eq!(err.kind().exit_code(), 2);

    let mut cfg = config(&files, dir.path());
    cfg.event_select = Some((9, 9));
    let err = run_experiment_in_memory(&cfg).unwrap_err();
    assert!(matches!(err, Error::TargetExceedsSource { .. }));
}
