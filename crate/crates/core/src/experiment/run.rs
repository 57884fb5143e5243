use std::path::{Path, PathBuf};

use log::{debug, info};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ClassifierConfig, ExperimentConfig, PipelineKind};
use crate::binio::{read_file, write_file};
use crate::cascade::train_cascade;
use crate::classifier::{train, Classifier};
use crate::dataset::{
    align, load_flow_csv_with, load_host_tensors, split_stratified, AlignedDataset, FlowCsvOptions,
    LabelMap,
};
use crate::error::{Error, Result};
use crate::fusion::{fuse, HostSelection};
use crate::labeled::LabeledMatrix;
use crate::metrics::{evaluate, EvaluationReport};
use crate::reduction::{fit_pca, make_selection_plan, SelectionPlan};
use crate::report::write_report;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub seed: u64,
    pub event_plan: Option<SelectionPlan>,
    pub message_plan: Option<SelectionPlan>,
    pub report: EvaluationReport,
}

/// Arithmetic mean of every scalar metric over rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub rounds: usize,
    pub class_names: Vec<String>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

impl MeanReport {
    pub fn from_reports(reports: &[&EvaluationReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let first = reports[0];
        let k = first.per_class.len();
        let mean_of = |f: &dyn Fn(&EvaluationReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
        let per_class = |f: &dyn Fn(&crate::metrics::ClassScore) -> f64| -> Vec<f64> {
            (0..k).map(|c| mean_of(&|r| f(&r.per_class[c]))).collect()
        };
        MeanReport {
            rounds: reports.len(),
            class_names: first.per_class.iter().map(|s| s.name.clone()).collect(),
            precision: per_class(&|s| s.precision),
            recall: per_class(&|s| s.recall),
            f1: per_class(&|s| s.f1),
            macro_f1: mean_of(&|r| r.macro_f1),
            weighted_f1: mean_of(&|r| r.weighted_f1),
            accuracy: mean_of(&|r| r.accuracy),
        }
    }

    pub fn class_f1(&self, name: &str) -> Option<f64> {
        self.class_names.iter().position(|n| n == name).map(|i| self.f1[i])
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write as _;
        let width = self.class_names.iter().map(String::len).chain(["weighted avg".len()]).max().unwrap_or(0);
        let mut out = format!("mean over {} round(s)\n", self.rounds);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9}", "class", "precision", "recall", "f1");
        for (i, name) in self.class_names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}",
                name, self.precision[i], self.recall[i], self.f1[i]
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "macro avg", "", "", self.macro_f1);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "weighted avg", "", "", self.weighted_f1);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "accuracy", "", "", self.accuracy);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub rounds: Vec<RoundOutcome>,
    pub mean: MeanReport,
}

/// Loads, aligns and splits the configured inputs.
pub fn ingest(cfg: &ExperimentConfig) -> Result<(AlignedDataset, AlignedDataset)> {
    cfg.check_paths()?;
    let d = &cfg.data;
    let mut opts = FlowCsvOptions::new(d.label_column.clone());
    opts.id_column = d.id_column.clone();
    let mut flow = load_flow_csv_with(&d.flow_csv, &opts)?;
    if let Some(min) = d.min_class_size {
        flow = flow.drop_rare_classes(min);
    }
    let host = load_host_tensors(&d.host_tensors)?;
    let label_map = LabelMap::load(&d.label_map)?;
    let ds = align(&flow, &host, &label_map)?;
    info!("aligned {} samples with dims {:?}", ds.len(), ds.dims());
    split_stratified(&ds, d.test_fraction, cfg.seed)
}

/// Trains the configured pipeline on `train` and scores it on `test`.
pub fn train_and_evaluate(
    kind: PipelineKind,
    classifier: &ClassifierConfig,
    round_seed_offset: u64,
    train_set: &LabeledMatrix,
    test_set: &LabeledMatrix,
) -> Result<EvaluationReport> {
    let reseed = |mut p: crate::classifier::GbdtParams| {
        p.seed = p.seed.wrapping_add(round_seed_offset);
        p
    };
    match kind {
        PipelineKind::Flat => {
            let params = reseed(classifier.params);
            let model = train(&train_set.values, &train_set.labels, train_set.label_map.len(), &params)?;
            let pred = model.predict(&test_set.values)?;
            evaluate(&test_set.labels, &pred.labels, &test_set.label_map)
        }
        PipelineKind::Cascade => {
            let model = train_cascade(train_set, &reseed(classifier.stage1()), &reseed(classifier.stage2()))?;
            model.evaluate(test_set)
        }
    }
}

fn plan_for(
    uses: bool,
    target: Option<(usize, usize)>,
    source: (usize, usize),
    seed: u64,
) -> Result<Option<SelectionPlan>> {
    match (uses, target) {
        (true, Some(t)) => make_selection_plan(source, t, seed).map(Some),
        _ => Ok(None),
    }
}

struct FuseCache {
    dir: Option<PathBuf>,
    inputs_digest: String,
}

impl FuseCache {
    fn key(&self, cfg: &ExperimentConfig, side: &str, selection: &HostSelection) -> String {
        let mut h = Sha256::new();
        h.update(self.inputs_digest.as_bytes());
        h.update(side.as_bytes());
        h.update(cfg.mode.short_name().as_bytes());
        h.update(serde_json::to_vec(&(&selection.event, &selection.message)).expect("plans serialize"));
        hex::encode(h.finalize())
    }

    fn fused(
        &self,
        cfg: &ExperimentConfig,
        side: &str,
        ds: &AlignedDataset,
        selection: &HostSelection,
    ) -> Result<LabeledMatrix> {
        let Some(dir) = &self.dir else {
            return Ok(fuse(ds, cfg.mode, selection)?.into_labeled());
        };
        let path = dir.join(format!("fused-{}.hyb", &self.key(cfg, side, selection)[..32]));
        if path.exists() {
            if let Ok((m, _)) = LabeledMatrix::from_bytes(&read_file(&path)?) {
                debug!("cache hit {}", path.display());
                return Ok(m);
            }
        }
        let h = fuse(ds, cfg.mode, selection)?;
        write_file(&path, &h.to_bytes())?;
        Ok(h.into_labeled())
    }
}

fn inputs_digest(cfg: &ExperimentConfig) -> Result<String> {
    let mut h = Sha256::new();
    for p in [&cfg.data.flow_csv, &cfg.data.host_tensors, &cfg.data.label_map] {
        h.update(Sha256::digest(read_file(p)?));
    }
    let d = &cfg.data;
    h.update(
        serde_json::to_vec(&(
            &d.label_column,
            &d.id_column,
            d.test_fraction.to_bits(),
            d.min_class_size,
            cfg.seed,
        ))
        .expect("data config serializes"),
    );
    Ok(hex::encode(h.finalize()))
}

/// Runs every round without touching the filesystem beyond reading inputs.
pub fn run_experiment_in_memory(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_rounds(cfg, &FuseCache { dir: None, inputs_digest: String::new() })
}

fn run_rounds(cfg: &ExperimentConfig, cache: &FuseCache) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (train_ds, test_ds) = ingest(cfg)?;
    let host = train_ds.dims().host;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let seed = cfg.seed.wrapping_add(round as u64);
        let selection = HostSelection {
            event: plan_for(cfg.mode.uses_event(), cfg.event_select, (host.m, host.n), seed)?,
            message: plan_for(cfg.mode.uses_message(), cfg.message_select, (host.p, host.q), seed)?,
        };
        let mut train_m = cache.fused(cfg, "train", &train_ds, &selection)?;
        let mut test_m = cache.fused(cfg, "test", &test_ds, &selection)?;
        if let Some(k) = cfg.pca_k {
            let pca = fit_pca(&train_m.values, k)?;
            train_m.values = pca.apply(&train_m.values)?;
            test_m.values = pca.apply(&test_m.values)?;
        }
        let report = train_and_evaluate(cfg.pipeline, &cfg.classifier, round as u64, &train_m, &test_m)?;
        info!("round {round} (seed {seed}): macro F1 {:.4}", report.macro_f1);
        rounds.push(RoundOutcome {
            round,
            seed,
            event_plan: selection.event,
            message_plan: selection.message,
            report,
        });
    }
    let reports: Vec<&EvaluationReport> = rounds.iter().map(|r| &r.report).collect();
    let mean = MeanReport::from_reports(&reports);
    Ok(ExperimentOutcome { rounds, mean })
}

/// Runs the experiment and writes per-round and mean reports under
/// `cfg.out_dir`. Fused matrices are cached under `out_dir/cache` keyed by
/// a hash of the inputs, the fusion mode and the selection plans.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    cfg.check_paths()?;
    let cache = FuseCache {
        dir: cfg.cache.then(|| cfg.out_dir.join("cache")),
        inputs_digest: if cfg.cache { inputs_digest(cfg)? } else { String::new() },
    };
    let outcome = run_rounds(cfg, &cache)?;
    write_outcome(&outcome, &cfg.out_dir)?;
    Ok(outcome)
}

/// `round-XX/` directories with report files and plans, then `summary.json`
/// and `summary.txt` for the mean.
pub fn write_outcome(outcome: &ExperimentOutcome, out_dir: &Path) -> Result<()> {
    for r in &outcome.rounds {
        let dir = out_dir.join(format!("round-{:02}", r.round));
        write_report(&r.report, &dir, "report")?;
        let plans = serde_json::to_string_pretty(&serde_json::json!({
            "seed": r.seed,
            "event": r.event_plan,
            "message": r.message_plan,
        }))
        .expect("plans serialize");
        write_file(&dir.join("plans.json"), format!("{plans}\n").as_bytes())?;
        debug!("wrote {}", dir.display());
    }
    let summary = serde_json::to_string_pretty(&serde_json::json!({
        "mean": outcome.mean,
        "rounds": outcome.rounds.iter().map(|r| serde_json::json!({
            "round": r.round,
            "seed": r.seed,
            "macro_f1": r.report.macro_f1,
            "weighted_f1": r.report.weighted_f1,
            "accuracy": r.report.accuracy,
        })).collect::<Vec<_>>(),
    }))
    .map_err(|e| Error::Numeric(e.to_string()))?;
    write_file(&out_dir.join("summary.json"), format!("{summary}\n").as_bytes())?;
    write_file(&out_dir.join("summary.txt"), outcome.mean.render_text().as_bytes())?;
    Ok(())
}
