//! Config-driven pipeline: ingest, fuse, reduce, train, evaluate over
//! seed-offset rounds.

mod config;
mod run;

pub use config::{ClassifierConfig, DataConfig, ExperimentConfig, GbdtOverrides, PipelineKind};
pub use run::{
    ingest, run_experiment, run_experiment_in_memory, train_and_evaluate, write_outcome,
    ExperimentOutcome, MeanReport, RoundOutcome,
};
