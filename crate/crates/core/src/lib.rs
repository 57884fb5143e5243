//! Hybrid network/host intrusion detection.
//!
//! Flow features and host-log feature matrices are joined per sample,
//! host matrices are shrunk by seeded row/column selection and flattened,
//! the fused vectors are optionally projected with PCA, and traffic is
//! classified either by a flat multiclass model or by a two-stage cascade
//! (benign filter, then attack-only multiclass).

mod binio;

pub mod cascade;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod labeled;
pub mod matrix;
pub mod metrics;
pub mod reduction;
pub mod report;
pub mod rng;
pub mod synth;

pub use cascade::{evaluate_cascade, predict_cascade, train_cascade, CascadeModel};
pub use classifier::{Classifier, GbdtModel, GbdtParams, Prediction, Trainer};
pub use dataset::{AlignedDataset, FlowTable, HostDims, HostTensorSet, LabelMap};
pub use error::{Error, Result};
pub use fusion::{flatten, fuse, hybrid_width, FusionMode, HostSelection, HybridMatrix};
pub use labeled::LabeledMatrix;
pub use matrix::Matrix;
pub use metrics::{ConfusionMatrix, EvaluationReport};
pub use reduction::{fit_pca, make_selection_plan, PcaModel, SelectionPlan};
