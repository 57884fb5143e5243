use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::GbdtParams;
use crate::error::{Error, Result};
use crate::fusion::FusionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    /// One multiclass model over every class.
    Flat,
    /// Binary benign filter followed by an attack-only multiclass model.
    Cascade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub flow_csv: PathBuf,
    pub host_tensors: PathBuf,
    pub label_map: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    /// Column holding sample ids shared with the host tensor file.
    #[serde(default = "default_id_column")]
    pub id_column: Option<String>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Drop classes with fewer samples than this before splitting.
    #[serde(default)]
    pub min_class_size: Option<usize>,
}

fn default_label_column() -> String {
    "label".into()
}

fn default_id_column() -> Option<String> {
    Some("id".into())
}

fn default_test_fraction() -> f64 {
    0.3
}

/// Per-stage overrides on top of the shared classifier parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtOverrides {
    pub rounds: Option<usize>,
    pub max_depth: Option<usize>,
    pub learning_rate: Option<f64>,
    pub min_child_weight: Option<f64>,
    pub l2_lambda: Option<f64>,
    pub subsample: Option<f64>,
    pub seed: Option<u64>,
}

impl GbdtOverrides {
    pub fn apply(&self, base: &GbdtParams) -> GbdtParams {
        GbdtParams {
            rounds: self.rounds.unwrap_or(base.rounds),
            max_depth: self.max_depth.unwrap_or(base.max_depth),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            min_child_weight: self.min_child_weight.unwrap_or(base.min_child_weight),
            l2_lambda: self.l2_lambda.unwrap_or(base.l2_lambda),
            subsample: self.subsample.unwrap_or(base.subsample),
            seed: self.seed.unwrap_or(base.seed),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    #[serde(default)]
    pub params: GbdtParams,
    #[serde(default)]
    pub stage1: GbdtOverrides,
    #[serde(default)]
    pub stage2: GbdtOverrides,
}

impl ClassifierConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn stage1(&self) -> GbdtParams {
        self.stage1.apply(&self.params)
    }

    pub fn stage2(&self) -> GbdtParams {
        self.stage2.apply(&self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    #[serde(default = "default_mode")]
    pub mode: FusionMode,
    /// Event matrix selection target `[rows, cols]`.
    #[serde(default)]
    pub event_select: Option<(usize, usize)>,
    /// Message matrix selection target `[rows, cols]`.
    #[serde(default)]
    pub message_select: Option<(usize, usize)>,
    #[serde(default)]
    pub pca_k: Option<usize>,
    #[serde(default = "default_pipeline")]
    pub pipeline: PipelineKind,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Reuse fused matrices cached under `out_dir/cache`.
    #[serde(default = "default_true")]
    pub cache: bool,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

fn default_mode() -> FusionMode {
    FusionMode::FlowEventMessage
}

fn default_pipeline() -> PipelineKind {
    PipelineKind::Cascade
}

fn default_rounds() -> usize {
    5
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Config with defaults for everything but the input files.
    pub fn new(flow_csv: PathBuf, host_tensors: PathBuf, label_map: PathBuf) -> Self {
        ExperimentConfig {
            data: DataConfig {
                flow_csv,
                host_tensors,
                label_map,
                label_column: default_label_column(),
                id_column: default_id_column(),
                test_fraction: default_test_fraction(),
                min_class_size: None,
            },
            mode: default_mode(),
            event_select: None,
            message_select: None,
            pca_k: None,
            pipeline: default_pipeline(),
            rounds: default_rounds(),
            seed: 0,
            out_dir: default_out_dir(),
            cache: true,
            classifier: ClassifierConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut cfg.data.flow_csv);
            fix(&mut cfg.data.host_tensors);
            fix(&mut cfg.data.label_map);
            fix(&mut cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_owned()));
        if self.rounds < 1 {
            return bad("rounds must be >= 1");
        }
        if self.pca_k == Some(0) {
            return bad("pca_k must be >= 1");
        }
        if !(self.data.test_fraction > 0.0 && self.data.test_fraction < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        for sel in [self.event_select, self.message_select].into_iter().flatten() {
            if sel.0 == 0 || sel.1 == 0 {
                return bad("selection targets must be positive");
            }
        }
        self.classifier
            .stage1()
            .validate()
            .and(self.classifier.stage2().validate())
            .map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Checks that the input files exist.
    pub fn check_paths(&self) -> Result<()> {
        for p in [&self.data.flow_csv, &self.data.host_tensors, &self.data.label_map] {
            if !p.exists() {
                return Err(Error::ConfigInvalid(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [data]
            flow_csv = "flow.csv"
            host_tensors = "host.hft"
            label_map = "labels.toml"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.rounds, 5);
        assert_eq!(cfg.mode, FusionMode::FlowEventMessage);
        assert_eq!(cfg.pipeline, PipelineKind::Cascade);
        assert_eq!(cfg.classifier.params, GbdtParams::default());
        assert_eq!(cfg.data.test_fraction, 0.3);
    }

    #[test]
    fn stage_overrides() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            mode = "flow-message"
            message_select = [15, 50]
            pipeline = "flat"
            [data]
            flow_csv = "a"
            host_tensors = "b"
            label_map = "c"
            [classifier.params]
            rounds = 20
            [classifier.stage2]
            max_depth = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.message_select, Some((15, 50)));
        assert_eq!(cfg.classifier.stage1().rounds, 20);
        assert_eq!(cfg.classifier.stage2().max_depth, 3);
        assert_eq!(cfg.classifier.stage1().max_depth, 6);
    }

    #[test]
    fn invalid_values_rejected() {
        let base = "[data]\nflow_csv = \"a\"\nhost_tensors = \"b\"\nlabel_map = \"c\"\n";
        for extra in ["rounds = 0\n", "pca_k = 0\n", "unknown = 1\n"] {
            let text = format!("{extra}{base}");
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{extra}");
        }
        let text = format!("{base}[classifier.params]\nlearning_rate = 2.0\n");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::new("a".into(), "b".into(), "c".into());
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
