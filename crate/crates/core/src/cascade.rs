//! Two-stage collaborative classifier.
//!
//! Stage one (ml1) separates benign from attack; stage two (ml2) assigns an
//! attack class and only ever sees rows ml1 flagged as attacks. ml2 works on
//! contiguous ids `0..K-1` that map back to the original non-benign ids in
//! ascending order.

use std::path::Path;

use crate::binio::{read_file, write_file, LeReader, LeWriter};
use crate::classifier::{Classifier, GbdtModel, Trainer};
use crate::dataset::{attack_indices, binary_labels, LabelMap};
use crate::error::{Error, Result};
use crate::labeled::LabeledMatrix;
use crate::matrix::Matrix;
use crate::metrics::{evaluate, EvaluationReport};

const MAGIC: &[u8; 4] = b"CAS1";

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel<M1 = GbdtModel, M2 = M1> {
    ml1: M1,
    ml2: M2,
    benign_id: usize,
    class_count: usize,
    /// ml2 id -> original id.
    attack_ids: Vec<usize>,
}

impl<M1: Classifier, M2: Classifier> CascadeModel<M1, M2> {
    pub fn new(ml1: M1, ml2: M2, benign_id: usize, class_count: usize) -> Result<Self> {
        if benign_id >= class_count {
            return Err(Error::LabelOutOfRange {
                label: benign_id,
                classes: class_count,
            });
        }
        if ml1.class_count() != 2 {
            return Err(Error::DimMismatch(format!(
                "stage one must be binary, has {} classes",
                ml1.class_count()
            )));
        }
        if ml2.class_count() + 1 != class_count {
            return Err(Error::DimMismatch(format!(
                "stage two has {} classes, expected {}",
                ml2.class_count(),
                class_count - 1
            )));
        }
        if ml1.feature_count() != ml2.feature_count() {
            return Err(Error::DimMismatch("stages disagree on feature width".into()));
        }
        let attack_ids = (0..class_count).filter(|&c| c != benign_id).collect();
        Ok(CascadeModel {
            ml1,
            ml2,
            benign_id,
            class_count,
            attack_ids,
        })
    }

    pub fn ml1(&self) -> &M1 {
        &self.ml1
    }

    pub fn ml2(&self) -> &M2 {
        &self.ml2
    }

    pub fn benign_id(&self) -> usize {
        self.benign_id
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn attack_ids(&self) -> &[usize] {
        &self.attack_ids
    }

    /// Original id of an ml2 class.
    pub fn original_id(&self, stage_two_id: usize) -> usize {
        self.attack_ids[stage_two_id]
    }

    /// Per row: benign if ml1 says benign, otherwise ml2's verdict mapped
    /// back to the original ids.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        if x.cols() != self.ml1.feature_count() {
            return Err(Error::DimMismatch(format!(
                "cascade expects {} features, got {}",
                self.ml1.feature_count(),
                x.cols()
            )));
        }
        let gate = self.ml1.predict(x)?.labels;
        let flagged: Vec<usize> = (0..x.rows()).filter(|&i| gate[i] != 0).collect();
        let mut out = vec![self.benign_id; x.rows()];
        if !flagged.is_empty() {
            let refined = self.ml2.predict(&x.select_rows(&flagged))?.labels;
            for (&row, &label) in flagged.iter().zip(&refined) {
                out[row] = *self.attack_ids.get(label).ok_or(Error::LabelOutOfRange {
                    label,
                    classes: self.attack_ids.len(),
                })?;
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, test: &LabeledMatrix) -> Result<EvaluationReport> {
        evaluate_cascade(self, test)
    }
}

/// Trains ml1 on benign/attack labels and ml2 on attack rows only.
pub fn train_cascade<T1: Trainer, T2: Trainer>(
    train: &LabeledMatrix,
    stage_one: &T1,
    stage_two: &T2,
) -> Result<CascadeModel<T1::Model, T2::Model>> {
    let map = &train.label_map;
    let benign = map.benign_id();
    let k = map.len();
    let attacks = attack_indices(&train.labels, benign);
    let mut present = vec![false; k];
    for &i in &attacks {
        present[train.labels[i]] = true;
    }
    let attack_classes = present.iter().filter(|&&p| p).count();
    if attack_classes < 2 {
        return Err(Error::FewerThanTwoAttackClasses(attack_classes));
    }

    let ml1 = stage_one.train(&train.values, &binary_labels(&train.labels, benign), 2)?;

    let to_stage_two: Vec<usize> = (0..k)
        .map(|c| if c > benign { c - 1 } else { c })
        .collect();
    let ml2_labels: Vec<usize> = attacks.iter().map(|&i| to_stage_two[train.labels[i]]).collect();
    let ml2 = stage_two.train(&train.values.select_rows(&attacks), &ml2_labels, k - 1)?;

    CascadeModel::new(ml1, ml2, benign, k)
}

pub fn predict_cascade<M1: Classifier, M2: Classifier>(
    model: &CascadeModel<M1, M2>,
    x: &Matrix,
) -> Result<Vec<usize>> {
    model.predict(x)
}

/// Metrics over [`predict_cascade`] output across all classes, benign included.
pub fn evaluate_cascade<M1: Classifier, M2: Classifier>(
    model: &CascadeModel<M1, M2>,
    test: &LabeledMatrix,
) -> Result<EvaluationReport> {
    if test.label_map.len() != model.class_count || test.label_map.benign_id() != model.benign_id {
        return Err(Error::DimMismatch("test labels do not match the cascade's classes".into()));
    }
    let pred = model.predict(&test.values)?;
    evaluate(&test.labels, &pred, &test.label_map)
}

/// Maps attack-class names for ml2 reports.
pub fn stage_two_label_map(map: &LabelMap) -> Vec<String> {
    map.names()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != map.benign_id())
        .map(|(_, n)| n.clone())
        .collect()
}

impl CascadeModel<GbdtModel, GbdtModel> {
    /// `CAS1`: magic, u16 version 1, u32 benign id, u32 class count, u32
    /// attack-id count and ids, then ml1 and ml2 as u64-length-prefixed
    /// `GBT1` blobs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = LeWriter::new(Vec::new());
        (|| -> std::io::Result<()> {
            w.bytes(MAGIC)?;
            w.u16(1)?;
            w.u32(self.benign_id as u32)?;
            w.u32(self.class_count as u32)?;
            w.u32(self.attack_ids.len() as u32)?;
            for &a in &self.attack_ids {
                w.u32(a as u32)?;
            }
            w.blob(&self.ml1.to_bytes())?;
            w.blob(&self.ml2.to_bytes())
        })()
        .expect("in-memory write");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = LeReader::new(bytes);
        r.magic(MAGIC)?;
        let version = r.u16()?;
        if version != 1 {
            return Err(Error::UnsupportedVersion(version));
        }
        let benign_id = r.u32()? as usize;
        let class_count = r.u32()? as usize;
        let n_attack = r.u32()? as usize;
        if n_attack.saturating_mul(4) > r.remaining() {
            return Err(Error::TruncatedFile);
        }
        let mut attack_ids = Vec::with_capacity(n_attack);
        for _ in 0..n_attack {
            attack_ids.push(r.u32()? as usize);
        }
        let ml1 = GbdtModel::from_bytes(r.blob()?)?;
        let ml2 = GbdtModel::from_bytes(r.blob()?)?;
        r.finish()?;
        let model = CascadeModel::new(ml1, ml2, benign_id, class_count)?;
        if model.attack_ids != attack_ids {
            return Err(Error::DimMismatch("stored attack ids are not the canonical remap".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}
