//! Gradient boosting with second-order leaf weights.
//!
//! Binary problems use one logistic tree per round; `K > 2` classes use one
//! softmax tree per class per round, all fit to gradients taken at the
//! start of the round. Hessians are `p(1-p)` (logistic) and `2p(1-p)`
//! (softmax), floored at `1e-16`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{build_tree, Node, SortedColumns, Tree, TreeParams};
use super::{Classifier, Prediction, Trainer};
use crate::binio::{read_file, write_file, LeReader, LeWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

const MAGIC: &[u8; 4] = b"GBT1";
const HESS_FLOOR: f64 = 1e-16;
const PRIOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub l2_lambda: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            min_child_weight: 1.0,
            l2_lambda: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_owned()));
        if self.rounds < 1 {
            return bad("rounds must be >= 1");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.l2_lambda >= 0.0) || !self.l2_lambda.is_finite() {
            return bad("l2_lambda must be >= 0");
        }
        if !(self.min_child_weight >= 0.0) || !self.min_child_weight.is_finite() {
            return bad("min_child_weight must be >= 0");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    BinaryLogistic,
    Softmax,
}

impl Objective {
    fn for_classes(k: usize) -> Self {
        if k == 2 {
            Objective::BinaryLogistic
        } else {
            Objective::Softmax
        }
    }

    /// Trees per boosting round.
    fn groups(self, k: usize) -> usize {
        match self {
            Objective::BinaryLogistic => 1,
            Objective::Softmax => k,
        }
    }
}

/// Boosted tree ensemble. Trees are stored round-major: tree `r * groups + c`
/// is round `r`, class `c` (a single group for binary models).
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    params: GbdtParams,
    objective: Objective,
    class_count: usize,
    feature_count: usize,
    base_score: Vec<f64>,
    trees: Vec<Tree>,
    loss_history: Vec<f64>,
}

pub fn train(x: &Matrix, labels: &[usize], class_count: usize, params: &GbdtParams) -> Result<GbdtModel> {
    params.validate()?;
    let (n, t) = x.shape();
    if labels.len() != n {
        return Err(Error::DimMismatch(format!("{n} rows but {} labels", labels.len())));
    }
    if n < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 training rows, got {n}")));
    }
    if class_count < 2 {
        return Err(Error::SingleClassInput);
    }
    let mut counts = vec![0usize; class_count];
    for &l in labels {
        if l >= class_count {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: class_count,
            });
        }
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::SingleClassInput);
    }
    if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature {
            row: pos / t,
            col: pos % t,
        });
    }

    let objective = Objective::for_classes(class_count);
    let groups = objective.groups(class_count);
    let priors: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 / n as f64).max(PRIOR_FLOOR))
        .collect();
    let base_score = match objective {
        Objective::BinaryLogistic => vec![(priors[1] / priors[0]).ln()],
        Objective::Softmax => priors.iter().map(|p| p.ln()).collect(),
    };

    let data = SortedColumns::new(x);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_child_weight: params.min_child_weight,
        l2_lambda: params.l2_lambda,
        learning_rate: params.learning_rate,
    };

    let mut margins: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut loss_history = vec![mean_loss(objective, &margins, labels, groups)];
    let mut trees = Vec::with_capacity(params.rounds * groups);
    let mut rng = SplitMix64::new(params.seed);
    let mut grad = vec![0.0; n * groups];
    let mut hess = vec![0.0; n * groups];
    let mut g_col = vec![0.0; n];
    let mut h_col = vec![0.0; n];

    for _round in 0..params.rounds {
        let in_sample: Vec<bool> = if params.subsample < 1.0 {
            (0..n).map(|_| rng.next_f64() < params.subsample).collect()
        } else {
            vec![true; n]
        };
        gradients(objective, &margins, labels, groups, &mut grad, &mut hess);
        let round_trees: Vec<Tree> = (0..groups)
            .map(|c| {
                for r in 0..n {
                    g_col[r] = grad[r * groups + c];
                    h_col[r] = hess[r * groups + c];
                }
                build_tree(&data, &g_col, &h_col, &in_sample, &tree_params)
            })
            .collect();
        margins
            .par_chunks_mut(groups)
            .zip(x.as_slice().par_chunks(t.max(1)))
            .for_each(|(m, row)| {
                for (slot, tree) in m.iter_mut().zip(&round_trees) {
                    *slot += tree.eval(row);
                }
            });
        trees.extend(round_trees);
        loss_history.push(mean_loss(objective, &margins, labels, groups));
    }

    let model = GbdtModel {
        params: *params,
        objective,
        class_count,
        feature_count: t,
        base_score,
        trees,
        loss_history,
    };
    if model.trees.iter().flat_map(|t| t.nodes()).any(|n| match n {
        Node::Leaf { weight } => !weight.is_finite(),
        Node::Split { .. } => false,
    }) {
        return Err(Error::Numeric("non-finite leaf weight".into()));
    }
    Ok(model)
}

pub fn predict(model: &GbdtModel, x: &Matrix) -> Result<Prediction> {
    model.predict(x)
}

fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn softmax_in_place(m: &mut [f64]) {
    let max = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in m.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in m.iter_mut() {
        *v /= sum;
    }
}

fn gradients(
    objective: Objective,
    margins: &[f64],
    labels: &[usize],
    groups: usize,
    grad: &mut [f64],
    hess: &mut [f64],
) {
    match objective {
        Objective::BinaryLogistic => {
            for (r, &y) in labels.iter().enumerate() {
                let p = sigmoid(margins[r]);
                grad[r] = p - y as f64;
                hess[r] = (p * (1.0 - p)).max(HESS_FLOOR);
            }
        }
        Objective::Softmax => {
            let mut p = vec![0.0; groups];
            for (r, &y) in labels.iter().enumerate() {
                p.copy_from_slice(&margins[r * groups..(r + 1) * groups]);
                softmax_in_place(&mut p);
                for c in 0..groups {
                    let target = if c == y { 1.0 } else { 0.0 };
                    grad[r * groups + c] = p[c] - target;
                    hess[r * groups + c] = (2.0 * p[c] * (1.0 - p[c])).max(HESS_FLOOR);
                }
            }
        }
    }
}

/// Mean negative log-likelihood of `labels` under `margins`.
fn mean_loss(objective: Objective, margins: &[f64], labels: &[usize], groups: usize) -> f64 {
    let total: f64 = match objective {
        Objective::BinaryLogistic => labels
            .iter()
            .enumerate()
            .map(|(r, &y)| if y == 1 { softplus(-margins[r]) } else { softplus(margins[r]) })
            .sum(),
        Objective::Softmax => labels
            .iter()
            .enumerate()
            .map(|(r, &y)| {
                let m = &margins[r * groups..(r + 1) * groups];
                let max = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + m.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - m[y]
            })
            .sum(),
    };
    total / labels.len() as f64
}

impl GbdtModel {
    /// Assembles a model from explicit trees; used for hand-built and
    /// constant models. Tree order follows the round-major convention.
    pub fn from_trees(
        class_count: usize,
        feature_count: usize,
        base_score: Vec<f64>,
        trees: Vec<Tree>,
    ) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::InvalidParams("class_count must be >= 2".into()));
        }
        let objective = Objective::for_classes(class_count);
        let groups = objective.groups(class_count);
        if base_score.len() != groups || trees.len() % groups != 0 {
            return Err(Error::InvalidParams(format!(
                "{} base scores and {} trees do not fit {groups} groups",
                base_score.len(),
                trees.len()
            )));
        }
        for tree in &trees {
            validate_tree(tree, feature_count)?;
        }
        Ok(GbdtModel {
            params: GbdtParams {
                rounds: trees.len() / groups,
                ..GbdtParams::default()
            },
            objective,
            class_count,
            feature_count,
            base_score,
            trees,
            loss_history: Vec::new(),
        })
    }

    /// Tree-free model that scores every row with the given class prior.
    pub fn from_prior(priors: &[f64], feature_count: usize) -> Result<Self> {
        let k = priors.len();
        let base = if k == 2 {
            vec![(priors[1].max(PRIOR_FLOOR) / priors[0].max(PRIOR_FLOOR)).ln()]
        } else {
            priors.iter().map(|p| p.max(PRIOR_FLOOR).ln()).collect()
        };
        Self::from_trees(k, feature_count, base, Vec::new())
    }

    pub fn params(&self) -> &GbdtParams {
        &self.params
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn base_score(&self) -> &[f64] {
        &self.base_score
    }

    /// Mean training loss before boosting and after every round.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    fn groups(&self) -> usize {
        self.objective.groups(self.class_count)
    }

    fn scores_for(&self, row: &[f64], out: &mut [f64]) {
        let groups = self.groups();
        let mut margins = self.base_score.clone();
        for (i, tree) in self.trees.iter().enumerate() {
            margins[i % groups] += tree.eval(row);
        }
        match self.objective {
            Objective::BinaryLogistic => {
                let p = sigmoid(margins[0]);
                out[0] = 1.0 - p;
                out[1] = p;
            }
            Objective::Softmax => {
                softmax_in_place(&mut margins);
                out.copy_from_slice(&margins);
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = LeWriter::new(Vec::new());
        (|| -> std::io::Result<()> {
            w.bytes(MAGIC)?;
            w.u16(1)?;
            let p = &self.params;
            w.u32(p.rounds as u32)?;
            w.u32(p.max_depth as u32)?;
            w.f64(p.learning_rate)?;
            w.f64(p.min_child_weight)?;
            w.f64(p.l2_lambda)?;
            w.f64(p.subsample)?;
            w.u64(p.seed)?;
            w.u8(match self.objective {
                Objective::BinaryLogistic => 0,
                Objective::Softmax => 1,
            })?;
            w.u32(self.class_count as u32)?;
            w.u32(self.feature_count as u32)?;
            w.u32(self.base_score.len() as u32)?;
            w.f64s(&self.base_score)?;
            w.u32(self.trees.len() as u32)?;
            for tree in &self.trees {
                w.u32(tree.nodes.len() as u32)?;
                for node in &tree.nodes {
                    match *node {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            w.u8(0)?;
                            w.u32(feature)?;
                            w.f64(threshold)?;
                            w.u32(left)?;
                            w.u32(right)?;
                        }
                        Node::Leaf { weight } => {
                            w.u8(1)?;
                            w.f64(weight)?;
                        }
                    }
                }
            }
            w.u32(self.loss_history.len() as u32)?;
            w.f64s(&self.loss_history)
        })()
        .expect("in-memory write");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = LeReader::new(bytes);
        let model = Self::read(&mut r)?;
        r.finish()?;
        Ok(model)
    }

    pub(crate) fn read(r: &mut LeReader<'_>) -> Result<Self> {
        r.magic(MAGIC)?;
        let version = r.u16()?;
        if version != 1 {
            return Err(Error::UnsupportedVersion(version));
        }
        let params = GbdtParams {
            rounds: r.u32()? as usize,
            max_depth: r.u32()? as usize,
            learning_rate: r.f64()?,
            min_child_weight: r.f64()?,
            l2_lambda: r.f64()?,
            subsample: r.f64()?,
            seed: r.u64()?,
        };
        let objective = match r.u8()? {
            0 => Objective::BinaryLogistic,
            1 => Objective::Softmax,
            other => return Err(Error::DimMismatch(format!("unknown objective tag {other}"))),
        };
        let class_count = r.u32()? as usize;
        let feature_count = r.u32()? as usize;
        let groups = r.u32()? as usize;
        let base_score = r.f64s(groups)?;
        let tree_count = r.u32()? as usize;
        let mut trees = Vec::with_capacity(tree_count.min(r.remaining()));
        for _ in 0..tree_count {
            let node_count = r.u32()? as usize;
            let mut nodes = Vec::with_capacity(node_count.min(r.remaining()));
            for _ in 0..node_count {
                nodes.push(match r.u8()? {
                    0 => Node::Split {
                        feature: r.u32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    1 => Node::Leaf { weight: r.f64()? },
                    other => return Err(Error::DimMismatch(format!("unknown node tag {other}"))),
                });
            }
            let tree = Tree::new(nodes);
            validate_tree(&tree, feature_count)?;
            trees.push(tree);
        }
        let history_len = r.u32()? as usize;
        let loss_history = r.f64s(history_len)?;
        if objective != Objective::for_classes(class_count) || groups != objective.groups(class_count) {
            return Err(Error::DimMismatch("objective disagrees with class count".into()));
        }
        Ok(GbdtModel {
            params,
            objective,
            class_count,
            feature_count,
            base_score,
            trees,
            loss_history,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }

    /// Text dump of every tree for auditing.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let groups = self.groups();
        let _ = writeln!(
            out,
            "objective={:?} classes={} features={} trees={}",
            self.objective,
            self.class_count,
            self.feature_count,
            self.trees.len()
        );
        let _ = writeln!(out, "base_score={:?}", self.base_score);
        for (i, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "booster[{i}] round={} group={}:", i / groups, i % groups);
            dump_node(&mut out, tree, 0, 1);
        }
        out
    }
}

fn dump_node(out: &mut String, tree: &Tree, at: usize, depth: usize) {
    let indent = "\t".repeat(depth);
    match tree.nodes[at] {
        Node::Leaf { weight } => {
            let _ = writeln!(out, "{indent}{at}:leaf={weight}");
        }
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let _ = writeln!(out, "{indent}{at}:[f{feature}<{threshold}] yes={left},no={right}");
            dump_node(out, tree, left as usize, depth + 1);
            dump_node(out, tree, right as usize, depth + 1);
        }
    }
}

fn validate_tree(tree: &Tree, feature_count: usize) -> Result<()> {
    let len = tree.nodes.len();
    if len == 0 {
        return Err(Error::DimMismatch("empty tree".into()));
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        match *node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                // children always follow their parent, which rules out cycles
                let ok = (feature as usize) < feature_count
                    && !threshold.is_nan()
                    && (left as usize) > i
                    && (right as usize) > i
                    && (left as usize) < len
                    && (right as usize) < len;
                if !ok {
                    return Err(Error::DimMismatch(format!("malformed split node {i}")));
                }
            }
            Node::Leaf { weight } => {
                if !weight.is_finite() {
                    return Err(Error::Numeric(format!("non-finite leaf weight at node {i}")));
                }
            }
        }
    }
    Ok(())
}

impl Classifier for GbdtModel {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn predict(&self, x: &Matrix) -> Result<Prediction> {
        if x.cols() != self.feature_count {
            return Err(Error::DimMismatch(format!(
                "model expects {} features, got {}",
                self.feature_count,
                x.cols()
            )));
        }
        let k = self.class_count;
        let mut scores = Matrix::zeros(x.rows(), k);
        if k > 0 && x.rows() > 0 {
            let t = self.feature_count.max(1);
            let rows: Vec<&[f64]> = if self.feature_count == 0 {
                vec![&[][..]; x.rows()]
            } else {
                x.as_slice().chunks(t).collect()
            };
            scores
                .as_mut_slice()
                .par_chunks_mut(k)
                .zip(rows.par_iter())
                .for_each(|(out, row)| self.scores_for(row, out));
        }
        Ok(Prediction::from_scores(scores))
    }
}

impl Trainer for GbdtParams {
    type Model = GbdtModel;

    fn train(&self, features: &Matrix, labels: &[usize], class_count: usize) -> Result<GbdtModel> {
        train(features, labels, class_count, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(GbdtParams::default().validate().is_ok());
        for bad in [
            GbdtParams { rounds: 0, ..Default::default() },
            GbdtParams { max_depth: 0, ..Default::default() },
            GbdtParams { learning_rate: 0.0, ..Default::default() },
            GbdtParams { learning_rate: 1.5, ..Default::default() },
            GbdtParams { l2_lambda: -1.0, ..Default::default() },
            GbdtParams { subsample: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn constant_labels_rejected() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let err = train(&x, &[1, 1, 1], 3, &GbdtParams::default()).unwrap_err();
        assert!(matches!(err, Error::SingleClassInput));
    }

    #[test]
    fn non_finite_rejected() {
        let x = Matrix::from_rows(&[[1.0], [f64::NAN]]).unwrap();
        let err = train(&x, &[0, 1], 2, &GbdtParams::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFeature { row: 1, col: 0 }));
    }

    #[test]
    fn prior_model_scores_prior() {
        let model = GbdtModel::from_prior(&[0.2, 0.5, 0.3], 2).unwrap();
        let pred = model.predict(&Matrix::zeros(3, 2)).unwrap();
        for row in pred.scores.iter_rows() {
            assert!((row[0] - 0.2).abs() < 1e-12);
            assert!((row[1] - 0.5).abs() < 1e-12);
            assert!((row[2] - 0.3).abs() < 1e-12);
        }
        assert_eq!(pred.labels, vec![1, 1, 1]);
    }

    #[test]
    fn hand_built_stump_matches_manual_traversal() {
        let stump = Tree::new(vec![
            Node::Split {
                feature: 1,
                threshold: 0.5,
                left: 1,
                right: 2,
            },
            Node::Leaf { weight: -2.0 },
            Node::Leaf { weight: 3.0 },
        ]);
        let model = GbdtModel::from_trees(2, 2, vec![0.0], vec![stump]).unwrap();
        let x = Matrix::from_rows(&[[9.0, 0.0], [9.0, 0.5], [-1.0, 1.0]]).unwrap();
        let pred = model.predict(&x).unwrap();
        // by hand: row0 goes left (-2), rows 1 and 2 go right (+3)
        let expected = [-2.0f64, 3.0, 3.0];
        for (i, m) in expected.iter().enumerate() {
            let p = 1.0 / (1.0 + (-m).exp());
            assert!((pred.scores.get(i, 1) - p).abs() < 1e-15);
        }
        assert_eq!(pred.labels, vec![0, 1, 1]);
    }

    #[test]
    fn malformed_trees_rejected() {
        let bad = Tree::new(vec![Node::Split {
            feature: 5,
            threshold: 0.0,
            left: 1,
            right: 2,
        }]);
        assert!(GbdtModel::from_trees(2, 2, vec![0.0], vec![bad]).is_err());
    }

    #[test]
    fn predict_checks_width() {
        let model = GbdtModel::from_prior(&[0.5, 0.5], 3).unwrap();
        assert!(matches!(model.predict(&Matrix::zeros(1, 2)), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn gbt1_round_trip() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let model = train(&x, &[0, 0, 1, 1], 2, &GbdtParams { rounds: 3, min_child_weight: 0.0, ..Default::default() }).unwrap();
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..4], b"GBT1");
        assert_eq!(GbdtModel::from_bytes(&bytes).unwrap(), model);
        assert!(model.dump().contains("booster[2]"));
    }
}
