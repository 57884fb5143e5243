//! Train/predict contract and the built-in gradient-boosted tree learner.

mod gbdt;
mod tree;

pub use gbdt::{predict, train, GbdtModel, GbdtParams, Objective};
pub use tree::{Node, Tree};

use crate::error::Result;
use crate::matrix::Matrix;

/// Output of a classifier over `M` rows and `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// `M × K`; rows sum to 1 for probabilistic models.
    pub scores: Matrix,
}

impl Prediction {
    /// Builds labels as row argmaxes of `scores`.
    pub fn from_scores(scores: Matrix) -> Self {
        let labels = scores.iter_rows().map(argmax).collect();
        Prediction { labels, scores }
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// A fitted model usable for prediction.
pub trait Classifier {
    fn class_count(&self) -> usize;
    fn feature_count(&self) -> usize;
    fn predict(&self, features: &Matrix) -> Result<Prediction>;
}

/// Something that turns labeled rows into a [`Classifier`].
pub trait Trainer {
    type Model: Classifier;

    fn train(&self, features: &Matrix, labels: &[usize], class_count: usize) -> Result<Self::Model>;
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn feature_count(&self) -> usize {
        (**self).feature_count()
    }

    fn predict(&self, features: &Matrix) -> Result<Prediction> {
        (**self).predict(features)
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn feature_count(&self) -> usize {
        (**self).feature_count()
    }

    fn predict(&self, features: &Matrix) -> Result<Prediction> {
        (**self).predict(features)
    }
}
