//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the code under test except to
//! build inputs.
#![allow(dead_code)]

use std::sync::Mutex;

use hybrid_ids::classifier::{Classifier, Prediction};
use hybrid_ids::rng::SplitMix64;
use hybrid_ids::{LabelMap, Matrix, Result};

pub fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.next_gaussian()).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Sample covariance (divisor `N - 1`) as nested rows.
pub fn covariance(x: &Matrix) -> Vec<Vec<f64>> {
    let (n, d) = x.shape();
    let mut mean = vec![0.0; d];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for row in x.iter_rows() {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for r in &mut cov {
        for v in r.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    cov
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order and the matching unit eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..d).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..d).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Largest absolute difference between two vectors after aligning the sign
/// of `b` to `a`.
pub fn sign_aligned_diff(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    a.iter().zip(b).map(|(x, y)| (x - s * y).abs()).fold(0.0, f64::max)
}

/// Per-class precision, recall, F1 and support counted straight from the
/// label lists, plus macro F1, weighted F1 and accuracy.
pub struct BruteScores {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

pub fn brute_scores(truth: &[usize], pred: &[usize], k: usize) -> BruteScores {
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut out = BruteScores {
        precision: vec![],
        recall: vec![],
        f1: vec![],
        support: vec![],
        macro_f1: 0.0,
        weighted_f1: 0.0,
        accuracy: 0.0,
    };
    for c in 0..k {
        let tp = truth.iter().zip(pred).filter(|&(&t, &p)| t == c && p == c).count() as u64;
        let fp = truth.iter().zip(pred).filter(|&(&t, &p)| t != c && p == c).count() as u64;
        let fn_ = truth.iter().zip(pred).filter(|&(&t, &p)| t == c && p != c).count() as u64;
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        out.precision.push(p);
        out.recall.push(r);
        out.f1.push(f);
        out.support.push(tp + fn_);
    }
    let n = truth.len() as f64;
    out.macro_f1 = out.f1.iter().sum::<f64>() / k as f64;
    out.weighted_f1 = if n == 0.0 {
        0.0
    } else {
        out.f1.iter().zip(&out.support).map(|(f, &s)| f * s as f64).sum::<f64>() / n
    };
    out.accuracy = ratio(
        truth.iter().zip(pred).filter(|(t, p)| t == p).count() as u64,
        truth.len() as u64,
    );
    out
}

/// Expands a confusion count table into aligned truth/prediction lists.
pub fn expand_counts(counts: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let mut truth = vec![];
    let mut pred = vec![];
    for (t, row) in counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                truth.push(t);
                pred.push(p);
            }
        }
    }
    (truth, pred)
}

pub fn numbered_label_map(k: usize, benign: usize) -> LabelMap {
    LabelMap::from_names((0..k).map(|c| format!("c{c}")).collect(), benign).unwrap()
}

/// Stub that predicts the integer stored in one feature column and records
/// how many rows it was asked about.
pub struct ColumnPredictor {
    pub column: usize,
    pub classes: usize,
    pub width: usize,
    pub seen_rows: Mutex<Vec<usize>>,
}

impl ColumnPredictor {
    pub fn new(column: usize, classes: usize, width: usize) -> Self {
        ColumnPredictor {
            column,
            classes,
            width,
            seen_rows: Mutex::new(vec![]),
        }
    }
}

impl Classifier for ColumnPredictor {
    fn class_count(&self) -> usize {
        self.classes
    }

    fn feature_count(&self) -> usize {
        self.width
    }

    fn predict(&self, x: &Matrix) -> Result<Prediction> {
        self.seen_rows.lock().unwrap().push(x.rows());
        let mut scores = Matrix::zeros(x.rows(), self.classes);
        for i in 0..x.rows() {
            let label = x.get(i, self.column) as usize;
            scores.set(i, label, 1.0);
        }
        Ok(Prediction::from_scores(scores))
    }
}

/// `n` points per class around well separated centers in `d` dimensions.
pub fn blobs(rng: &mut SplitMix64, centers: &[Vec<f64>], n: usize, sd: f64) -> (Matrix, Vec<usize>) {
    let d = centers[0].len();
    let mut data = Vec::with_capacity(centers.len() * n * d);
    let mut labels = Vec::with_capacity(centers.len() * n);
    for _ in 0..n {
        for (c, center) in centers.iter().enumerate() {
            data.extend(center.iter().map(|m| m + sd * rng.next_gaussian()));
            labels.push(c);
        }
    }
    (Matrix::from_vec(labels.len(), d, data).unwrap(), labels)
}

/// Two classes split by the sign of `x0 + x1` with a margin.
pub fn separable(rng: &mut SplitMix64, n: usize) -> (Matrix, Vec<usize>) {
    let mut data = Vec::with_capacity(n * 4);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let row: Vec<f64> = (0..4).map(|_| rng.next_gaussian() * 2.0).collect();
        let s = row[0] + row[1];
        if s.abs() < 0.3 {
            continue;
        }
        labels.push(usize::from(s > 0.0));
        data.extend(row);
    }
    (Matrix::from_vec(n, 4, data).unwrap(), labels)
}

pub fn four_blob_centers() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0, 0.0],
        vec![5.0, 0.0, 1.0],
        vec![0.0, 5.0, -1.0],
        vec![5.0, 5.0, 0.0],
    ]
}

pub fn nonincreasing(history: &[f64]) -> bool {
    history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
}
