use std::path::Path;

use nalgebra::DMatrix;

use crate::binio::{read_file, write_file, LeReader, LeWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 4] = b"PCA1";

/// Fitted principal component projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k × d`, orthonormal rows.
    components: Matrix,
    explained_variance: Vec<f64>,
}

/// Fits the top-`k` principal directions from a thin SVD of the centered data.
///
/// Each component is sign-normalized so that its largest-magnitude entry is
/// positive (first such entry on exact ties).
pub fn fit_pca(data: &Matrix, k: usize) -> Result<PcaModel> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::DegenerateData(format!("PCA needs at least 2 rows, got {n}")));
    }
    let max_k = (n - 1).min(d);
    if k == 0 || k > max_k {
        return Err(Error::KTooLarge { k, max: max_k });
    }
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("PCA input contains non-finite values".into()));
    }

    let mut mean = vec![0.0; d];
    for row in data.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |r, c| data.get(r, c) - mean[c]);
    if centered.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData("all rows are identical".into()));
    }

    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD did not produce right singular vectors".into()))?;
    let singular = svd.singular_values;

    let mut order: Vec<usize> = (0..singular.len()).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]).then(a.cmp(&b)));

    let mut components = Matrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    for (out_row, &src) in order.iter().take(k).enumerate() {
        let row = components.row_mut(out_row);
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = v_t[(src, c)];
        }
        normalize_sign(row);
        let s = singular[src];
        explained_variance.push(s * s / (n - 1) as f64);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

fn normalize_sign(row: &mut [f64]) {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = i;
        }
    }
    if row[best] < 0.0 {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// `(data - mean) · componentsᵀ`.
    pub fn apply(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.input_dim() {
            return Err(Error::DimMismatch(format!(
                "PCA fitted on {} features, got {}",
                self.input_dim(),
                data.cols()
            )));
        }
        let k = self.k();
        let mut out = Matrix::zeros(data.rows(), k);
        let mut centered = vec![0.0; self.input_dim()];
        for (r, row) in data.iter_rows().enumerate() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - m;
            }
            for j in 0..k {
                let comp = self.components.row(j);
                out.set(r, j, comp.iter().zip(&centered).map(|(a, b)| a * b).sum());
            }
        }
        Ok(out)
    }

    /// Maps projected rows back to input space: `scores · components + mean`.
    pub fn reconstruct(&self, scores: &Matrix) -> Result<Matrix> {
        if scores.cols() != self.k() {
            return Err(Error::DimMismatch(format!(
                "expected {} scores per row, got {}",
                self.k(),
                scores.cols()
            )));
        }
        let d = self.input_dim();
        let mut out = Matrix::zeros(scores.rows(), d);
        for (r, s) in scores.iter_rows().enumerate() {
            let row = out.row_mut(r);
            row.copy_from_slice(&self.mean);
            for (j, &w) in s.iter().enumerate() {
                for (o, c) in row.iter_mut().zip(self.components.row(j)) {
                    *o += w * c;
                }
            }
        }
        Ok(out)
    }

    /// `PCA1`: magic, u32 d, u32 k, then mean, components (row-major) and
    /// explained variance as little-endian f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = LeWriter::new(Vec::new());
        (|| -> std::io::Result<()> {
            w.bytes(MAGIC)?;
            w.u32(self.input_dim() as u32)?;
            w.u32(self.k() as u32)?;
            w.f64s(&self.mean)?;
            w.f64s(self.components.as_slice())?;
            w.f64s(&self.explained_variance)
        })()
        .expect("in-memory write");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = LeReader::new(bytes);
        r.magic(MAGIC)?;
        let d = r.u32()? as usize;
        let k = r.u32()? as usize;
        let mean = r.f64s(d)?;
        let components = Matrix::from_vec(k, d, r.f64s(k * d)?)?;
        let explained_variance = r.f64s(k)?;
        r.finish()?;
        Ok(PcaModel {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}
