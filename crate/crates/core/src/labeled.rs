use std::path::Path;

use crate::binio::{read_file, write_file, LeReader, LeWriter};
use crate::dataset::{read_label_map, tally, write_label_map, LabelMap};
use crate::error::{Error, Result};
use crate::fusion::{FusionMode, HybridMatrix, Provenance};
use crate::matrix::Matrix;

const MAGIC: &[u8; 4] = b"HYB1";
const PROJECTED_TAG: u8 = 0xFF;

/// Feature rows with multiclass label ids; what classifiers and the cascade consume.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub values: Matrix,
    pub labels: Vec<usize>,
    pub label_map: LabelMap,
}

/// How a feature matrix on disk was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixOrigin {
    Fused(FusionMode, Provenance),
    Projected,
}

impl LabeledMatrix {
    pub fn new(values: Matrix, labels: Vec<usize>, label_map: LabelMap) -> Result<Self> {
        if values.rows() != labels.len() {
            return Err(Error::DimMismatch(format!(
                "{} rows but {} labels",
                values.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_map.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: label_map.len(),
            });
        }
        Ok(LabeledMatrix {
            values,
            labels,
            label_map,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn class_distribution(&self) -> std::collections::BTreeMap<String, usize> {
        tally(&self.labels, &self.label_map)
    }

    /// Serializes into the `HYB1` container.
    ///
    /// Layout (little-endian): magic, u16 version 1, u8 origin tag (fusion
    /// mode 0..=3, or 0xFF for a PCA projection), u32 f, event rows, event
    /// cols, message rows, message cols, label map (u32 K, K strings, u32
    /// benign id), u64 N, u32 width, N u32 labels, then N·width f64 values.
    pub fn to_bytes(&self, origin: MatrixOrigin) -> Vec<u8> {
        let (tag, prov) = match origin {
            MatrixOrigin::Fused(mode, prov) => (mode.tag(), prov),
            MatrixOrigin::Projected => (PROJECTED_TAG, Provenance::default()),
        };
        let mut w = LeWriter::new(Vec::new());
        (|| -> std::io::Result<()> {
            w.bytes(MAGIC)?;
            w.u16(1)?;
            w.u8(tag)?;
            for v in [prov.f, prov.event.0, prov.event.1, prov.message.0, prov.message.1] {
                w.u32(v as u32)?;
            }
            write_label_map(&mut w, &self.label_map)?;
            w.u64(self.len() as u64)?;
            w.u32(self.width() as u32)?;
            for &l in &self.labels {
                w.u32(l as u32)?;
            }
            w.f64s(self.values.as_slice())
        })()
        .expect("in-memory write");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, MatrixOrigin)> {
        let mut r = LeReader::new(bytes);
        r.magic(MAGIC)?;
        let version = r.u16()?;
        if version != 1 {
            return Err(Error::UnsupportedVersion(version));
        }
        let tag = r.u8()?;
        let mut p = [0usize; 5];
        for v in &mut p {
            *v = r.u32()? as usize;
        }
        let prov = Provenance {
            f: p[0],
            event: (p[1], p[2]),
            message: (p[3], p[4]),
        };
        let origin = if tag == PROJECTED_TAG {
            MatrixOrigin::Projected
        } else {
            let mode = FusionMode::from_tag(tag)
                .ok_or_else(|| Error::DimMismatch(format!("unknown origin tag {tag}")))?;
            MatrixOrigin::Fused(mode, prov)
        };
        let label_map = read_label_map(&mut r)?;
        let n = r.u64()? as usize;
        let width = r.u32()? as usize;
        if n.saturating_mul(4) > r.remaining() {
            return Err(Error::TruncatedFile);
        }
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            labels.push(r.u32()? as usize);
        }
        let values = Matrix::from_vec(n, width, r.f64s(n * width)?)?;
        r.finish()?;
        Ok((Self::new(values, labels, label_map)?, origin))
    }

    pub fn save(&self, path: impl AsRef<Path>, origin: MatrixOrigin) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes(origin))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, MatrixOrigin)> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}

impl From<HybridMatrix> for LabeledMatrix {
    fn from(h: HybridMatrix) -> Self {
        h.into_labeled()
    }
}
