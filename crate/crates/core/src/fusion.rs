//! Flattening of host matrices and concatenation into hybrid feature vectors.
//!
//! Column layout is always `[flow | event | message]`, keeping only the
//! components present in the chosen [`FusionMode`]. Host values are widened
//! from f32 to f64 on the way in.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::AlignedDataset;
use crate::error::{Error, Result};
use crate::labeled::{LabeledMatrix, MatrixOrigin};
use crate::matrix::Matrix;
use crate::reduction::{apply_selection, SelectionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    /// Flow features only (A).
    FlowOnly,
    /// Flow + flattened event features (H1).
    FlowEvent,
    /// Flow + flattened message features (H2).
    FlowMessage,
    /// Flow + event + message (H3).
    FlowEventMessage,
}

impl FusionMode {
    pub const ALL: [FusionMode; 4] = [
        FusionMode::FlowOnly,
        FusionMode::FlowEvent,
        FusionMode::FlowMessage,
        FusionMode::FlowEventMessage,
    ];

    pub fn uses_event(self) -> bool {
        matches!(self, FusionMode::FlowEvent | FusionMode::FlowEventMessage)
    }

    pub fn uses_message(self) -> bool {
        matches!(self, FusionMode::FlowMessage | FusionMode::FlowEventMessage)
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn short_name(self) -> &'static str {
        match self {
            FusionMode::FlowOnly => "flow",
            FusionMode::FlowEvent => "h1",
            FusionMode::FlowMessage => "h2",
            FusionMode::FlowEventMessage => "h3",
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flow" | "flow-only" | "a" => Ok(FusionMode::FlowOnly),
            "h1" | "flow-event" => Ok(FusionMode::FlowEvent),
            "h2" | "flow-message" => Ok(FusionMode::FlowMessage),
            "h3" | "flow-event-message" => Ok(FusionMode::FlowEventMessage),
            other => Err(Error::ConfigInvalid(format!("unknown fusion mode `{other}`"))),
        }
    }
}

/// Row-major flattening: `out[i*n + j] == matrix[i][j]`.
pub fn flatten<T: Copy, R: AsRef<[T]>>(matrix: &[R]) -> Vec<T> {
    let mut out = Vec::with_capacity(matrix.len() * matrix.first().map_or(0, |r| r.as_ref().len()));
    for row in matrix {
        out.extend_from_slice(row.as_ref());
    }
    out
}

/// Inverse of [`flatten`] for an `rows × cols` matrix.
pub fn reshape<T: Copy>(values: &[T], rows: usize, cols: usize) -> Result<Vec<Vec<T>>> {
    if values.len() != rows * cols {
        return Err(Error::DimMismatch(format!(
            "{} values cannot be reshaped to {rows}x{cols}",
            values.len()
        )));
    }
    Ok(values.chunks(cols.max(1)).take(rows).map(<[T]>::to_vec).collect())
}

/// Total feature count of a hybrid vector.
pub fn hybrid_width(f: usize, m: usize, n: usize, p: usize, q: usize, mode: FusionMode) -> usize {
    let event = if mode.uses_event() { m * n } else { 0 };
    let message = if mode.uses_message() { p * q } else { 0 };
    f + event + message
}

/// Post-reduction shapes of the fused components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub f: usize,
    pub event: (usize, usize),
    pub message: (usize, usize),
}

/// Optional row/column selection applied to host matrices before flattening.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HostSelection {
    pub event: Option<SelectionPlan>,
    pub message: Option<SelectionPlan>,
}

/// Fused feature matrix plus how it was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridMatrix {
    data: LabeledMatrix,
    mode: FusionMode,
    provenance: Provenance,
}

impl HybridMatrix {
    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn width(&self) -> usize {
        self.data.width()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &Matrix {
        &self.data.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.data.labels
    }

    pub fn data(&self) -> &LabeledMatrix {
        &self.data
    }

    pub fn into_labeled(self) -> LabeledMatrix {
        self.data
    }

    pub fn origin(&self) -> MatrixOrigin {
        MatrixOrigin::Fused(self.mode, self.provenance)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.to_bytes(self.origin())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match LabeledMatrix::from_bytes(bytes)? {
            (data, MatrixOrigin::Fused(mode, provenance)) => {
                let p = provenance;
                let expected = hybrid_width(p.f, p.event.0, p.event.1, p.message.0, p.message.1, mode);
                if expected != data.width() {
                    return Err(Error::DimMismatch(format!(
                        "width {} disagrees with provenance ({expected})",
                        data.width()
                    )));
                }
                Ok(HybridMatrix {
                    data,
                    mode,
                    provenance,
                })
            }
            (_, MatrixOrigin::Projected) => Err(Error::DimMismatch(
                "container holds a projected matrix, not a fused one".into(),
            )),
        }
    }
}

/// Reduces (when plans are given), flattens and concatenates each sample's
/// components into one row.
pub fn fuse(ds: &AlignedDataset, mode: FusionMode, selection: &HostSelection) -> Result<HybridMatrix> {
    let dims = ds.dims();
    let host = dims.host;
    let check = |plan: &Option<SelectionPlan>, src: (usize, usize), what: &str| -> Result<(usize, usize)> {
        match plan {
            Some(p) if p.source_dims() != src => Err(Error::SelectionOutOfRange(format!(
                "{what} plan expects {:?}, dataset has {src:?}",
                p.source_dims()
            ))),
            Some(p) => Ok(p.target_dims()),
            None => Ok(src),
        }
    };
    let event_dims = check(&selection.event, (host.m, host.n), "event")?;
    let message_dims = check(&selection.message, (host.p, host.q), "message")?;
    let provenance = Provenance {
        f: dims.f,
        event: if mode.uses_event() { event_dims } else { (0, 0) },
        message: if mode.uses_message() { message_dims } else { (0, 0) },
    };
    let width = hybrid_width(
        dims.f,
        event_dims.0,
        event_dims.1,
        message_dims.0,
        message_dims.1,
        mode,
    );

    let mut values = Matrix::zeros(ds.len(), width);
    values
        .as_mut_slice()
        .par_chunks_mut(width.max(1))
        .enumerate()
        .try_for_each(|(i, row)| -> Result<()> {
            let rec = ds.record(i);
            row[..dims.f].copy_from_slice(rec.flow);
            let mut at = dims.f;
            if mode.uses_event() {
                at = write_component(row, at, rec.event, (host.m, host.n), selection.event.as_ref())?;
            }
            if mode.uses_message() {
                write_component(row, at, rec.message, (host.p, host.q), selection.message.as_ref())?;
            }
            Ok(())
        })?;

    let data = LabeledMatrix::new(values, ds.labels().to_vec(), ds.label_map().clone())?;
    Ok(HybridMatrix {
        data,
        mode,
        provenance,
    })
}

fn write_component(
    row: &mut [f64],
    at: usize,
    matrix: &[f32],
    dims: (usize, usize),
    plan: Option<&SelectionPlan>,
) -> Result<usize> {
    let reduced;
    let flat: &[f32] = match plan {
        Some(p) => {
            reduced = apply_selection(p, matrix, dims)?;
            &reduced
        }
        None => matrix,
    };
    for (dst, &src) in row[at..at + flat.len()].iter_mut().zip(flat) {
        *dst = f64::from(src);
    }
    Ok(at + flat.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{HostDims, LabelMap};

    #[test]
    fn flatten_single_row() {
        assert_eq!(flatten(&[[1, 2, 3]]), vec![1, 2, 3]);
    }

    #[test]
    fn flatten_event_matrix_width() {
        let m = vec![vec![0.0f32; 8]; 28];
        assert_eq!(flatten(&m).len(), 224);
    }

    #[test]
    fn width_arithmetic() {
        assert_eq!(hybrid_width(132, 28, 8, 100, 768, FusionMode::FlowEventMessage), 77_156);
        assert_eq!(hybrid_width(63, 2182, 8, 512, 768, FusionMode::FlowEventMessage), 410_735);
        assert_eq!(hybrid_width(5, 3, 3, 3, 3, FusionMode::FlowOnly), 5);
        assert_eq!(hybrid_width(132, 0, 0, 15, 50, FusionMode::FlowMessage), 882);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("H3".parse::<FusionMode>().unwrap(), FusionMode::FlowEventMessage);
        assert_eq!("flow".parse::<FusionMode>().unwrap(), FusionMode::FlowOnly);
        assert!("h4".parse::<FusionMode>().is_err());
    }

    fn one_sample() -> AlignedDataset {
        AlignedDataset::from_parts(
            vec!["s".into()],
            Matrix::from_rows(&[[7.0, 8.0]]).unwrap(),
            HostDims::new(1, 2, 1, 1),
            vec![1.0, 2.0],
            vec![9.0],
            vec![0],
            LabelMap::fit(["Benign", "Bot"], None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fuse_h1_single_sample() {
        let h = fuse(&one_sample(), FusionMode::FlowEvent, &HostSelection::default()).unwrap();
        assert_eq!(h.values().row(0), &[7.0, 8.0, 1.0, 2.0]);
        assert_eq!(h.provenance().event, (1, 2));
        assert_eq!(h.provenance().message, (0, 0));
    }

    #[test]
    fn fuse_rejects_mismatched_plan() {
        let plan = SelectionPlan::generate((3, 3), (1, 1), 0).unwrap();
        let sel = HostSelection {
            event: Some(plan),
            message: None,
        };
        let err = fuse(&one_sample(), FusionMode::FlowEvent, &sel).unwrap_err();
        assert!(matches!(err, Error::SelectionOutOfRange(_)));
    }

    #[test]
    fn hyb1_round_trip() {
        let h = fuse(&one_sample(), FusionMode::FlowEventMessage, &HostSelection::default()).unwrap();
        assert_eq!(HybridMatrix::from_bytes(&h.to_bytes()).unwrap(), h);
    }
}
