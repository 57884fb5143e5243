//! HFT1 host-tensor container.
//!
//! Little-endian layout: magic `HFT1`, u16 version (1), u64 N, u32 m, n, p, q,
//! N id records (u32 byte length + UTF-8), N event matrices of m·n f32 in
//! row-major order, then N message matrices of p·q f32.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binio::{read_file, write_file, LeReader, LeWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HFT1";
const VERSION: u16 = 1;

/// Event matrix is `m × n`, message matrix is `p × q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HostDims {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl HostDims {
    pub fn new(m: usize, n: usize, p: usize, q: usize) -> Self {
        HostDims { m, n, p, q }
    }

    pub fn event_len(&self) -> usize {
        self.m * self.n
    }

    pub fn message_len(&self) -> usize {
        self.p * self.q
    }
}

/// Event and message matrices for a set of samples, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct HostTensorSet {
    sample_ids: Vec<String>,
    dims: HostDims,
    event: Vec<f32>,
    message: Vec<f32>,
}

impl HostTensorSet {
    pub fn new(
        sample_ids: Vec<String>,
        dims: HostDims,
        event: Vec<f32>,
        message: Vec<f32>,
    ) -> Result<Self> {
        let n = sample_ids.len();
        if event.len() != n * dims.event_len() || message.len() != n * dims.message_len() {
            return Err(Error::DimMismatch(format!(
                "{n} samples with dims {dims:?} need {} event and {} message values, got {} and {}",
                n * dims.event_len(),
                n * dims.message_len(),
                event.len(),
                message.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(HostTensorSet {
            sample_ids,
            dims,
            event,
            message,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn dims(&self) -> HostDims {
        self.dims
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Row-major `m × n` event matrix of sample `i`.
    pub fn event(&self, i: usize) -> &[f32] {
        let len = self.dims.event_len();
        &self.event[i * len..(i + 1) * len]
    }

    /// Row-major `p × q` message matrix of sample `i`.
    pub fn message(&self, i: usize) -> &[f32] {
        let len = self.dims.message_len();
        &self.message[i * len..(i + 1) * len]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims;
        let mut w = LeWriter::new(Vec::with_capacity(
            26 + 4 * (self.event.len() + self.message.len()),
        ));
        // Vec<u8> writes are infallible
        (|| -> std::io::Result<()> {
            w.bytes(MAGIC)?;
            w.u16(VERSION)?;
            w.u64(self.len() as u64)?;
            for v in [d.m, d.n, d.p, d.q] {
                w.u32(v as u32)?;
            }
            for id in &self.sample_ids {
                w.str(id)?;
            }
            w.f32s(&self.event)?;
            w.f32s(&self.message)
        })()
        .expect("in-memory write");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = LeReader::new(bytes);
        r.magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = r.u64()? as usize;
        let dims = HostDims {
            m: r.u32()? as usize,
            n: r.u32()? as usize,
            p: r.u32()? as usize,
            q: r.u32()? as usize,
        };
        // every id record needs at least its 4-byte length
        if n.saturating_mul(4) > r.remaining() {
            return Err(Error::TruncatedFile);
        }
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(r.str()?);
        }
        let floats = n
            .checked_mul(dims.event_len() + dims.message_len())
            .ok_or_else(|| Error::DimMismatch("declared sizes overflow".into()))?;
        if r.remaining() != floats * 4 {
            return Err(Error::DimMismatch(format!(
                "declared {n} samples of {dims:?} need {} payload bytes, file has {}",
                floats * 4,
                r.remaining()
            )));
        }
        let event = r.f32s(n * dims.event_len())?;
        let message = r.f32s(n * dims.message_len())?;
        r.finish()?;
        Self::new(ids, dims, event, message)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }
}

pub fn load_host_tensors(path: impl AsRef<Path>) -> Result<HostTensorSet> {
    HostTensorSet::from_bytes(&read_file(path.as_ref())?)
}
