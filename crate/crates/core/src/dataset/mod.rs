//! Ingestion, alignment, relabeling and splitting of flow + host datasets.

mod flow;
mod hft;
mod labels;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use flow::{
    load_flow_csv, load_flow_csv_with, read_flow_csv, sanitize, FlowCsvOptions, FlowTable,
    NonFinitePolicy,
};
pub use hft::{load_host_tensors, HostDims, HostTensorSet};
pub use labels::{LabelMap, DEFAULT_BENIGN_NAMES};

use crate::binio::{read_file, write_file, LeReader, LeWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Flow width plus host matrix shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub f: usize,
    pub host: HostDims,
}

/// One aligned sample.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    pub id: &'a str,
    pub flow: &'a [f64],
    pub event: &'a [f32],
    pub message: &'a [f32],
    pub label: usize,
}

/// Flow vectors, host matrices and label ids joined by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    sample_ids: Vec<String>,
    flow: Matrix,
    event: Vec<f32>,
    message: Vec<f32>,
    labels: Vec<usize>,
    label_map: LabelMap,
    host_dims: HostDims,
}

impl AlignedDataset {
    pub fn from_parts(
        sample_ids: Vec<String>,
        flow: Matrix,
        host_dims: HostDims,
        event: Vec<f32>,
        message: Vec<f32>,
        labels: Vec<usize>,
        label_map: LabelMap,
    ) -> Result<Self> {
        let n = sample_ids.len();
        if flow.rows() != n
            || labels.len() != n
            || event.len() != n * host_dims.event_len()
            || message.len() != n * host_dims.message_len()
        {
            return Err(Error::DimMismatch("aligned dataset parts disagree on N".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_map.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: label_map.len(),
            });
        }
        Ok(AlignedDataset {
            sample_ids,
            flow,
            event,
            message,
            labels,
            label_map,
            host_dims,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn dims(&self) -> Dims {
        Dims {
            f: self.flow.cols(),
            host: self.host_dims,
        }
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn flow(&self) -> &Matrix {
        &self.flow
    }

    pub fn record(&self, i: usize) -> Record<'_> {
        let el = self.host_dims.event_len();
        let ml = self.host_dims.message_len();
        Record {
            id: &self.sample_ids[i],
            flow: self.flow.row(i),
            event: &self.event[i * el..(i + 1) * el],
            message: &self.message[i * ml..(i + 1) * ml],
            label: self.labels[i],
        }
    }

    pub fn records(&self) -> impl Iterator<Item = Record<'_>> {
        (0..self.len()).map(move |i| self.record(i))
    }

    /// Samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> AlignedDataset {
        let el = self.host_dims.event_len();
        let ml = self.host_dims.message_len();
        let mut event = Vec::with_capacity(indices.len() * el);
        let mut message = Vec::with_capacity(indices.len() * ml);
        for &i in indices {
            event.extend_from_slice(&self.event[i * el..(i + 1) * el]);
            message.extend_from_slice(&self.message[i * ml..(i + 1) * ml]);
        }
        AlignedDataset {
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            flow: self.flow.select_rows(indices),
            event,
            message,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_map: self.label_map.clone(),
            host_dims: self.host_dims,
        }
    }

    /// Flow side as a table with class names, for re-alignment or export.
    pub fn to_flow_table(&self) -> FlowTable {
        let names = (0..self.flow.cols()).map(|c| format!("f{c}")).collect();
        let labels = self
            .labels
            .iter()
            .map(|&l| self.label_map.name(l).to_owned())
            .collect();
        FlowTable::new(self.sample_ids.clone(), names, self.flow.clone(), labels)
            .expect("aligned dataset satisfies table invariants")
    }

    pub fn to_host_tensors(&self) -> HostTensorSet {
        HostTensorSet::new(
            self.sample_ids.clone(),
            self.host_dims,
            self.event.clone(),
            self.message.clone(),
        )
        .expect("aligned dataset satisfies tensor invariants")
    }

    /// Serializes to the `ALN1` container used between CLI stages.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = LeWriter::new(Vec::new());
        (|| -> std::io::Result<()> {
            w.bytes(b"ALN1")?;
            w.u16(1)?;
            write_label_map(&mut w, &self.label_map)?;
            w.u64(self.len() as u64)?;
            let d = self.dims();
            for v in [d.f, d.host.m, d.host.n, d.host.p, d.host.q] {
                w.u32(v as u32)?;
            }
            for id in &self.sample_ids {
                w.str(id)?;
            }
            for &l in &self.labels {
                w.u32(l as u32)?;
            }
            w.f64s(self.flow.as_slice())?;
            w.f32s(&self.event)?;
            w.f32s(&self.message)
        })()
        .expect("in-memory write");
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = LeReader::new(bytes);
        r.magic(b"ALN1")?;
        let version = r.u16()?;
        if version != 1 {
            return Err(Error::UnsupportedVersion(version));
        }
        let label_map = read_label_map(&mut r)?;
        let n = r.u64()? as usize;
        let f = r.u32()? as usize;
        let host = HostDims::new(
            r.u32()? as usize,
            r.u32()? as usize,
            r.u32()? as usize,
            r.u32()? as usize,
        );
        if n.saturating_mul(8) > r.remaining() {
            return Err(Error::TruncatedFile);
        }
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(r.str()?);
        }
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            labels.push(r.u32()? as usize);
        }
        let flow = Matrix::from_vec(n, f, r.f64s(n * f)?)?;
        let event = r.f32s(n * host.event_len())?;
        let message = r.f32s(n * host.message_len())?;
        r.finish()?;
        Self::from_parts(ids, flow, host, event, message, labels, label_map)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}

pub(crate) fn write_label_map<W: std::io::Write>(
    w: &mut LeWriter<W>,
    map: &LabelMap,
) -> std::io::Result<()> {
    w.u32(map.len() as u32)?;
    for name in map.names() {
        w.str(name)?;
    }
    w.u32(map.benign_id() as u32)
}

pub(crate) fn read_label_map(r: &mut LeReader<'_>) -> Result<LabelMap> {
    let k = r.u32()? as usize;
    if k.saturating_mul(4) > r.remaining() {
        return Err(Error::TruncatedFile);
    }
    let mut names = Vec::with_capacity(k);
    for _ in 0..k {
        names.push(r.str()?);
    }
    let benign = r.u32()? as usize;
    LabelMap::from_names(names, benign)
}

/// Joins flow rows and host tensors on sample id, keeping flow-table order.
pub fn align(flow: &FlowTable, host: &HostTensorSet, label_map: &LabelMap) -> Result<AlignedDataset> {
    let host_index: HashMap<&str, usize> = host
        .sample_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let dims = host.dims();
    let mut ids = Vec::new();
    let mut flow_rows = Vec::new();
    let mut event = Vec::new();
    let mut message = Vec::new();
    let mut labels = Vec::new();
    for (i, id) in flow.sample_ids().iter().enumerate() {
        let Some(&h) = host_index.get(id.as_str()) else {
            continue;
        };
        let name = &flow.labels()[i];
        let label = label_map
            .id(name)
            .ok_or_else(|| Error::UnknownLabel(name.clone()))?;
        ids.push(id.clone());
        flow_rows.push(i);
        event.extend_from_slice(host.event(h));
        message.extend_from_slice(host.message(h));
        labels.push(label);
    }
    if ids.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    AlignedDataset::from_parts(
        ids,
        flow.values().select_rows(&flow_rows),
        dims,
        event,
        message,
        labels,
        label_map.clone(),
    )
}

/// Per-class count of samples destined for the test side.
pub fn stratified_test_count(class_count: usize, test_fraction: f64) -> usize {
    let raw = (class_count as f64 * test_fraction).round() as usize;
    raw.clamp(1, class_count.saturating_sub(1).max(1))
}

/// Stratified split: per class, `round(count × test_fraction)` samples go to
/// test (at least one on each side). Classes are visited in id order and
/// each class's indices are shuffled by one SplitMix64 stream seeded with
/// `seed`. Both sides keep the input order.
pub fn split_stratified(
    ds: &AlignedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(AlignedDataset, AlignedDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction(test_fraction));
    }
    let k = ds.label_map.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut in_test = vec![false; ds.len()];
    let mut rng = SplitMix64::new(seed);
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::ClassTooSmall(ds.label_map.name(c).to_owned()));
        }
        let n_test = stratified_test_count(members.len(), test_fraction);
        rng.shuffle(members);
        for &i in &members[..n_test] {
            in_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_test[i]);
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// Benign → 0, every attack class → 1 over labels drawn from `map`.
pub fn binary_labels(labels: &[usize], benign_id: usize) -> Vec<usize> {
    labels.iter().map(|&l| usize::from(l != benign_id)).collect()
}

/// Positions of non-benign labels.
pub fn attack_indices(labels: &[usize], benign_id: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != benign_id)
        .map(|(i, _)| i)
        .collect()
}

/// Copy of `ds` with benign labeled 0 and all attacks labeled 1.
pub fn relabel_binary(ds: &AlignedDataset) -> AlignedDataset {
    let mut out = ds.clone();
    out.labels = binary_labels(&ds.labels, ds.label_map.benign_id());
    out.label_map = LabelMap::binary(ds.label_map.benign_name());
    out
}

/// Non-benign samples only, labels and order unchanged.
pub fn filter_attacks(ds: &AlignedDataset) -> Result<AlignedDataset> {
    let idx = attack_indices(&ds.labels, ds.label_map.benign_id());
    if idx.is_empty() {
        return Err(Error::NoAttackSamples);
    }
    Ok(ds.subset(&idx))
}

/// Count per class name, including classes with no samples.
pub fn class_distribution(ds: &AlignedDataset) -> BTreeMap<String, usize> {
    tally(&ds.labels, &ds.label_map)
}

pub(crate) fn tally(labels: &[usize], map: &LabelMap) -> BTreeMap<String, usize> {
    let mut counts = vec![0usize; map.len()];
    for &l in labels {
        counts[l] += 1;
    }
    map.names().iter().cloned().zip(counts).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow_table(ids: &[&str], labels: &[&str]) -> FlowTable {
        let n = ids.len();
        let values = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        FlowTable::new(
            ids.iter().map(|s| s.to_string()).collect(),
            vec!["x".into()],
            values,
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn host(ids: &[&str]) -> HostTensorSet {
        let n = ids.len();
        HostTensorSet::new(
            ids.iter().map(|s| s.to_string()).collect(),
            HostDims::new(1, 2, 1, 1),
            (0..2 * n).map(|v| v as f32).collect(),
            (0..n).map(|v| -(v as f32)).collect(),
        )
        .unwrap()
    }

    fn map() -> LabelMap {
        LabelMap::fit(["Benign", "Bot", "DoS"], None).unwrap()
    }

    #[test]
    fn align_identical_ids() {
        let ds = align(
            &flow_table(&["a", "b", "c"], &["Benign", "Bot", "DoS"]),
            &host(&["a", "b", "c"]),
            &map(),
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels(), &[0, 1, 2]);
        assert_eq!(ds.dims().f, 1);
    }

    #[test]
    fn align_keeps_intersection_in_flow_order() {
        let ds = align(
            &flow_table(&["a", "b", "c"], &["Benign", "Bot", "DoS"]),
            &host(&["d", "c", "b"]),
            &map(),
        )
        .unwrap();
        assert_eq!(ds.sample_ids(), &["b", "c"]);
        // host row 2 is "b": event [4,5], message [-2]
        assert_eq!(ds.record(0).event, &[4.0, 5.0]);
        assert_eq!(ds.record(0).message, &[-2.0]);
        assert_eq!(ds.record(1).flow, &[2.0]);
    }

    #[test]
    fn align_disjoint_is_empty_intersection() {
        let err = align(&flow_table(&["a"], &["Benign"]), &host(&["z"]), &map()).unwrap_err();
        assert!(matches!(err, Error::EmptyIntersection));
    }

    #[test]
    fn align_unknown_label() {
        let err = align(&flow_table(&["a"], &["Worm"]), &host(&["a"]), &map()).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel(n) if n == "Worm"));
    }

    #[test]
    fn align_is_idempotent() {
        let ds = align(
            &flow_table(&["a", "b", "c"], &["Benign", "Bot", "DoS"]),
            &host(&["c", "a"]),
            &map(),
        )
        .unwrap();
        let again = align(&ds.to_flow_table(), &ds.to_host_tensors(), ds.label_map()).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn relabel_then_filter() {
        let ds = align(
            &flow_table(&["a", "b", "c", "d"], &["Benign", "Bot", "Benign", "DoS"]),
            &host(&["a", "b", "c", "d"]),
            &map(),
        )
        .unwrap();
        let bin = relabel_binary(&ds);
        assert_eq!(bin.labels(), &[0, 1, 0, 1]);
        assert_eq!(ds.labels(), &[0, 1, 0, 2]);
        let attacks = filter_attacks(&ds).unwrap();
        assert_eq!(attacks.sample_ids(), &["b", "d"]);
        assert_eq!(attacks.labels(), &[1, 2]);
        let dist = class_distribution(&attacks);
        assert_eq!(dist["Benign"], 0);
        assert_eq!(dist["Bot"], 1);
    }

    #[test]
    fn filter_all_benign_errors() {
        let ds = align(&flow_table(&["a"], &["Benign"]), &host(&["a"]), &map()).unwrap();
        assert!(matches!(filter_attacks(&ds), Err(Error::NoAttackSamples)));
        assert_eq!(relabel_binary(&ds).labels(), &[0]);
    }

    #[test]
    fn aln1_round_trip() {
        let ds = align(
            &flow_table(&["a", "b"], &["Benign", "Bot"]),
            &host(&["a", "b"]),
            &map(),
        )
        .unwrap();
        assert_eq!(AlignedDataset::from_bytes(&ds.to_bytes()).unwrap(), ds);
    }

    #[test]
    fn split_single_class_of_hundred() {
        let ids: Vec<String> = (0..100).map(|i| format!("s{i}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let labels = vec!["Benign"; 100];
        let ds = align(&flow_table(&id_refs, &labels), &host(&id_refs), &map()).unwrap();
        let (train, test) = split_stratified(&ds, 0.33, 9).unwrap();
        assert_eq!((train.len(), test.len()), (67, 33));
        let (train2, test2) = split_stratified(&ds, 0.33, 9).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let ds = align(
            &flow_table(&["a", "b", "c"], &["Benign", "Benign", "Bot"]),
            &host(&["a", "b", "c"]),
            &map(),
        )
        .unwrap();
        assert!(matches!(split_stratified(&ds, 0.5, 0), Err(Error::ClassTooSmall(n)) if n == "Bot"));
    }

    #[test]
    fn split_keeps_one_on_each_side() {
        assert_eq!(stratified_test_count(2, 0.01), 1);
        assert_eq!(stratified_test_count(2, 0.99), 1);
        assert_eq!(stratified_test_count(10, 0.25), 3);
    }
}
