//! Synthetic flow + host datasets with controllable class geometry.
//!
//! Flow vectors are Gaussian clusters; several classes may share a cluster,
//! in which case only their host matrices tell them apart. Classes marked
//! with a host signature add a fixed ±`host_signal` pattern to the leading
//! `signal_*_rows` rows of their event and message matrices; every other
//! host cell is zero-mean noise.
//!
//! A class may also route a fraction of its samples to the shared
//! camouflage component: one extra flow cluster with no host pattern, so
//! those samples are indistinguishable across every class that uses it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{FlowTable, HostDims, HostTensorSet, LabelMap};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    pub count: usize,
    /// Index of the flow cluster the class draws from.
    pub flow_cluster: usize,
    /// Whether host matrices carry a class-specific pattern.
    #[serde(default)]
    pub host_signature: bool,
    /// Multiplier on the flow noise for this class.
    #[serde(default = "one")]
    pub flow_spread: f64,
    /// Fraction of the class drawn from the camouflage component.
    #[serde(default)]
    pub camouflage: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub benign: String,
    pub classes: Vec<ClassSpec>,
    pub flow_dim: usize,
    pub event_dims: (usize, usize),
    pub message_dims: (usize, usize),
    pub signal_event_rows: usize,
    pub signal_message_rows: usize,
    /// Scale of the random cluster centers.
    pub flow_separation: f64,
    /// Mean offset of signature cells.
    pub host_signal: f64,
    /// Standard deviation of flow and host noise.
    pub noise: f64,
}

const BENIGN_CAMOUFLAGE: f64 = 0.08;
const DDOS_CAMOUFLAGE: f64 = 0.103;
const RARE_CAMOUFLAGE: f64 = 0.65;

impl SynthSpec {
    /// Benign-heavy benchmark: half the samples benign, five attack classes.
    /// `Exfil` and `Implant` share one flow cluster and differ only in their
    /// host signatures. `SlowDoS` is the rare class and hides most of its
    /// samples in the camouflage component, together with a few percent of
    /// benign and DDoS traffic. There benign is the largest single class
    /// while attacks are the majority overall.
    pub fn benchmark(total: usize, seed: u64) -> Self {
        let benign = total / 2;
        let attacks = total - benign;
        // attack shares: 35%, 25%, 15%, 15%, remainder
        let sizes = [
            attacks * 35 / 100,
            attacks * 25 / 100,
            attacks * 15 / 100,
            attacks * 15 / 100,
        ];
        let rare = attacks - sizes.iter().sum::<usize>();
        let class = |name: &str, count, flow_cluster, host_signature, camouflage| ClassSpec {
            name: name.into(),
            count,
            flow_cluster,
            host_signature,
            flow_spread: 1.0,
            camouflage,
        };
        SynthSpec {
            seed,
            benign: "Benign".into(),
            classes: vec![
                class("Benign", benign, 0, false, BENIGN_CAMOUFLAGE),
                class("DDoS", sizes[0], 1, false, DDOS_CAMOUFLAGE),
                class("PortScan", sizes[1], 2, false, 0.0),
                class("Exfil", sizes[2], 3, true, 0.0),
                class("Implant", sizes[3], 3, true, 0.0),
                class("SlowDoS", rare, 4, true, RARE_CAMOUFLAGE),
            ],
            flow_dim: 10,
            event_dims: (4, 4),
            message_dims: (12, 16),
            signal_event_rows: 4,
            signal_message_rows: 12,
            flow_separation: 2.5,
            host_signal: 0.6,
            noise: 1.0,
        }
    }

    pub fn host_dims(&self) -> HostDims {
        HostDims::new(
            self.event_dims.0,
            self.event_dims.1,
            self.message_dims.0,
            self.message_dims.1,
        )
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInvalid(m));
        if self.classes.len() < 2 {
            return bad("need at least two classes".into());
        }
        let benign = self.classes.iter().filter(|c| c.name == self.benign).count();
        if benign != 1 {
            return bad(format!("benign class `{}` must appear exactly once", self.benign));
        }
        let mut names: Vec<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate class names".into());
        }
        if self.classes.iter().any(|c| c.count == 0) {
            return bad("every class needs at least one sample".into());
        }
        if self.flow_dim == 0 || self.host_dims().event_len() == 0 || self.host_dims().message_len() == 0 {
            return bad("all dimensions must be positive".into());
        }
        if self.signal_event_rows > self.event_dims.0 || self.signal_message_rows > self.message_dims.0 {
            return bad("signal rows exceed matrix rows".into());
        }
        if self.classes.iter().any(|c| !(0.0..=1.0).contains(&c.camouflage)) {
            return bad("camouflage must lie in [0, 1]".into());
        }
        if !(self.noise >= 0.0) || !self.flow_separation.is_finite() || !self.host_signal.is_finite() {
            return bad("noise, separation and signal must be finite with noise >= 0".into());
        }
        Ok(())
    }
}

/// Generated tables, ready to write or to align directly.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub flow: FlowTable,
    pub host: HostTensorSet,
    pub label_map: LabelMap,
}

/// Paths written by [`SyntheticData::write`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub flow_csv: PathBuf,
    pub host_tensors: PathBuf,
    pub label_map: PathBuf,
}

pub const LABEL_COLUMN: &str = "label";
pub const ID_COLUMN: &str = "id";

impl SyntheticData {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SyntheticFiles {
            flow_csv: dir.join("flow.csv"),
            host_tensors: dir.join("host.hft"),
            label_map: dir.join("labels.toml"),
        };
        self.flow.write_csv(&files.flow_csv, LABEL_COLUMN)?;
        self.host.write(&files.host_tensors)?;
        self.label_map.save(&files.label_map)?;
        Ok(files)
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let dims = spec.host_dims();
    let f = spec.flow_dim;
    let mut rng = SplitMix64::new(spec.seed);

    let clusters = spec.classes.iter().map(|c| c.flow_cluster).max().unwrap_or(0) + 1;
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..f).map(|_| spec.flow_separation * rng.next_gaussian()).collect())
        .collect();
    let camouflage_center: Vec<f64> = (0..f).map(|_| spec.flow_separation * rng.next_gaussian()).collect();
    let signatures: Vec<(Vec<f64>, Vec<f64>)> = spec
        .classes
        .iter()
        .map(|c| {
            let mut pattern = |len: usize, signal_len: usize| -> Vec<f64> {
                (0..len)
                    .map(|i| {
                        let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                        if c.host_signature && i < signal_len {
                            sign * spec.host_signal
                        } else {
                            0.0
                        }
                    })
                    .collect()
            };
            let event = pattern(dims.event_len(), spec.signal_event_rows * dims.n);
            let message = pattern(dims.message_len(), spec.signal_message_rows * dims.q);
            (event, message)
        })
        .collect();

    // interleave classes so sample order does not encode the label
    let mut order: Vec<usize> = spec
        .classes
        .iter()
        .enumerate()
        .flat_map(|(c, cs)| std::iter::repeat_n(c, cs.count))
        .collect();
    rng.shuffle(&mut order);

    let n = order.len();
    let mut flow = Matrix::zeros(n, f);
    let mut event = Vec::with_capacity(n * dims.event_len());
    let mut message = Vec::with_capacity(n * dims.message_len());
    let mut ids = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut camouflaged: Vec<usize> = spec
        .classes
        .iter()
        .map(|c| (c.camouflage * c.count as f64).round() as usize)
        .collect();
    let silent = (vec![0.0; dims.event_len()], vec![0.0; dims.message_len()]);
    for (i, &c) in order.iter().enumerate() {
        let cs = &spec.classes[c];
        // order is shuffled, so taking the first ones of each class is a random subset
        let hidden = camouflaged[c] > 0;
        let (center, sd, (ev_sig, msg_sig)) = if hidden {
            camouflaged[c] -= 1;
            (&camouflage_center, spec.noise, &silent)
        } else {
            (&centers[cs.flow_cluster], spec.noise * cs.flow_spread, &signatures[c])
        };
        for (j, slot) in flow.row_mut(i).iter_mut().enumerate() {
            *slot = center[j] + sd * rng.next_gaussian();
        }
        event.extend(ev_sig.iter().map(|m| (m + spec.noise * rng.next_gaussian()) as f32));
        message.extend(msg_sig.iter().map(|m| (m + spec.noise * rng.next_gaussian()) as f32));
        ids.push(format!("s{i:06}"));
        labels.push(cs.name.clone());
    }

    let feature_names = (0..f).map(|j| format!("flow_{j}")).collect();
    let flow = FlowTable::new(ids.clone(), feature_names, flow, labels)?;
    let host = HostTensorSet::new(ids, dims, event, message)?;
    let label_map = LabelMap::fit(spec.classes.iter().map(|c| c.name.as_str()), Some(&spec.benign))?;
    Ok(SyntheticData {
        flow,
        host,
        label_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class() -> SynthSpec {
        SynthSpec {
            seed: 1,
            benign: "Benign".into(),
            classes: vec![
                ClassSpec {
                    name: "Benign".into(),
                    count: 100,
                    flow_cluster: 0,
                    host_signature: false,
                    flow_spread: 1.0,
                    camouflage: 0.0,
                },
                ClassSpec {
                    name: "Bot".into(),
                    count: 100,
                    flow_cluster: 1,
                    host_signature: true,
                    flow_spread: 1.0,
                    camouflage: 0.0,
                },
            ],
            flow_dim: 3,
            event_dims: (2, 2),
            message_dims: (3, 4),
            signal_event_rows: 1,
            signal_message_rows: 3,
            flow_separation: 3.0,
            host_signal: 1.0,
            noise: 1.0,
        }
    }

    #[test]
    fn shapes_and_counts() {
        let data = generate_synthetic(&two_class()).unwrap();
        assert_eq!(data.flow.len(), 200);
        assert_eq!(data.host.dims(), HostDims::new(2, 2, 3, 4));
        assert_eq!(data.flow.labels().iter().filter(|l| *l == "Bot").count(), 100);
        assert_eq!(data.label_map.benign_name(), "Benign");
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic(&two_class()).unwrap();
        let b = generate_synthetic(&two_class()).unwrap();
        assert_eq!(a.flow, b.flow);
        assert_eq!(a.host, b.host);
    }

    #[test]
    fn invalid_specs() {
        let mut s = two_class();
        s.benign = "Nope".into();
        assert!(matches!(generate_synthetic(&s), Err(Error::SpecInvalid(_))));
        let mut s = two_class();
        s.classes.truncate(1);
        assert!(generate_synthetic(&s).is_err());
        let mut s = two_class();
        s.signal_event_rows = 5;
        assert!(generate_synthetic(&s).is_err());
    }

    #[test]
    fn benchmark_is_half_benign() {
        let s = SynthSpec::benchmark(20_000, 0);
        assert_eq!(s.total(), 20_000);
        assert_eq!(s.classes[0].count, 10_000);
        assert_eq!(s.classes.len(), 6);
        s.validate().unwrap();
    }
}
