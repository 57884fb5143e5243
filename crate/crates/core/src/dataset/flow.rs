use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// What to do with infinite or NaN flow cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonFinitePolicy {
    /// +inf becomes the column's finite max, -inf the finite min, NaN the
    /// finite median. A column with no finite values is zero-filled.
    #[default]
    Clamp,
    /// Any non-finite cell is an error.
    Reject,
}

#[derive(Debug, Clone)]
pub struct FlowCsvOptions {
    pub label_column: String,
    pub id_column: Option<String>,
    pub non_finite: NonFinitePolicy,
}

impl FlowCsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        FlowCsvOptions {
            label_column: label_column.into(),
            id_column: None,
            non_finite: NonFinitePolicy::Clamp,
        }
    }

    pub fn with_id_column(mut self, id_column: impl Into<String>) -> Self {
        self.id_column = Some(id_column.into());
        self
    }
}

/// Per-sample network flow features.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    sample_ids: Vec<String>,
    feature_names: Vec<String>,
    values: Matrix,
    labels: Vec<String>,
}

impl FlowTable {
    pub fn new(
        sample_ids: Vec<String>,
        feature_names: Vec<String>,
        values: Matrix,
        labels: Vec<String>,
    ) -> Result<Self> {
        let n = sample_ids.len();
        if values.rows() != n || labels.len() != n {
            return Err(Error::DimMismatch(format!(
                "{} ids, {} value rows, {} labels",
                n,
                values.rows(),
                labels.len()
            )));
        }
        if values.cols() != feature_names.len() {
            return Err(Error::DimMismatch(format!(
                "{} columns but {} feature names",
                values.cols(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            let cols = values.cols().max(1);
            return Err(Error::NonFiniteFeature {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(FlowTable {
            sample_ids,
            feature_names,
            values,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Drops every row whose class has fewer than `min_count` samples.
    pub fn drop_rare_classes(&self, min_count: usize) -> FlowTable {
        let mut counts = std::collections::HashMap::new();
        for l in &self.labels {
            *counts.entry(l.as_str()).or_insert(0usize) += 1;
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| counts[self.labels[i].as_str()] >= min_count)
            .collect();
        FlowTable {
            sample_ids: keep.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            values: self.values.select_rows(&keep),
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Writes the table as CSV with an `id` column first and `label` last.
    pub fn write_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["id".to_owned()];
        header.extend(self.feature_names.iter().cloned());
        header.push(label_column.to_owned());
        w.write_record(&header)?;
        for (i, row) in self.values.iter_rows().enumerate() {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(self.sample_ids[i].clone());
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            rec.push(self.labels[i].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Loads a flow CSV with positional ids and the default sanitization.
pub fn load_flow_csv(path: impl AsRef<Path>, label_column: &str) -> Result<FlowTable> {
    load_flow_csv_with(path, &FlowCsvOptions::new(label_column))
}

pub fn load_flow_csv_with(path: impl AsRef<Path>, opts: &FlowCsvOptions) -> Result<FlowTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_flow_csv(file, opts)
}

pub fn read_flow_csv<R: Read>(reader: R, opts: &FlowCsvOptions) -> Result<FlowTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let label_idx = header
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| Error::MissingLabelColumn(opts.label_column.clone()))?;
    let id_idx = match &opts.id_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingIdColumn(name.clone()))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_idx && Some(c) != id_idx)
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| header[c].clone()).collect();

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        labels.push(rec.get(label_idx).unwrap_or("").trim().to_owned());
        ids.push(match id_idx {
            Some(c) => rec.get(c).unwrap_or("").trim().to_owned(),
            None => format!("row-{row}"),
        });
        for &c in &feature_cols {
            let cell = rec.get(c).unwrap_or("");
            data.push(parse_cell(cell).ok_or_else(|| Error::NonNumericCell {
                row,
                column: header[c].clone(),
                value: cell.to_owned(),
            })?);
        }
    }
    if ids.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut values = Matrix::from_vec(ids.len(), feature_cols.len(), data)?;
    sanitize(&mut values, opts.non_finite)?;
    FlowTable::new(ids, feature_names, values, labels)
}

/// Parses a numeric cell. Infinity/NaN spellings and empty cells come back
/// as non-finite values for the sanitizer to handle.
fn parse_cell(cell: &str) -> Option<f64> {
    let s = cell.trim();
    if s.is_empty() {
        return Some(f64::NAN);
    }
    // f64::from_str already accepts inf/infinity/nan in any case
    s.parse::<f64>().ok()
}

/// Replaces non-finite cells column by column according to `policy`.
pub fn sanitize(values: &mut Matrix, policy: NonFinitePolicy) -> Result<()> {
    let (rows, cols) = values.shape();
    for c in 0..cols {
        let column = values.column(c);
        if column.iter().all(|v| v.is_finite()) {
            continue;
        }
        if policy == NonFinitePolicy::Reject {
            let r = column.iter().position(|v| !v.is_finite()).unwrap();
            return Err(Error::NonFiniteFeature { row: r, col: c });
        }
        let mut finite: Vec<f64> = column.iter().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        let (lo, hi, median) = if finite.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            let n = finite.len();
            let median = if n % 2 == 1 {
                finite[n / 2]
            } else {
                0.5 * (finite[n / 2 - 1] + finite[n / 2])
            };
            (finite[0], finite[n - 1], median)
        };
        for r in 0..rows {
            let v = values.get(r, c);
            if v.is_nan() {
                values.set(r, c, median);
            } else if v == f64::INFINITY {
                values.set(r, c, hi);
            } else if v == f64::NEG_INFINITY {
                values.set(r, c, lo);
            }
        }
    }
    Ok(())
}
