use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default benign class names, matched case-insensitively.
pub const DEFAULT_BENIGN_NAMES: [&str; 2] = ["benign", "normal"];

/// Bijection between class names and contiguous ids starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
    benign_id: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelMapFile {
    benign: String,
    classes: Vec<String>,
}

impl LabelMap {
    /// Builds a map from names already in id order.
    pub fn from_names(names: Vec<String>, benign_id: usize) -> Result<Self> {
        if benign_id >= names.len() {
            return Err(Error::InvalidLabelMap(format!(
                "benign id {benign_id} out of range for {} classes",
                names.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::InvalidLabelMap(format!("duplicate class `{n}`")));
            }
        }
        Ok(LabelMap {
            names,
            index,
            benign_id,
        })
    }

    /// Fits ids by lexicographic sort of the distinct names. `benign` names
    /// the benign class explicitly; otherwise exactly one class must match
    /// one of [`DEFAULT_BENIGN_NAMES`] ignoring case.
    pub fn fit<'a, I>(names: I, benign: Option<&str>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut distinct: Vec<String> = names.into_iter().map(str::to_owned).collect();
        distinct.sort();
        distinct.dedup();
        let benign_id = find_benign(&distinct, benign)?;
        Self::from_names(distinct, benign_id)
    }

    /// Two-class map used after benign/attack relabeling: benign is 0.
    pub fn binary(benign_name: &str) -> Self {
        let attack = if benign_name == "Attack" { "attack" } else { "Attack" };
        Self::from_names(vec![benign_name.to_owned(), attack.to_owned()], 0)
            .expect("two distinct names")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn benign_id(&self) -> usize {
        self.benign_id
    }

    pub fn benign_name(&self) -> &str {
        &self.names[self.benign_id]
    }

    pub fn to_toml(&self) -> String {
        let file = LabelMapFile {
            benign: self.benign_name().to_owned(),
            classes: self.names.clone(),
        };
        toml::to_string(&file).expect("label map serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: LabelMapFile =
            toml::from_str(text).map_err(|e| Error::InvalidLabelMap(e.to_string()))?;
        let benign_id = file
            .classes
            .iter()
            .position(|c| *c == file.benign)
            .ok_or_else(|| {
                Error::InvalidLabelMap(format!("benign class `{}` not listed", file.benign))
            })?;
        Self::from_names(file.classes, benign_id)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::binio::write_file(path.as_ref(), self.to_toml().as_bytes())
    }
}

fn find_benign(names: &[String], benign: Option<&str>) -> Result<usize> {
    let matches: Vec<usize> = match benign {
        Some(b) => names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.eq_ignore_ascii_case(b))
            .map(|(i, _)| i)
            .collect(),
        None => names
            .iter()
            .enumerate()
            .filter(|(_, n)| DEFAULT_BENIGN_NAMES.iter().any(|d| n.eq_ignore_ascii_case(d)))
            .map(|(i, _)| i)
            .collect(),
    };
    match matches.as_slice() {
        [id] => Ok(*id),
        [] => Err(Error::InvalidLabelMap("no benign class found".into())),
        _ => Err(Error::InvalidLabelMap("benign class is ambiguous".into())),
    }
}
