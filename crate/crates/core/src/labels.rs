//! Chunk labels: the classifier output classes shared by the phonematizer
//! and the postlexicalizer.
//!
//! A label is the `+`-joined symbols of a chunk, or `_` for an empty one.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::alignment::MAX_CHUNK;

pub const DELETE: &str = "_";

/// Label text for a chunk of symbols.
pub fn join<S: AsRef<str>>(symbols: &[S]) -> String {
    if symbols.is_empty() {
        return DELETE.to_string();
    }
    symbols.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("+")
}

/// Symbols of a label.
pub fn split(label: &str) -> Vec<&str> {
    if label == DELETE {
        Vec::new()
    } else {
        label.split('+').collect()
    }
}

/// An ordered, indexable set of labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    /// Sorted, deduplicated labels.
    pub fn new(labels: impl IntoIterator<Item = String>) -> Self {
        let sorted: BTreeSet<String> = labels.into_iter().collect();
        Self::from(sorted.into_iter().collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn encode(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::Model(format!("label `{label}` is not in the label set")))
    }

    pub fn decode(&self, i: usize) -> Result<&str> {
        self.labels
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| Error::IndexOutOfRange(format!("label {i} of {}", self.labels.len())))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Every label holds at most [`MAX_CHUNK`] symbols.
    pub fn validate(&self) -> Result<()> {
        for l in &self.labels {
            let n = split(l).len();
            if n > MAX_CHUNK || split(l).iter().any(|s| s.is_empty()) {
                return Err(Error::Model(format!("malformed label `{l}`")));
            }
        }
        Ok(())
    }
}

impl From<Vec<String>> for LabelSet {
    fn from(labels: Vec<String>) -> Self {
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        LabelSet { labels, index }
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(set: LabelSet) -> Self {
        set.labels
    }
}
