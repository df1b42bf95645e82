use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Named categorical fields attached to every record of a universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSchema {
    fields: Vec<String>,
    values: Vec<Vec<String>>,
}

impl RecordSchema {
    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    /// Value of field `field` for record `z`.
    pub fn value(&self, z: usize, field: usize) -> &str {
        &self.values[z][field]
    }
}

/// An ordered, finite set of distinct records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteUniverse {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    embedding: Option<Vec<f64>>,
    schema: Option<RecordSchema>,
}

impl DiscreteUniverse {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return config(format!("a universe needs at least 2 records, got {}", labels.len()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return config(format!("duplicate record identifier '{l}'"));
            }
        }
        Ok(Self { labels, index, embedding: None, schema: None })
    }

    /// Records `0..m` labelled by their index, embedded at their index value.
    pub fn indexed(m: usize) -> Result<Self> {
        let labels = (0..m).map(|i| i.to_string()).collect();
        Self::new(labels)?.with_embedding((0..m).map(|i| i as f64).collect())
    }

    /// Integer records `lo..=hi` embedded at their own value.
    pub fn integer_range(lo: i64, hi: i64) -> Result<Self> {
        if hi <= lo {
            return config(format!("empty integer range {lo}..={hi}"));
        }
        let labels = (lo..=hi).map(|v| v.to_string()).collect();
        Self::new(labels)?.with_embedding((lo..=hi).map(|v| v as f64).collect())
    }

    /// Universe whose records are rows of categorical fields; labels join the
    /// field values with `|`.
    pub fn from_records(fields: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if fields.is_empty() {
            return config("record schema needs at least one field");
        }
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != fields.len()) {
            return config(format!("record {i} has the wrong number of fields"));
        }
        let labels = rows.iter().map(|r| r.join("|")).collect();
        let mut u = Self::new(labels)?;
        u.schema = Some(RecordSchema { fields, values: rows });
        Ok(u)
    }

    pub fn with_embedding(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.labels.len() {
            return config(format!(
                "embedding has {} values for {} records",
                values.len(),
                self.labels.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return config("embedding values must be finite");
        }
        self.embedding = Some(values);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        if self.index.is_empty() {
            return self.labels.iter().position(|l| l == label);
        }
        self.index.get(label).copied()
    }

    pub fn embedding(&self) -> Option<&[f64]> {
        self.embedding.as_deref()
    }

    pub fn schema(&self) -> Option<&RecordSchema> {
        self.schema.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_tiny_universes() {
        assert!(DiscreteUniverse::new(vec!["a".into()]).is_err());
        assert!(DiscreteUniverse::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn integer_range_is_embedded() {
        let u = DiscreteUniverse::integer_range(0, 100).unwrap();
        assert_eq!(u.len(), 101);
        assert_eq!(u.embedding().unwrap()[100], 100.0);
        assert_eq!(u.index_of("42"), Some(42));
    }

    #[test]
    fn embedding_length_must_match() {
        let u = DiscreteUniverse::new(vec!["a".into(), "b".into()]).unwrap();
        assert!(u.with_embedding(vec![1.0]).is_err());
    }

    #[test]
    fn records_get_joined_labels() {
        let u = DiscreteUniverse::from_records(
            vec!["sex".into(), "age".into()],
            vec![vec!["f".into(), "30".into()], vec!["m".into(), "30".into()]],
        )
        .unwrap();
        assert_eq!(u.labels()[1], "m|30");
        assert_eq!(u.schema().unwrap().value(0, 0), "f");
    }
}
