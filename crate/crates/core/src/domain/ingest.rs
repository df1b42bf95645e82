use std::io::Read;

use super::prior::DiscretePrior;
use super::universe::DiscreteUniverse;
use crate::error::{Error, Result};

/// Column to read from a CSV source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl ColumnSelector {
    /// Numbers select by position, anything else by header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        }
    }
}

/// Reads one column of a UTF-8 CSV source as trimmed strings.
pub fn read_column<R: Read>(reader: R, column: &ColumnSelector, has_header: bool) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(reader);
    let idx = match column {
        ColumnSelector::Index(i) => *i,
        ColumnSelector::Name(name) => {
            if !has_header {
                return Err(Error::Config(format!("column '{name}' selected by name but input has no header")));
            }
            let headers = rdr.headers().map_err(|e| Error::Ingestion(e.to_string()))?;
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("no column named '{name}'")))?
        }
    };
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Ingestion(e.to_string()))?;
        match rec.get(idx) {
            Some(v) => out.push(v.trim().to_string()),
            None => {
                return Err(Error::Ingestion(format!("row {} has no column {idx}", row + 1)));
            }
        }
    }
    Ok(out)
}

/// Normalized frequencies of `values` over `universe`; unseen records get 0.
pub fn empirical_prior<S: AsRef<str>>(values: &[S], universe: &DiscreteUniverse) -> Result<DiscretePrior> {
    if values.is_empty() {
        return Err(Error::Ingestion("empty input".into()));
    }
    let mut counts = vec![0u64; universe.len()];
    let mut bad = Vec::new();
    for (row, v) in values.iter().enumerate() {
        match universe.index_of(v.as_ref()) {
            Some(z) => counts[z] += 1,
            None => bad.push(row + 1),
        }
    }
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(20).map(|r| r.to_string()).collect();
        let more = if bad.len() > 20 { format!(" and {} more", bad.len() - 20) } else { String::new() };
        return Err(Error::Ingestion(format!(
            "{} observation(s) outside the universe at rows {}{more}",
            bad.len(),
            shown.join(", ")
        )));
    }
    DiscretePrior::from_counts(counts)
}
