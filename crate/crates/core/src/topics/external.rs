//! Import of topic-document matrices produced by external topic models.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const EXTERNAL_PREFIX: &str = "ext:";

/// Named feature columns over a list of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalTopicMatrix {
    pub episode_ids: Vec<String>,
    /// `(prefixed name, values)`; values align with `episode_ids`.
    pub columns: Vec<(String, Vec<f64>)>,
}

pub fn import_external_topic_matrix<R: Read>(reader: R) -> Result<ExternalTopicMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("episode_id") {
        return Err(Error::Invalid("topic matrix CSV must start with an episode_id column".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut columns: Vec<(String, Vec<f64>)> =
        names.iter().map(|n| (format!("{EXTERNAL_PREFIX}{n}"), Vec::new())).collect();
    let mut episode_ids = Vec::new();
    let mut seen = HashSet::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or("").trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Invalid(format!("duplicate episode_id {id:?} in topic matrix")));
        }
        for (col, name) in names.iter().enumerate() {
            let cell = rec.get(col + 1).unwrap_or("").trim();
            let x: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: row + 1,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Invalid(format!(
                    "value {x} at row {}, column `{name}` is outside [0, 1]",
                    row + 1
                )));
            }
            columns[col].1.push(x);
        }
        episode_ids.push(id);
    }
    Ok(ExternalTopicMatrix { episode_ids, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_through() {
        let csv = "episode_id,t0,t1,t2\ne1,0.2,0.3,0.5\ne2,1,0,0\n";
        let m = import_external_topic_matrix(csv.as_bytes()).unwrap();
        assert_eq!(m.columns.len(), 3);
        assert!(m.columns.iter().all(|(n, v)| n.starts_with("ext:") && v.len() == 2));
        assert_eq!(m.columns[1].1, vec![0.3, 0.0]);
    }

    #[test]
    fn duplicate_id() {
        let csv = "episode_id,t0\ne1,0.2\ne1,0.3\n";
        assert!(import_external_topic_matrix(csv.as_bytes()).is_err());
    }

    #[test]
    fn out_of_range() {
        let csv = "episode_id,t0\ne1,1.2\n";
        assert!(matches!(import_external_topic_matrix(csv.as_bytes()), Err(Error::Invalid(_))));
    }

    #[test]
    fn non_numeric() {
        let csv = "episode_id,t0\ne1,high\n";
        assert!(matches!(import_external_topic_matrix(csv.as_bytes()), Err(Error::NonNumeric { .. })));
    }
}
