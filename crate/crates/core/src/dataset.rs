//! The per-sentence metric dataset and its CSV form.
//!
//! Schema: `condition_id,car,noise,hp_fc,lp_fc,peak_fc,peak_q,sentence_idx,
//! metric,value`. A `peak_fc`/`peak_q` of -1 encodes a profile without a
//! resonance peak; a `sentence_idx` of -1 marks a condition-level metric
//! (pooled WER). UTF-8, LF line endings.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRecord {
    pub condition_id: String,
    pub car: String,
    pub noise: String,
    pub hp_fc: f64,
    pub lp_fc: f64,
    /// -1 when the profile has no peak.
    pub peak_fc: f64,
    /// -1 when the profile has no peak.
    pub peak_q: f64,
    /// -1 for condition-level metrics.
    pub sentence_idx: i64,
    pub metric: String,
    pub value: f64,
}

pub const DATASET_HEADER: &str =
    "condition_id,car,noise,hp_fc,lp_fc,peak_fc,peak_q,sentence_idx,metric,value";

/// Dataset columns usable as grouping keys or filters.
pub const GROUPABLE_COLUMNS: [&str; 7] = [
    "condition_id",
    "car",
    "noise",
    "hp_fc",
    "lp_fc",
    "peak_fc",
    "peak_q",
];

/// Format a float the way the dataset does: integers without a decimal
/// point, everything else with the shortest round-trip representation.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl SentenceRecord {
    /// String form of a column, matching the CSV encoding.
    pub fn field(&self, column: &str) -> Option<String> {
        Some(match column {
            "condition_id" => self.condition_id.clone(),
            "car" => self.car.clone(),
            "noise" => self.noise.clone(),
            "hp_fc" => fmt_num(self.hp_fc),
            "lp_fc" => fmt_num(self.lp_fc),
            "peak_fc" => fmt_num(self.peak_fc),
            "peak_q" => fmt_num(self.peak_q),
            "sentence_idx" => self.sentence_idx.to_string(),
            "metric" => self.metric.clone(),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<SentenceRecord>,
}

impl Dataset {
    pub fn new(records: Vec<SentenceRecord>) -> Self {
        Dataset { records }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(DATASET_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.condition_id,
                r.car,
                r.noise,
                fmt_num(r.hp_fc),
                fmt_num(r.lp_fc),
                fmt_num(r.peak_fc),
                fmt_num(r.peak_q),
                r.sentence_idx,
                r.metric,
                r.value
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
        {
            let headers = reader
                .headers()
                .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
            let expected: Vec<&str> = DATASET_HEADER.split(',').collect();
            let got: Vec<&str> = headers.iter().collect();
            if got != expected {
                return Err(Error::Ingest(format!(
                    "{}: unexpected header {:?}",
                    path.display(),
                    got.join(",")
                )));
            }
        }
        let mut records = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
            let line = i + 2;
            let parse_f64 = |idx: usize, name: &str| -> Result<f64> {
                row[idx].parse::<f64>().map_err(|_| {
                    Error::Ingest(format!(
                        "{} line {line}: bad {name} value {:?}",
                        path.display(),
                        &row[idx]
                    ))
                })
            };
            records.push(SentenceRecord {
                condition_id: row[0].to_string(),
                car: row[1].to_string(),
                noise: row[2].to_string(),
                hp_fc: parse_f64(3, "hp_fc")?,
                lp_fc: parse_f64(4, "lp_fc")?,
                peak_fc: parse_f64(5, "peak_fc")?,
                peak_q: parse_f64(6, "peak_q")?,
                sentence_idx: row[7].parse::<i64>().map_err(|_| {
                    Error::Ingest(format!(
                        "{} line {line}: bad sentence_idx {:?}",
                        path.display(),
                        &row[7]
                    ))
                })?,
                metric: row[8].to_string(),
                value: row[9].parse::<f64>().map_err(|_| {
                    Error::Ingest(format!(
                        "{} line {line}: bad value {:?}",
                        path.display(),
                        &row[9]
                    ))
                })?,
            });
        }
        Ok(Dataset { records })
    }

    /// Distinct metric names, sorted.
    pub fn metrics(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| r.metric.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Distinct condition ids in first-appearance order, with a
    /// representative record for each (condition metadata columns).
    pub fn conditions(&self) -> Vec<&SentenceRecord> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.records {
            if seen.insert(r.condition_id.as_str()) {
                out.push(r);
            }
        }
        out
    }

    /// Highest sentence index present (the sentence count of the sweep).
    pub fn max_sentence_idx(&self) -> i64 {
        self.records.iter().map(|r| r.sentence_idx).max().unwrap_or(-1)
    }

    /// Rows of one metric passing every `column=value` filter.
    pub fn select<'a>(
        &'a self,
        metric: &str,
        filters: &[(String, String)],
    ) -> Result<Vec<&'a SentenceRecord>> {
        for (col, _) in filters {
            if !GROUPABLE_COLUMNS.contains(&col.as_str()) && col != "sentence_idx" {
                return Err(Error::Invalid(format!("unknown filter column {col:?}")));
            }
        }
        Ok(self
            .records
            .iter()
            .filter(|r| r.metric == metric)
            .filter(|r| {
                filters.iter().all(|(col, want)| {
                    r.field(col)
                        .map(|have| field_value_eq(&have, want))
                        .unwrap_or(false)
                })
            })
            .collect())
    }

    /// Finite values of `metric` bucketed by the distinct values of
    /// `group_col`, in numeric-aware label order. Non-finite sentinel
    /// values (infinite SNR from noise-free renders) are excluded.
    pub fn group_values(
        &self,
        metric: &str,
        group_col: &str,
        filters: &[(String, String)],
    ) -> Result<Vec<(String, Vec<f64>)>> {
        if !GROUPABLE_COLUMNS.contains(&group_col) {
            return Err(Error::Invalid(format!(
                "unknown grouping column {group_col:?} (expected one of {})",
                GROUPABLE_COLUMNS.join(", ")
            )));
        }
        let rows = self.select(metric, filters)?;
        let mut labels: Vec<String> = Vec::new();
        let mut groups: Vec<Vec<f64>> = Vec::new();
        for r in rows {
            let label = r.field(group_col).expect("validated column");
            let idx = match labels.iter().position(|l| l == &label) {
                Some(i) => i,
                None => {
                    labels.push(label);
                    groups.push(Vec::new());
                    labels.len() - 1
                }
            };
            if r.value.is_finite() {
                groups[idx].push(r.value);
            }
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| num_aware_cmp(&labels[a], &labels[b]));
        Ok(order
            .into_iter()
            .map(|i| (labels[i].clone(), groups[i].clone()))
            .collect())
    }
}

/// Filter comparison: numeric when both sides parse as numbers (so
/// "350" matches "350.0"), string equality otherwise.
pub fn field_value_eq(have: &str, want: &str) -> bool {
    match (have.parse::<f64>(), want.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => have == want,
    }
}

/// Order labels numerically when possible, lexicographically otherwise.
pub fn num_aware_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
        _ => a.cmp(b),
    }
}
