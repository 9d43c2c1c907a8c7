//! Loading score matrices and published count rows.
//!
//! Score matrix CSV: `item_id[,cluster],<model_1>,...,<model_k>`, one row per
//! item, every score a decimal in `[0, 1]`.
//!
//! Counts CSV: `pair,N,p_a,p_b,b,c[,rho]`, one row per model pair, for
//! reproducing analyses where only the 2×2 summaries are available.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ScoreMatrix;
use crate::paired::PairedSummary;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_f64(field: &str, line: usize, column: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        line,
        column: column.to_string(),
        value: field.to_string(),
    })
}

pub fn load_score_matrix(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    read_score_matrix(open(path.as_ref())?)
}

pub fn read_score_matrix<R: Read>(input: R) -> Result<ScoreMatrix> {
    let mut rdr = reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("item_id") {
        return Err(Error::Header("first column must be `item_id`".into()));
    }
    let has_cluster = header.get(1).map(String::as_str) == Some("cluster");
    let first_model = if has_cluster { 2 } else { 1 };
    let model_names: Vec<String> = header[first_model..].to_vec();
    if model_names.is_empty() {
        return Err(Error::Header("no model columns".into()));
    }
    let mut seen = HashSet::new();
    for name in &model_names {
        if name.is_empty() {
            return Err(Error::Header("empty model name".into()));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateModel(name.clone()));
        }
    }

    let mut items = Vec::new();
    let mut clusters = Vec::new();
    let mut scores = vec![Vec::new(); model_names.len()];
    let mut ids = HashSet::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = row + 2;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let id = record[0].to_string();
        if !ids.insert(id.clone()) {
            return Err(Error::DuplicateItem { line, id });
        }
        items.push(id);
        if has_cluster {
            clusters.push(record[1].to_string());
        }
        for (m, field) in record.iter().skip(first_model).enumerate() {
            let value = parse_f64(field, line, &model_names[m])?;
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange {
                    line,
                    column: model_names[m].clone(),
                    value: field.to_string(),
                });
            }
            scores[m].push(value);
        }
    }
    if items.is_empty() {
        return Err(Error::TooFewItems { need: 1, got: 0 });
    }
    ScoreMatrix::new(items, has_cluster.then_some(clusters), model_names, scores)
}

/// A published pair row with its reconstructed 2×2 summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRow {
    pub pair: String,
    pub summary: PairedSummary,
    /// The correlation as printed, when the file carries it.
    pub rho_printed: Option<f64>,
}

impl CountsRow {
    /// Item-level score vectors with the same 2×2 table (rows grouped by
    /// cell, so only order-free statistics are meaningful on them).
    pub fn expand(&self) -> (Vec<f64>, Vec<f64>) {
        let t = self.summary.counts.expect("counts rows are binary");
        let mut a = Vec::with_capacity(self.summary.n);
        let mut b = Vec::with_capacity(self.summary.n);
        for (count, x, y) in [
            (t.n11, 1.0, 1.0),
            (t.n10, 1.0, 0.0),
            (t.n01, 0.0, 1.0),
            (t.n00, 0.0, 0.0),
        ] {
            a.extend(std::iter::repeat_n(x, count as usize));
            b.extend(std::iter::repeat_n(y, count as usize));
        }
        (a, b)
    }
}

pub fn load_counts(path: impl AsRef<Path>) -> Result<Vec<CountsRow>> {
    read_counts(open(path.as_ref())?)
}

/// Printed marginals carry four decimals; allow that rounding plus one item.
const MARGINAL_SLACK: f64 = 1e-3;

pub fn read_counts<R: Read>(input: R) -> Result<Vec<CountsRow>> {
    let mut rdr = reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected = ["pair", "N", "p_a", "p_b", "b", "c"];
    if header.len() < 6 || header[..6] != expected || (header.len() == 7 && header[6] != "rho") || header.len() > 7 {
        return Err(Error::Header(format!(
            "expected `pair,N,p_a,p_b,b,c[,rho]`, found `{}`",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    let mut names = HashSet::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = row + 2;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let pair = record[0].to_string();
        if !names.insert(pair.clone()) {
            return Err(Error::DuplicateItem { line, id: pair });
        }
        let int = |i: usize| -> Result<u64> {
            record[i].parse::<u64>().map_err(|_| Error::Parse {
                line,
                column: header[i].clone(),
                value: record[i].to_string(),
            })
        };
        let (n, b, c) = (int(1)?, int(4)?, int(5)?);
        let p_a = parse_f64(&record[2], line, "p_a")?;
        let p_b = parse_f64(&record[3], line, "p_b")?;
        for (col, v) in [("p_a", p_a), ("p_b", p_b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    line,
                    column: col.into(),
                    value: v.to_string(),
                });
            }
        }
        let rho_printed = if header.len() == 7 {
            Some(parse_f64(&record[6], line, "rho")?)
        } else {
            None
        };
        let summary = PairedSummary::from_published(n, p_a, b, c).map_err(|_| Error::Parse {
            line,
            column: "b".into(),
            value: format!("counts b={b}, c={c} do not fit N={n} at p_a={p_a}"),
        })?;
        if (summary.p_b - p_b).abs() > MARGINAL_SLACK {
            return Err(Error::Parse {
                line,
                column: "p_b".into(),
                value: format!("{p_b} disagrees with the reconstructed {:.4}", summary.p_b),
            });
        }
        rows.push(CountsRow {
            pair,
            summary,
            rho_printed,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binary_matrix() {
        let csv = "item_id,m1,m2\na,1,0\nb,0,0\nc,1,1\nd,1,1\n";
        let m = read_score_matrix(csv.as_bytes()).unwrap();
        assert_eq!(m.n_items(), 4);
        assert!(m.is_binary());
        assert!(m.clusters().is_none());
    }

    #[test]
    fn cluster_column_detected() {
        let csv = "item_id,cluster,m1,m2\na,x,1,0.5\nb,y,0,0.25\n";
        let m = read_score_matrix(csv.as_bytes()).unwrap();
        assert_eq!(m.clusters().unwrap(), ["x", "y"]);
        assert!(!m.is_binary());
    }

    #[test]
    fn diagnostics_name_location() {
        let err = read_score_matrix("item_id,m1\na,1\nb,1.5\n".as_bytes()).unwrap_err();
        assert!(matches!(&err, Error::OutOfRange { line: 3, column, .. } if column == "m1"), "{err}");
        let err = read_score_matrix("item_id,m1,m2\na,1,0\nb,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { line: 3, expected: 3, found: 2 }));
        let err = read_score_matrix("item_id,m1\na,1\na,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateItem { line: 3, .. }));
        let err = read_score_matrix("item_id,m1,m1\na,1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateModel(_)));
        let err = read_score_matrix("item_id,m1\na,yes\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn counts_row_reconstructs_table() {
        let csv = "pair,N,p_a,p_b,b,c,rho\nHS,10042,0.8247,0.8202,295,249,0.81\n";
        let rows = read_counts(csv.as_bytes()).unwrap();
        let s = &rows[0].summary;
        assert_eq!(s.n, 10_042);
        assert!((s.delta_hat - 46.0 / 10_042.0).abs() < 1e-15);
        assert!((s.rho_hat - 0.81).abs() < 0.005);
        let (a, b) = rows[0].expand();
        assert_eq!(crate::paired::summarize_pair(&a, &b).unwrap().counts, s.counts);
    }

    #[test]
    fn counts_reject_inconsistent_marginal() {
        let csv = "pair,N,p_a,p_b,b,c\nHS,10042,0.8247,0.9000,295,249\n";
        assert!(read_counts(csv.as_bytes()).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_score_matrix("/nonexistent/scores.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.kind(), crate::ErrorKind::Data);
    }
}
