//! Results tables: one column per classifier in the fixed order Majority,
//! KNN, LR, LSVM, MLP, DT, RF, GB; rows `weightedf1s`, `accuracy` and a
//! bucketed `Training time`.

use std::str::FromStr;

use crate::classifiers::ModelKind;
use crate::error::{Error, Result};
use crate::eval::{EvaluationReport, Phase};

pub const ROW_WEIGHTED_F1: &str = "weightedf1s";
pub const ROW_ACCURACY: &str = "accuracy";
pub const ROW_TRAINING_TIME: &str = "Training time";

/// Smallest of `<1s`, `<30s`, `<1m`, `<5m`, `<1h` that the duration falls strictly under, else `>1h`.
pub fn time_bucket(seconds: f64) -> &'static str {
    const BUCKETS: [(f64, &str); 5] = [(1.0, "<1s"), (30.0, "<30s"), (60.0, "<1m"), (300.0, "<5m"), (3600.0, "<1h")];
    BUCKETS
        .iter()
        .find(|(limit, _)| seconds < *limit)
        .map_or(">1h", |b| b.1)
}

pub fn format_score(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsColumn {
    pub kind: ModelKind,
    pub weighted_f1: f64,
    pub accuracy: f64,
    /// `None` for models loaded from disk; shown as `n/a`.
    pub training_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    columns: Vec<ResultsColumn>,
}

impl ResultsTable {
    pub fn from_reports(reports: &[EvaluationReport]) -> Result<Self> {
        let columns = reports
            .iter()
            .map(|r| {
                Ok(ResultsColumn {
                    kind: ModelKind::from_str(&r.classifier)?,
                    weighted_f1: r.weighted_f1,
                    accuracy: r.accuracy,
                    training_seconds: r.timing(Phase::Training),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(columns)
    }

    /// Rebuilds a table from JSON reports as written by a run.
    pub fn from_json_reports(reports: &[serde_json::Value]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("report JSON: {m}"));
        let columns = reports
            .iter()
            .map(|r| {
                let num = |key: &str| r[key].as_f64().ok_or_else(|| bad(&format!("missing {key}")));
                Ok(ResultsColumn {
                    kind: r["classifier"]
                        .as_str()
                        .ok_or_else(|| bad("missing classifier"))?
                        .parse()?,
                    weighted_f1: num("weighted_f1")?,
                    accuracy: num("accuracy")?,
                    training_seconds: r["timing"]["training_seconds"].as_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(columns)
    }

    /// Orders columns canonically; each classifier may appear once.
    pub fn from_columns(mut columns: Vec<ResultsColumn>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("results table needs at least one column".into()));
        }
        columns.sort_by_key(|c| c.kind);
        if columns.windows(2).any(|w| w[0].kind == w[1].kind) {
            return Err(Error::Config("results table has a duplicate classifier".into()));
        }
        Ok(ResultsTable { columns })
    }

    pub fn columns(&self) -> &[ResultsColumn] {
        &self.columns
    }

    fn rows(&self) -> Vec<(&'static str, Vec<String>)> {
        vec![
            (
                ROW_WEIGHTED_F1,
                self.columns.iter().map(|c| format_score(c.weighted_f1)).collect(),
            ),
            (ROW_ACCURACY, self.columns.iter().map(|c| format_score(c.accuracy)).collect()),
            (
                ROW_TRAINING_TIME,
                self.columns
                    .iter()
                    .map(|c| c.training_seconds.map_or("n/a", time_bucket).to_string())
                    .collect(),
            ),
        ]
    }

    /// Space-aligned table with a header line of column names.
    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let head: Vec<&str> = self.columns.iter().map(|c| c.kind.column()).collect();
        let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..head.len())
            .map(|j| rows.iter().map(|r| r.1[j].len()).chain([head[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |label: &str, cells: &[&str]| {
            let mut s = format!("{label:<label_w$}");
            for (c, w) in cells.iter().zip(&widths) {
                s.push_str(&format!("  {c:>w$}"));
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line("", &head);
        for (label, cells) in &rows {
            let cells: Vec<&str> = cells.iter().map(String::as_str).collect();
            out.push_str(&line(label, &cells));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        let mut head = vec!["metric"];
        head.extend(self.columns.iter().map(|c| c.kind.column()));
        w.write_record(&head).expect("in-memory CSV write");
        for (label, cells) in self.rows() {
            let mut rec = vec![label.to_string()];
            rec.extend(cells);
            w.write_record(&rec).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }
}

/// A results table read back from CSV: column headings and the three rows as strings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub columns: Vec<String>,
    pub weighted_f1: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub training_time: Vec<String>,
}

pub fn parse_results_csv(text: &str) -> Result<ParsedTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: String| Error::Format(format!("results table: {m}"));
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.get(0) != Some("metric") {
        return Err(bad("first column must be `metric`".into()));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = std::collections::BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let cells: Vec<String> = rec.iter().skip(1).map(str::to_string).collect();
        rows.insert(rec.get(0).unwrap_or("").to_string(), cells);
    }
    let mut take = |name: &str| rows.remove(name).ok_or_else(|| bad(format!("missing row {name:?}")));
    let numbers = |cells: Vec<String>| -> Result<Vec<f64>> {
        cells
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad(format!("bad number {c:?}"))))
            .collect()
    };
    Ok(ParsedTable {
        weighted_f1: numbers(take(ROW_WEIGHTED_F1)?)?,
        accuracy: numbers(take(ROW_ACCURACY)?)?,
        training_time: take(ROW_TRAINING_TIME)?,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        assert_eq!(time_bucket(0.4), "<1s");
        assert_eq!(time_bucket(1.0), "<30s");
        assert_eq!(time_bucket(45.0), "<1m");
        assert_eq!(time_bucket(200.0), "<5m");
        assert_eq!(time_bucket(3599.0), "<1h");
        assert_eq!(time_bucket(3600.0), ">1h");
    }

    #[test]
    fn six_decimals() {
        assert_eq!(format_score(0.7695984), "0.769598");
        assert_eq!(format_score(0.459866), "0.459866");
        assert_eq!(format_score(1.0), "1.000000");
    }
}
