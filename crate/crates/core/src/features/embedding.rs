//! Dense embedding interchange: line 1 `dim=<D>`, then one
//! `<instance_id>\t<v1> <v2> ... <vD>` line per instance.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub type Embeddings = BTreeMap<String, Vec<f64>>;

pub fn load_embeddings(path: &Path, expected_dim: usize) -> Result<Embeddings> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_embeddings(&content, expected_dim)
}

/// Rows are numbered from 1 after the header; the header is row 0.
pub fn parse_embeddings(content: &str, expected_dim: usize) -> Result<Embeddings> {
    let mut lines = content.lines();
    let header = lines.next().unwrap_or("");
    let dim: usize = header
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| Error::Embedding {
            row: 0,
            message: format!("bad header {header:?}"),
        })?;
    if dim != expected_dim {
        return Err(Error::Embedding {
            row: 0,
            message: format!("dimension mismatch (header {dim}, expected {expected_dim})"),
        });
    }
    let mut out = Embeddings::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let err = |message: String| Error::Embedding { row, message };
        if line.is_empty() {
            continue;
        }
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| err("expected <id><TAB><values>".into()))?;
        let vector = values
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| {
                let v: f64 = s.parse().map_err(|_| err(format!("bad number {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err("non-finite value".into()))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if vector.len() != expected_dim {
            return Err(err("dimension mismatch".into()));
        }
        if out.insert(id.to_string(), vector).is_some() {
            return Err(err(format!("duplicate id {id:?}")));
        }
    }
    Ok(out)
}

/// Serializes rows in the given order using the shortest round-trip decimal form.
pub fn write_embeddings<'a>(
    dim: usize,
    rows: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> String {
    let mut out = format!("dim={dim}\n");
    for (id, v) in rows {
        out.push_str(id);
        out.push('\t');
        let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&parts.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_768() {
        let row: Vec<String> = (0..768).map(|i| format!("{}", i as f64 / 100.0)).collect();
        let content = format!("dim=768\ndoc1\t{}\n", row.join(" "));
        let e = parse_embeddings(&content, 768).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e["doc1"][767], 7.67);
    }

    #[test]
    fn short_row() {
        let row = vec!["0.5"; 767].join(" ");
        let err = parse_embeddings(&format!("dim=768\nd\t{row}\n"), 768).unwrap_err();
        assert_eq!(err.to_string(), "dimension mismatch at row 1");
    }

    #[test]
    fn bad_rows() {
        assert!(parse_embeddings("dim=2\na\t1 2\na\t3 4\n", 2).is_err());
        assert!(parse_embeddings("dim=2\na\t1 NaN\n", 2).is_err());
        assert!(parse_embeddings("dim=2\na\t1 inf\n", 2).is_err());
        assert!(parse_embeddings("dim=3\na\t1 2 3\n", 2).is_err());
        assert!(parse_embeddings("a\t1 2\n", 2).is_err());
    }

    #[test]
    fn round_trip_exact() {
        let rows: Vec<(String, Vec<f64>)> = vec![
            ("x".into(), vec![0.1, -2.5e-8, 1.0 / 3.0]),
            ("y".into(), vec![123456.789, 0.0, -0.0]),
        ];
        let text = write_embeddings(3, rows.iter().map(|(i, v)| (i.as_str(), v.as_slice())));
        let back = parse_embeddings(&text, 3).unwrap();
        for (id, v) in &rows {
            let got = &back[id];
            for (a, b) in v.iter().zip(got) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
