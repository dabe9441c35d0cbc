//! Labeled text datasets: loading, label spaces, deterministic splitting.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
}

impl Instance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Instance {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_string),
        }
    }
}

/// Ordered set of class labels, optionally carrying integer ranks for ordinal tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    labels: Vec<String>,
    ranks: Option<Vec<i64>>,
}

impl LabelSpace {
    pub fn nominal<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        Self::validate(&labels)?;
        Ok(LabelSpace {
            labels,
            ranks: None,
        })
    }

    /// Ordinal label space; `pairs` gives each label with its rank, in label order.
    pub fn ordinal<S: AsRef<str>>(pairs: &[(S, i64)]) -> Result<Self> {
        let labels: Vec<String> = pairs.iter().map(|(s, _)| s.as_ref().to_string()).collect();
        Self::validate(&labels)?;
        let ranks: Vec<i64> = pairs.iter().map(|(_, r)| *r).collect();
        let distinct: HashSet<i64> = ranks.iter().copied().collect();
        if distinct.len() != ranks.len() {
            return Err(Error::LabelSpace("ordinal ranks must be distinct".into()));
        }
        Ok(LabelSpace {
            labels,
            ranks: Some(ranks),
        })
    }

    fn validate(labels: &[String]) -> Result<()> {
        if labels.len() < 2 {
            return Err(Error::LabelSpace(format!(
                "need at least 2 labels, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in labels {
            if l.is_empty() {
                return Err(Error::LabelSpace("empty label".into()));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::LabelSpace(format!("duplicate label {l:?}")));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_ordinal(&self) -> bool {
        self.ranks.is_some()
    }

    pub fn ranks(&self) -> Option<&[i64]> {
        self.ranks.as_deref()
    }

    pub fn rank(&self, index: usize) -> Option<i64> {
        self.ranks.as_ref().map(|r| r[index])
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    instances: Vec<Instance>,
    label_space: LabelSpace,
}

impl Dataset {
    /// Builds a dataset, checking id uniqueness, nonempty text and label membership.
    pub fn new(
        name: impl Into<String>,
        instances: Vec<Instance>,
        label_space: LabelSpace,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::NoInstances);
        }
        let mut seen = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if inst.id.is_empty() {
                return Err(Error::Malformed {
                    line: 0,
                    message: "empty instance id".into(),
                });
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
            if inst.text.trim().is_empty() {
                return Err(Error::EmptyText(inst.id.clone()));
            }
            if let Some(label) = &inst.label {
                if label_space.index_of(label).is_none() {
                    return Err(Error::UnknownLabel {
                        id: inst.id.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Dataset {
            name: name.into(),
            instances,
            label_space,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Label indices of all instances; fails on the first unlabeled instance.
    pub fn label_indices(&self) -> Result<Vec<usize>> {
        self.instances
            .iter()
            .map(|inst| {
                let label = inst
                    .label
                    .as_deref()
                    .ok_or_else(|| Error::Unlabeled(inst.id.clone()))?;
                Ok(self.label_space.index_of(label).expect("validated at construction"))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Tsv,
    Jsonl,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(DataFormat::Tsv),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(Error::Config(format!("unknown data format {other:?}"))),
        }
    }
}

/// Column (TSV) or field (JSONL) names. When `headline` is set the instance
/// text is `headline + "\n\n" + text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
    pub headline: Option<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            id: "id".into(),
            text: "text".into(),
            label: Some("label".into()),
            headline: None,
        }
    }
}

fn join_headline(headline: Option<String>, body: String) -> String {
    match headline {
        Some(h) => format!("{h}\n\n{body}"),
        None => body,
    }
}

/// Loads a dataset. Without an explicit label space, labels are taken in
/// order of first appearance.
pub fn load_dataset(
    path: &Path,
    format: DataFormat,
    schema: &Schema,
    label_space: Option<&LabelSpace>,
) -> Result<Dataset> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_dataset(&content, &name, format, schema, label_space)
}

pub fn parse_dataset(
    content: &str,
    name: &str,
    format: DataFormat,
    schema: &Schema,
    label_space: Option<&LabelSpace>,
) -> Result<Dataset> {
    let records = match format {
        DataFormat::Tsv => parse_tsv(content, schema)?,
        DataFormat::Jsonl => parse_jsonl(content, schema)?,
    };
    if records.is_empty() {
        return Err(Error::NoInstances);
    }
    let space = match label_space {
        Some(ls) => ls.clone(),
        None => {
            let mut labels: Vec<&str> = Vec::new();
            for (_, inst) in &records {
                if let Some(l) = inst.label.as_deref() {
                    if !labels.contains(&l) {
                        labels.push(l);
                    }
                }
            }
            LabelSpace::nominal(&labels)?
        }
    };
    let mut seen = HashSet::new();
    for (line, inst) in &records {
        if !seen.insert(inst.id.as_str()) {
            return Err(Error::DuplicateId(inst.id.clone()));
        }
        if inst.text.trim().is_empty() {
            return Err(Error::Malformed {
                line: *line,
                message: format!("instance {:?} has empty text", inst.id),
            });
        }
    }
    Dataset::new(name, records.into_iter().map(|(_, i)| i).collect(), space)
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn parse_tsv(content: &str, schema: &Schema) -> Result<Vec<(usize, Instance)>> {
    let all: Vec<&str> = content.split('\n').collect();
    let n_lines = all.len();
    let mut lines = all.into_iter().enumerate();
    let header = match lines.next() {
        Some((_, h)) if !h.trim().is_empty() => h.trim_end_matches('\r'),
        _ => return Err(Error::NoInstances),
    };
    let columns: Vec<&str> = header.split('\t').collect();
    let find = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Malformed {
                line: 1,
                message: format!("header has no column {name:?}"),
            })
    };
    let id_col = find(&schema.id)?;
    let text_col = find(&schema.text)?;
    let label_col = schema.label.as_deref().map(find).transpose()?;
    let headline_col = schema.headline.as_deref().map(find).transpose()?;

    let mut out = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() && i + 1 == n_lines {
            break;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != columns.len() {
            return Err(Error::Malformed {
                line: line_no,
                message: format!(
                    "expected {} columns, found {}",
                    columns.len(),
                    fields.len()
                ),
            });
        }
        let label = label_col
            .map(|c| unescape(fields[c]))
            .filter(|l| !l.is_empty());
        let text = join_headline(headline_col.map(|c| unescape(fields[c])), unescape(fields[text_col]));
        out.push((
            line_no,
            Instance {
                id: unescape(fields[id_col]),
                text,
                label,
            },
        ));
    }
    Ok(out)
}

fn parse_jsonl(content: &str, schema: &Schema) -> Result<Vec<(usize, Instance)>> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            line: line_no,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object".into()))?;
        let get = |field: &str, required: bool| -> Result<Option<String>> {
            match obj.get(field) {
                Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
                Some(serde_json::Value::Number(n)) => Ok(Some(n.to_string())),
                Some(serde_json::Value::Null) | None if !required => Ok(None),
                Some(_) => Err(malformed(format!("field {field:?} must be a string"))),
                None => Err(malformed(format!("missing field {field:?}"))),
            }
        };
        let id = get(&schema.id, true)?.unwrap();
        let body = get(&schema.text, true)?.unwrap();
        let headline = match &schema.headline {
            Some(h) => Some(get(h, true)?.unwrap()),
            None => None,
        };
        let label = match &schema.label {
            Some(l) => get(l, false)?.filter(|s| !s.is_empty()),
            None => None,
        };
        out.push((
            line_no,
            Instance {
                id,
                text: join_headline(headline, body),
                label,
            },
        ));
    }
    Ok(out)
}

/// Writes `id`, `text`, `label` columns with backslash escaping of tabs and newlines.
pub fn write_tsv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::from("id\ttext\tlabel\n");
    for inst in dataset.instances() {
        out.push_str(&escape(&inst.id));
        out.push('\t');
        out.push_str(&escape(&inst.text));
        out.push('\t');
        out.push_str(&escape(inst.label.as_deref().unwrap_or("")));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::file(path, e))
}

/// A fraction `numerator / denominator` strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    numerator: u64,
    denominator: u64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 || numerator == 0 || numerator >= denominator {
            return Err(Error::Split(format!(
                "train fraction {numerator}/{denominator} is not in (0, 1)"
            )));
        }
        Ok(Fraction {
            numerator,
            denominator,
        })
    }

    /// `floor(self * n)` in exact integer arithmetic.
    pub fn floor_mul(&self, n: usize) -> usize {
        ((self.numerator as u128 * n as u128) / self.denominator as u128) as usize
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl FromStr for Fraction {
    type Err = Error;

    /// Accepts `a/b` or a plain decimal such as `0.66`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Split(format!("cannot parse train fraction {s:?}"));
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return Fraction::new(a, b);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let denominator = 10u64.pow(frac.len() as u32);
        let frac_value: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let numerator = int
            .checked_mul(denominator)
            .and_then(|v| v.checked_add(frac_value))
            .ok_or_else(bad)?;
        Fraction::new(numerator, denominator)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_fraction: Fraction,
    pub seed: u64,
}

/// Shuffles `0..N` with [`Rng::shuffle`] seeded by `spec.seed`; the first
/// `floor(train_fraction * N)` shuffled positions form the train side. Both
/// sides keep the original file order.
pub fn train_test_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Split(format!("need at least 2 instances, got {n}")));
    }
    let n_train = spec.train_fraction.floor_mul(n);
    if n_train == 0 || n_train == n {
        return Err(Error::Split(format!(
            "fraction {} of {n} instances leaves one side empty",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(spec.seed).shuffle(&mut order);
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (inst, keep) in d.instances.iter().zip(&in_train) {
        if *keep {
            train.push(inst.clone());
        } else {
            test.push(inst.clone());
        }
    }
    Ok((
        Dataset::new(format!("{}.train", d.name), train, d.label_space.clone())?,
        Dataset::new(format!("{}.test", d.name), test, d.label_space.clone())?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassShare {
    pub label: String,
    pub count: usize,
    pub prevalence: f64,
}

/// Per-label counts and prevalences, in label-space order.
pub fn class_distribution(d: &Dataset) -> Result<Vec<ClassShare>> {
    let labels = d.label_indices()?;
    let mut counts = vec![0usize; d.label_space.len()];
    for l in labels {
        counts[l] += 1;
    }
    let n = d.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| ClassShare {
            label: d.label_space.label(i).to_string(),
            count,
            prevalence: count as f64 / n,
        })
        .collect())
}
