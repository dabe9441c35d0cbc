//! Symbol streams for feature extraction: word tokens, character n-grams,
//! POS n-grams and morphological features, plus CoNLL-U interchange and a
//! small rule-based tagger used when no external annotations are available.
//!
//! Every multiset symbol carries a family prefix (`w{n}:`, `c{n}:`, `p{n}:`,
//! `m:`) so vocabularies built from several families never collide.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::corpus::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub pos: Option<String>,
    pub morph: BTreeSet<String>,
}

impl Token {
    pub fn new(form: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            pos: None,
            morph: BTreeSet::new(),
        }
    }

    pub fn tagged(form: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            pos: Some(pos.into()),
            ..Token::new(form)
        }
    }

    /// Adds `Feature=Value` entries; each must contain exactly one `=`.
    pub fn with_morph<S: AsRef<str>>(mut self, feats: &[S]) -> Result<Self> {
        for f in feats {
            let f = f.as_ref();
            if !is_feature_pair(f) {
                return Err(Error::Format(format!(
                    "morphological feature {f:?} is not Feature=Value"
                )));
            }
            self.morph.insert(f.to_string());
        }
        Ok(self)
    }
}

fn is_feature_pair(s: &str) -> bool {
    s.matches('=').count() == 1 && !s.starts_with('=') && !s.ends_with('=')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub instance_id: String,
    pub tokens: Vec<Token>,
}

/// Sentences grouped by instance id, in file order within each instance.
pub type Annotations = BTreeMap<String, Vec<AnnotatedSentence>>;

/// Symbol counts. Zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramMultiset {
    entries: BTreeMap<String, u64>,
    total: u64,
}

impl NgramMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, symbol: impl Into<String>, count: u64) {
        if count == 0 {
            return;
        }
        *self.entries.entry(symbol.into()).or_insert(0) += count;
        self.total += count;
    }

    pub fn merge(&mut self, other: &NgramMultiset) {
        for (s, c) in &other.entries {
            self.add(s.clone(), *c);
        }
    }

    pub fn get(&self, symbol: &str) -> u64 {
        self.entries.get(symbol).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in lexicographic symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(s, c)| (s.as_str(), *c))
    }
}

impl<S: Into<String>> FromIterator<(S, u64)> for NgramMultiset {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut m = NgramMultiset::new();
        for (s, c) in iter {
            m.add(s, c);
        }
        m
    }
}

/// Splits on Unicode whitespace, then peels leading and trailing
/// non-alphanumeric characters off each chunk as single-character tokens.
/// Inner punctuation (`left-wing`, `don't`) stays attached.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars
            .iter()
            .position(|c| c.is_alphanumeric())
            .unwrap_or(chars.len());
        let end = chars
            .iter()
            .rposition(|c| c.is_alphanumeric())
            .map_or(start, |i| i + 1);
        for c in &chars[..start] {
            out.push(Token::new(c.to_string()));
        }
        if start < end {
            out.push(Token::new(chars[start..end].iter().collect::<String>()));
        }
        for c in &chars[end.max(start)..] {
            out.push(Token::new(c.to_string()));
        }
    }
    out
}

fn ngrams_over<F>(len: usize, n_min: usize, n_max: usize, mut emit: F)
where
    F: FnMut(usize, usize),
{
    assert!(n_min >= 1 && n_min <= n_max, "invalid n-gram range {n_min}..={n_max}");
    for n in n_min..=n_max.min(len) {
        for start in 0..=len - n {
            emit(n, start);
        }
    }
}

/// Word n-grams over token forms, symbols `w{n}:` joined by a space.
pub fn word_ngrams(tokens: &[Token], n_min: usize, n_max: usize) -> NgramMultiset {
    let mut m = NgramMultiset::new();
    ngrams_over(tokens.len(), n_min, n_max, |n, start| {
        let joined: Vec<&str> = tokens[start..start + n].iter().map(|t| t.form.as_str()).collect();
        m.add(format!("w{n}:{}", joined.join(" ")), 1);
    });
    m
}

/// All contiguous character substrings of length `n_min..=n_max` of the raw text.
pub fn char_ngrams(text: &str, n_min: usize, n_max: usize) -> NgramMultiset {
    let chars: Vec<char> = text.chars().collect();
    let mut m = NgramMultiset::new();
    ngrams_over(chars.len(), n_min, n_max, |n, start| {
        let mut symbol = format!("c{n}:");
        symbol.extend(&chars[start..start + n]);
        m.add(symbol, 1);
    });
    m
}

pub fn pos_ngrams(s: &AnnotatedSentence, n_min: usize, n_max: usize) -> Result<NgramMultiset> {
    let tags = s
        .tokens
        .iter()
        .enumerate()
        .map(|(index, t)| t.pos.as_deref().ok_or(Error::MissingPosTag { index }))
        .collect::<Result<Vec<&str>>>()?;
    let mut m = NgramMultiset::new();
    ngrams_over(tags.len(), n_min, n_max, |n, start| {
        m.add(format!("p{n}:{}", tags[start..start + n].join("_")), 1);
    });
    Ok(m)
}

pub fn morph_feature_counts(s: &AnnotatedSentence) -> NgramMultiset {
    let mut m = NgramMultiset::new();
    for t in &s.tokens {
        for f in &t.morph {
            m.add(format!("m:{f}"), 1);
        }
    }
    m
}

pub fn load_conllu(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_conllu(&content)
}

/// Parses CoNLL-U, keeping FORM, UPOS and FEATS. Multiword-token ranges
/// (`3-4`) and empty nodes (`5.1`) are skipped.
pub fn parse_conllu(content: &str) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    let mut instance_id: Option<String> = None;
    let mut tokens: Vec<Token> = Vec::new();
    let mut start_line = 1;
    let mut in_sentence = false;

    let mut finish = |instance_id: &mut Option<String>,
                      tokens: &mut Vec<Token>,
                      start_line: usize|
     -> Result<()> {
        let id = instance_id
            .take()
            .ok_or(Error::MissingInstanceId { line: start_line })?;
        out.push(AnnotatedSentence {
            instance_id: id,
            tokens: std::mem::take(tokens),
        });
        Ok(())
    };

    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if in_sentence {
                finish(&mut instance_id, &mut tokens, start_line)?;
                in_sentence = false;
            }
            continue;
        }
        if !in_sentence {
            in_sentence = true;
            start_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "instance_id" {
                    instance_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Malformed {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if cols[1].is_empty() {
            return Err(Error::Malformed {
                line: line_no,
                message: "empty FORM".into(),
            });
        }
        let mut token = Token::new(cols[1]);
        if cols[3] != "_" {
            token.pos = Some(cols[3].to_string());
        }
        if cols[5] != "_" {
            for f in cols[5].split('|') {
                if !is_feature_pair(f) {
                    return Err(Error::Malformed {
                        line: line_no,
                        message: format!("FEATS entry {f:?} is not Feature=Value"),
                    });
                }
                token.morph.insert(f.to_string());
            }
        }
        tokens.push(token);
    }
    if in_sentence {
        finish(&mut instance_id, &mut tokens, start_line)?;
    }
    Ok(out)
}

/// Serializes FORM, UPOS and FEATS; every other column is `_`.
pub fn write_conllu(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str("# instance_id = ");
        out.push_str(&s.instance_id);
        out.push('\n');
        for (i, t) in s.tokens.iter().enumerate() {
            let feats = if t.morph.is_empty() {
                "_".to_string()
            } else {
                t.morph.iter().cloned().collect::<Vec<_>>().join("|")
            };
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t_\t{}\t_\t_\t_\t_\n",
                i + 1,
                t.form,
                t.pos.as_deref().unwrap_or("_"),
                feats
            ));
        }
        out.push('\n');
    }
    out
}

pub fn group_by_instance(sentences: Vec<AnnotatedSentence>) -> Annotations {
    let mut out = Annotations::new();
    for s in sentences {
        out.entry(s.instance_id.clone()).or_default().push(s);
    }
    out
}

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Lexicon lookup followed by ten suffix/shape rules; unknown words are NOUN.
///
/// Rules, first match wins:
/// 1. no alphanumeric character: PUNCT
/// 2. contains a digit and no letter: NUM
/// 3. `-ly`: ADV
/// 4. `-ing`: VERB
/// 5. `-ed`: VERB
/// 6. `-ous`, `-ful`, `-ive`, `-less`: ADJ
/// 7. `-able`, `-ible`: ADJ
/// 8. `-tion`, `-sion`, `-ment`, `-ness`, `-ity`: NOUN
/// 9. `-ize`, `-ise`: VERB
/// 10. capitalized and not sentence-initial: PROPN
#[derive(Debug, Clone)]
pub struct Tagger {
    lexicon: HashMap<String, String>,
}

impl Tagger {
    pub fn builtin() -> Self {
        Self::from_tsv(BUILTIN_LEXICON).expect("bundled lexicon is well-formed")
    }

    /// Lexicon TSV: header row then `form \t UPOS` lines.
    pub fn from_tsv(content: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (i, line) in content.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let (form, tag) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                line: i + 1,
                message: "expected form<TAB>UPOS".into(),
            })?;
            lexicon.insert(form.to_string(), tag.to_string());
        }
        Ok(Tagger { lexicon })
    }

    pub fn tag_word(&self, form: &str, position: usize) -> &str {
        if let Some(tag) = self.lexicon.get(form) {
            return tag;
        }
        let lower = form.to_lowercase();
        if let Some(tag) = self.lexicon.get(&lower) {
            return tag;
        }
        let ends = |suffixes: &[&str]| {
            suffixes
                .iter()
                .any(|s| lower.len() > s.len() + 1 && lower.ends_with(s))
        };
        if !form.chars().any(char::is_alphanumeric) {
            "PUNCT"
        } else if form.chars().any(|c| c.is_ascii_digit()) && !form.chars().any(char::is_alphabetic) {
            "NUM"
        } else if ends(&["ly"]) {
            "ADV"
        } else if ends(&["ing", "ed"]) {
            "VERB"
        } else if ends(&["ous", "ful", "ive", "less", "able", "ible"]) {
            "ADJ"
        } else if ends(&["tion", "sion", "ment", "ness", "ity"]) {
            "NOUN"
        } else if ends(&["ize", "ise"]) {
            "VERB"
        } else if position > 0 && form.chars().next().is_some_and(char::is_uppercase) {
            "PROPN"
        } else {
            "NOUN"
        }
    }

    pub fn tag(&self, tokens: &[Token]) -> Vec<Token> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| Token {
                pos: Some(self.tag_word(&t.form, i).to_string()),
                ..t.clone()
            })
            .collect()
    }
}

pub fn builtin_pos_tag(tokens: &[Token]) -> Vec<Token> {
    Tagger::builtin().tag(tokens)
}

/// One tokenized, tagged sentence per instance (no morphological features).
pub fn builtin_annotations(dataset: &Dataset) -> Annotations {
    let tagger = Tagger::builtin();
    dataset
        .instances()
        .iter()
        .map(|inst| {
            let sentence = AnnotatedSentence {
                instance_id: inst.id.clone(),
                tokens: tagger.tag(&tokenize(&inst.text)),
            };
            (inst.id.clone(), vec![sentence])
        })
        .collect()
}
