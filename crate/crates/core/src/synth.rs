//! Seeded stand-in corpora for the subjectivity (OBJ/SUBJ) and political
//! bias (left/center/right) tasks, complete with CoNLL-U annotations and
//! synthetic document embeddings.
//!
//! Sentences come from two small grammars over a tagged lexicon: a
//! reporting style (determiners, past-tense verbs, numbers, prepositional
//! chains) and an opinion style (first-person pronouns, evaluative
//! adjectives, intensifiers, `!`/`?`). Each class mixes the two at its own
//! rate, so classes overlap and no single feature separates them. Bias
//! classes additionally differ in topic nouns.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::annotate::{write_conllu, AnnotatedSentence, Token};
use crate::corpus::{train_test_split, write_tsv, Dataset, Fraction, Instance, LabelSpace, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{write_embeddings, Embeddings};
use crate::rng::Rng;

pub const EMBEDDING_DIM: usize = 32;

type Word = (&'static str, &'static str, &'static str);

const THE: Word = ("the", "DET", "Definite=Def|PronType=Art");
const A: Word = ("a", "DET", "Definite=Ind|PronType=Art");
const THIS: Word = ("this", "DET", "Number=Sing|PronType=Dem");
const THESE: Word = ("these", "DET", "Number=Plur|PronType=Dem");
const THAT: Word = ("that", "SCONJ", "_");
const IS: Word = ("is", "AUX", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin");
const WAS: Word = ("was", "AUX", "Mood=Ind|Number=Sing|Person=3|Tense=Past|VerbForm=Fin");
const ARE: Word = ("are", "AUX", "Mood=Ind|Number=Plur|Person=3|Tense=Pres|VerbForm=Fin");
const WERE: Word = ("were", "AUX", "Mood=Ind|Number=Plur|Person=3|Tense=Past|VerbForm=Fin");
const AND: Word = ("and", "CCONJ", "_");
const BUT: Word = ("but", "CCONJ", "_");
const COMMA: Word = (",", "PUNCT", "_");
const PERIOD: Word = (".", "PUNCT", "_");
const BANG: Word = ("!", "PUNCT", "_");
const QUESTION: Word = ("?", "PUNCT", "_");

const SING: &str = "Number=Sing";
const PLUR: &str = "Number=Plur";
const PAST: &str = "Mood=Ind|Tense=Past|VerbForm=Fin";
const PRES: &str = "Mood=Ind|Tense=Pres|VerbForm=Fin";
const POS: &str = "Degree=Pos";

const NOUNS: &[Word] = &[
    ("report", "NOUN", SING),
    ("government", "NOUN", SING),
    ("committee", "NOUN", SING),
    ("budget", "NOUN", SING),
    ("council", "NOUN", SING),
    ("city", "NOUN", SING),
    ("minister", "NOUN", SING),
    ("proposal", "NOUN", SING),
    ("statement", "NOUN", SING),
    ("agency", "NOUN", SING),
    ("court", "NOUN", SING),
    ("election", "NOUN", SING),
    ("plan", "NOUN", SING),
    ("law", "NOUN", SING),
    ("decision", "NOUN", SING),
];
const PLURAL_NOUNS: &[Word] = &[
    ("officials", "NOUN", PLUR),
    ("residents", "NOUN", PLUR),
    ("voters", "NOUN", PLUR),
    ("members", "NOUN", PLUR),
    ("figures", "NOUN", PLUR),
    ("votes", "NOUN", PLUR),
    ("documents", "NOUN", PLUR),
];
const LEFT_NOUNS: &[Word] = &[
    ("workers", "NOUN", PLUR),
    ("unions", "NOUN", PLUR),
    ("inequality", "NOUN", SING),
    ("climate", "NOUN", SING),
    ("healthcare", "NOUN", SING),
    ("wages", "NOUN", PLUR),
    ("corporations", "NOUN", PLUR),
];
const RIGHT_NOUNS: &[Word] = &[
    ("taxpayers", "NOUN", PLUR),
    ("border", "NOUN", SING),
    ("freedom", "NOUN", SING),
    ("regulation", "NOUN", SING),
    ("security", "NOUN", SING),
    ("business", "NOUN", SING),
    ("tradition", "NOUN", SING),
];
const PROPER: &[Word] = &[
    ("Smith", "PROPN", SING),
    ("Brussels", "PROPN", SING),
    ("Parliament", "PROPN", SING),
    ("Garcia", "PROPN", SING),
    ("Ontario", "PROPN", SING),
];
const PAST_VERBS: &[Word] = &[
    ("said", "VERB", PAST),
    ("announced", "VERB", PAST),
    ("approved", "VERB", PAST),
    ("reported", "VERB", PAST),
    ("published", "VERB", PAST),
    ("confirmed", "VERB", PAST),
    ("rejected", "VERB", PAST),
    ("recorded", "VERB", PAST),
];
const OPINION_VERBS: &[Word] = &[
    ("think", "VERB", PRES),
    ("believe", "VERB", PRES),
    ("feel", "VERB", PRES),
    ("suspect", "VERB", PRES),
    ("doubt", "VERB", PRES),
    ("love", "VERB", PRES),
    ("hate", "VERB", PRES),
];
const NEUTRAL_ADJ: &[Word] = &[
    ("annual", "ADJ", POS),
    ("new", "ADJ", POS),
    ("public", "ADJ", POS),
    ("federal", "ADJ", POS),
    ("local", "ADJ", POS),
    ("final", "ADJ", POS),
    ("official", "ADJ", POS),
];
const EVAL_ADJ: &[Word] = &[
    ("terrible", "ADJ", POS),
    ("wonderful", "ADJ", POS),
    ("absurd", "ADJ", POS),
    ("shameful", "ADJ", POS),
    ("brilliant", "ADJ", POS),
    ("ridiculous", "ADJ", POS),
    ("disgraceful", "ADJ", POS),
    ("amazing", "ADJ", POS),
    ("worst", "ADJ", "Degree=Sup"),
    ("better", "ADJ", "Degree=Cmp"),
];
const INTENSIFIERS: &[Word] = &[
    ("really", "ADV", "_"),
    ("very", "ADV", "_"),
    ("truly", "ADV", "_"),
    ("utterly", "ADV", "_"),
    ("simply", "ADV", "_"),
    ("frankly", "ADV", "_"),
];
const TIME_ADV: &[Word] = &[
    ("yesterday", "ADV", "_"),
    ("officially", "ADV", "_"),
    ("recently", "ADV", "_"),
    ("later", "ADV", "_"),
];
const FIRST_PERSON: &[Word] = &[
    ("I", "PRON", "Case=Nom|Number=Sing|Person=1|PronType=Prs"),
    ("we", "PRON", "Case=Nom|Number=Plur|Person=1|PronType=Prs"),
];
const PREPOSITIONS: &[Word] = &[
    ("of", "ADP", "_"),
    ("in", "ADP", "_"),
    ("on", "ADP", "_"),
    ("for", "ADP", "_"),
    ("after", "ADP", "_"),
    ("with", "ADP", "_"),
];

/// Per-class generation rates.
#[derive(Debug, Clone, Copy)]
struct Style {
    /// Chance that a sentence uses the opinion grammar.
    opinion: f64,
    /// Chance that an adjective slot in a report sentence is evaluative.
    evaluative: f64,
    /// Chance that an opinion sentence ends in `!` or `?`.
    exclaim: f64,
    /// Chance of each extra prepositional phrase in a report sentence.
    extend: f64,
    /// Topic-noun mixture: (left pool, right pool) probabilities.
    topic: (f64, f64),
}

struct Generator {
    rng: Rng,
}

fn token((form, pos, feats): (&str, &str, &str)) -> Token {
    let mut t = Token::tagged(form, pos);
    if feats != "_" {
        t.morph = feats.split('|').map(str::to_string).collect();
    }
    t
}

impl Generator {
    fn pick(&mut self, pool: &[Word]) -> Token {
        token(*self.rng.choose(pool))
    }

    fn noun(&mut self, style: &Style) -> Token {
        let u = self.rng.uniform();
        if u < style.topic.0 {
            self.pick(LEFT_NOUNS)
        } else if u < style.topic.0 + style.topic.1 {
            self.pick(RIGHT_NOUNS)
        } else if self.rng.bernoulli(0.3) {
            self.pick(PLURAL_NOUNS)
        } else {
            self.pick(NOUNS)
        }
    }

    fn number(&mut self) -> Token {
        let n = match self.rng.below(3) {
            0 => 2 + self.rng.below(98),
            1 => 100 + self.rng.below(900),
            _ => 1990 + self.rng.below(35),
        };
        token((&n.to_string(), "NUM", "NumForm=Digit|NumType=Card"))
    }

    fn noun_phrase(&mut self, style: &Style) -> Vec<Token> {
        if self.rng.below(5) == 0 {
            return vec![self.pick(PROPER)];
        }
        let noun = self.noun(style);
        let plural = noun.morph.contains(PLUR);
        let mut out = vec![];
        match (self.rng.below(3), plural) {
            (0, false) => out.push(token(A)),
            (0, true) => {}
            (1, false) => out.push(token(THIS)),
            (1, true) => out.push(token(THESE)),
            _ => out.push(token(THE)),
        }
        if self.rng.bernoulli(0.35) {
            let pool = if self.rng.bernoulli(style.evaluative) { EVAL_ADJ } else { NEUTRAL_ADJ };
            out.push(self.pick(pool));
        }
        out.push(noun);
        out
    }

    fn report_sentence(&mut self, style: &Style) -> Vec<Token> {
        let mut s = self.noun_phrase(style);
        s.push(self.pick(PAST_VERBS));
        if self.rng.bernoulli(0.4) {
            s.push(self.number());
            s.push(self.pick(PLURAL_NOUNS));
        } else {
            s.extend(self.noun_phrase(style));
        }
        while self.rng.bernoulli(style.extend) {
            if self.rng.bernoulli(0.3) {
                s.push(token(COMMA));
            }
            s.push(self.pick(PREPOSITIONS));
            s.extend(self.noun_phrase(style));
        }
        if self.rng.bernoulli(0.25) {
            s.push(self.pick(TIME_ADV));
        }
        s.push(token(PERIOD));
        s
    }

    fn opinion_sentence(&mut self, style: &Style) -> Vec<Token> {
        let mut s = vec![self.pick(FIRST_PERSON), self.pick(OPINION_VERBS)];
        if self.rng.bernoulli(0.5) {
            s.push(token(THAT));
        }
        let subject = self.noun_phrase(style);
        let plural = subject.last().is_some_and(|t| t.morph.contains(PLUR));
        s.extend(subject);
        let present = self.rng.bernoulli(0.7);
        s.push(token(match (present, plural) {
            (true, false) => IS,
            (false, false) => WAS,
            (true, true) => ARE,
            (false, true) => WERE,
        }));
        if self.rng.bernoulli(0.6) {
            s.push(self.pick(INTENSIFIERS));
        }
        s.push(self.pick(EVAL_ADJ));
        if self.rng.bernoulli(0.3) {
            if self.rng.bernoulli(0.5) {
                s.push(token(COMMA));
                s.push(token(BUT));
            } else {
                s.push(token(AND));
            }
            s.push(self.pick(EVAL_ADJ));
        }
        let end = if self.rng.bernoulli(style.exclaim) {
            if self.rng.bernoulli(0.7) {
                BANG
            } else {
                QUESTION
            }
        } else {
            PERIOD
        };
        s.push(token(end));
        s
    }

    fn sentence(&mut self, style: &Style) -> Vec<Token> {
        let mut s = if self.rng.bernoulli(style.opinion) {
            self.opinion_sentence(style)
        } else {
            self.report_sentence(style)
        };
        if let Some(first) = s.first_mut() {
            first.form = capitalize(&first.form);
        }
        s
    }

    /// Headline: a short noun phrase plus verb, no final punctuation.
    fn headline(&mut self, style: &Style) -> Vec<Token> {
        let mut s = self.noun_phrase(style);
        s.push(self.pick(PAST_VERBS));
        s.push(self.noun(style));
        s[0].form = capitalize(&s[0].form);
        s
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Surface text: tokens joined by spaces, punctuation attached to the previous token.
fn render(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        if !out.is_empty() && t.pos.as_deref() != Some("PUNCT") {
            out.push(' ');
        }
        out.push_str(&t.form);
    }
    out
}

/// One synthetic task: its split, annotations for every instance, embeddings.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub name: String,
    pub train: Dataset,
    pub test: Dataset,
    pub sentences: Vec<AnnotatedSentence>,
    pub embeddings: Embeddings,
    /// Instance ids in generation order.
    pub ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub subjectivity: SyntheticTask,
    pub bias: SyntheticTask,
}

/// Deterministic label sequence with exact class counts `floor(share * n)`,
/// the remainder going to the first class.
fn labels_with_shares(rng: &mut Rng, n: usize, shares: &[(usize, Fraction)]) -> Vec<usize> {
    let mut labels = vec![];
    for &(class, share) in &shares[1..] {
        labels.extend(std::iter::repeat_n(class, share.floor_mul(n)));
    }
    let first = shares[0].0;
    labels.extend(std::iter::repeat_n(first, n - labels.len()));
    rng.shuffle(&mut labels);
    labels
}

fn embedding_rows(rng: &mut Rng, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..EMBEDDING_DIM).map(|_| 0.12 * rng.normal()).collect())
        .collect();
    labels
        .iter()
        .map(|&y| centers[y].iter().map(|c| c + rng.normal()).collect())
        .collect()
}

/// Share of instances whose text is drawn with another class's style while keeping their label.
const STYLE_NOISE: f64 = 0.1;

fn subjectivity(seed: u64, n: usize, split: &SplitSpec) -> Result<SyntheticTask> {
    let mut g = Generator { rng: Rng::new(seed) };
    let ls = LabelSpace::nominal(&["OBJ", "SUBJ"])?;
    let styles = [
        Style {
            opinion: 0.15,
            evaluative: 0.1,
            exclaim: 0.15,
            extend: 0.55,
            topic: (0.0, 0.0),
        },
        Style {
            opinion: 0.6,
            evaluative: 0.45,
            exclaim: 0.45,
            extend: 0.3,
            topic: (0.0, 0.0),
        },
    ];
    let labels = labels_with_shares(&mut g.rng, n, &[(0, Fraction::new(3, 5)?), (1, Fraction::new(2, 5)?)]);
    let mut instances = Vec::with_capacity(n);
    let mut sentences = vec![];
    for (i, &y) in labels.iter().enumerate() {
        let id = format!("subj-{:04}", i + 1);
        let style = if g.rng.bernoulli(STYLE_NOISE) { styles[1 - y] } else { styles[y] };
        let count = if g.rng.bernoulli(0.3) { 2 } else { 1 };
        let mut parts = vec![];
        for _ in 0..count {
            let tokens = g.sentence(&style);
            parts.push(render(&tokens));
            sentences.push(AnnotatedSentence {
                instance_id: id.clone(),
                tokens,
            });
        }
        instances.push(Instance::new(&id, parts.join(" "), Some(ls.label(y))));
    }
    finish("subjectivity", instances, ls, sentences, &mut g.rng, &labels, split)
}

fn bias(seed: u64, n: usize, split: &SplitSpec) -> Result<SyntheticTask> {
    let mut g = Generator { rng: Rng::new(seed) };
    let ls = LabelSpace::ordinal(&[("left", 0), ("center", 1), ("right", 2)])?;
    let styles = [
        Style {
            opinion: 0.3,
            evaluative: 0.3,
            exclaim: 0.3,
            extend: 0.45,
            topic: (0.3, 0.05),
        },
        Style {
            opinion: 0.1,
            evaluative: 0.1,
            exclaim: 0.1,
            extend: 0.5,
            topic: (0.1, 0.1),
        },
        Style {
            opinion: 0.3,
            evaluative: 0.3,
            exclaim: 0.3,
            extend: 0.45,
            topic: (0.05, 0.3),
        },
    ];
    let labels = labels_with_shares(
        &mut g.rng,
        n,
        &[(1, Fraction::new(39, 100)?), (0, Fraction::new(31, 100)?), (2, Fraction::new(30, 100)?)],
    );
    let mut instances = Vec::with_capacity(n);
    let mut sentences = vec![];
    for (i, &y) in labels.iter().enumerate() {
        let id = format!("bias-{:04}", i + 1);
        let style = if g.rng.bernoulli(STYLE_NOISE) {
            styles[(y + 1 + g.rng.below(2)) % 3]
        } else {
            styles[y]
        };
        let headline = g.headline(&style);
        let head_text = render(&headline);
        sentences.push(AnnotatedSentence {
            instance_id: id.clone(),
            tokens: headline,
        });
        let mut body = vec![];
        for _ in 0..3 + g.rng.below(3) {
            let tokens = g.sentence(&style);
            body.push(render(&tokens));
            sentences.push(AnnotatedSentence {
                instance_id: id.clone(),
                tokens,
            });
        }
        instances.push(Instance::new(&id, format!("{head_text}\n\n{}", body.join(" ")), Some(ls.label(y))));
    }
    finish("bias", instances, ls, sentences, &mut g.rng, &labels, split)
}

fn finish(
    name: &str,
    instances: Vec<Instance>,
    ls: LabelSpace,
    sentences: Vec<AnnotatedSentence>,
    rng: &mut Rng,
    labels: &[usize],
    split: &SplitSpec,
) -> Result<SyntheticTask> {
    let ids: Vec<String> = instances.iter().map(|i| i.id.clone()).collect();
    let rows = embedding_rows(rng, labels, ls.len());
    let embeddings = ids.iter().cloned().zip(rows).collect();
    let all = Dataset::new(name, instances, ls)?;
    let (mut train, mut test) = train_test_split(&all, split)?;
    train.name = "train".into();
    test.name = "test".into();
    Ok(SyntheticTask {
        name: name.into(),
        train,
        test,
        sentences,
        embeddings,
        ids,
    })
}

/// Generates both tasks with `n` instances each and splits them 0.66/0.34.
/// The subjectivity task is exactly 60% OBJ; the bias task is 39% center,
/// 31% left, 30% right.
pub fn generate_synthetic_corpus(seed: u64, n: usize) -> Result<SyntheticCorpus> {
    if n < 50 {
        return Err(Error::Config(format!("synthetic corpus needs n >= 50, got {n}")));
    }
    let split = SplitSpec {
        train_fraction: Fraction::new(66, 100)?,
        seed,
    };
    Ok(SyntheticCorpus {
        subjectivity: subjectivity(seed, n, &split)?,
        bias: bias(seed.wrapping_add(1), n, &split)?,
    })
}

impl SyntheticTask {
    fn embedding_file(&self) -> String {
        write_embeddings(
            EMBEDDING_DIM,
            self.ids.iter().map(|id| (id.as_str(), self.embeddings[id].as_slice())),
        )
    }
}

fn write_jsonl(d: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for inst in d.instances() {
        let (headline, body) = inst.text.split_once("\n\n").unwrap_or(("", &inst.text));
        let row = json!({
            "id": inst.id,
            "headline": headline,
            "body": body,
            "label": inst.label,
        });
        out.push_str(&row.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::file(path, e))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::file(path, e))
}

impl SyntheticCorpus {
    /// Writes `subjectivity/{train,test}.tsv` and `bias/{train,test}.jsonl`,
    /// each next to `annotations.conllu` and `embeddings.txt`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = vec![];
        for task in [&self.subjectivity, &self.bias] {
            let sub = dir.join(&task.name);
            std::fs::create_dir_all(&sub).map_err(|e| Error::file(&sub, e))?;
            let ordinal = task.train.label_space().is_ordinal();
            for d in [&task.train, &task.test] {
                let path = if ordinal {
                    let p = sub.join(format!("{}.jsonl", d.name));
                    write_jsonl(d, &p)?;
                    p
                } else {
                    let p = sub.join(format!("{}.tsv", d.name));
                    write_tsv(d, &p)?;
                    p
                };
                written.push(path);
            }
            let conllu = sub.join("annotations.conllu");
            write_file(&conllu, &write_conllu(&task.sentences))?;
            let emb = sub.join("embeddings.txt");
            write_file(&emb, &task.embedding_file())?;
            written.extend([conllu, emb]);
        }
        Ok(written)
    }
}

/// Groups a task's sentences by instance id.
pub fn annotations_of(task: &SyntheticTask) -> BTreeMap<String, Vec<AnnotatedSentence>> {
    crate::annotate::group_by_instance(task.sentences.clone())
}
