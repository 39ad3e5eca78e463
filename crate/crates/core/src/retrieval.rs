//! Masked-question similarity and demonstration selection.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::keyinst::KeyInstRecord;
use crate::schema::{DatabaseSchema, TaskInstance};

pub const MASK: &str = "<mask>";
pub const DEFAULT_DEMOS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedQuestion {
    pub text: String,
    pub tokens: Vec<String>,
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80
}

struct Term {
    text: String,
    /// Table names also match with a trailing `s` / `es`.
    plural: bool,
}

fn name_variants(name: &str) -> Vec<String> {
    let lower = name.to_ascii_lowercase();
    let mut out = vec![lower.clone()];
    if lower.contains('_') {
        out.push(lower.replace('_', " "));
    }
    out
}

fn schema_terms(schema: &DatabaseSchema) -> Vec<Term> {
    let mut terms = Vec::new();
    for table in schema.tables() {
        for v in name_variants(&table.name) {
            terms.push(Term {
                text: v,
                plural: true,
            });
        }
        for column in &table.columns {
            for v in name_variants(&column.name) {
                terms.push(Term {
                    text: v,
                    plural: false,
                });
            }
            terms.push(Term {
                text: format!("{}.{}", table.name, column.name).to_ascii_lowercase(),
                plural: false,
            });
        }
    }
    terms.retain(|t| !t.text.trim().is_empty());
    terms
}

/// Length of the longest term matching at `at`, ending on a word boundary.
fn longest_match(lower: &[u8], at: usize, terms: &[Term]) -> Option<usize> {
    let ends_on_boundary = |end: usize| end == lower.len() || !is_word_byte(lower[end]);
    let mut best: Option<usize> = None;
    for term in terms {
        let t = term.text.as_bytes();
        if !lower[at..].starts_with(t) {
            continue;
        }
        let mut candidates = vec![t.len()];
        if term.plural {
            for suffix in [&b"s"[..], &b"es"[..]] {
                if lower[at + t.len()..].starts_with(suffix) {
                    candidates.push(t.len() + suffix.len());
                }
            }
        }
        for len in candidates {
            if ends_on_boundary(at + len) && best.is_none_or(|b| len > b) {
                best = Some(len);
            }
        }
    }
    best
}

/// Replaces schema-linked spans with `<mask>`. Matching is case-insensitive,
/// on word boundaries, longest match first, left to right. Underscores in
/// names also match spaces.
pub fn mask_question(question: &str, schema: &DatabaseSchema) -> MaskedQuestion {
    let terms = schema_terms(schema);
    let lower = question.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    let mut text = String::with_capacity(question.len());
    let mut i = 0;
    let mut copied = 0;
    while i < bytes.len() {
        let at_boundary = i == 0 || !is_word_byte(bytes[i - 1]);
        if at_boundary && question.is_char_boundary(i) {
            if let Some(len) = longest_match(bytes, i, &terms) {
                text.push_str(&question[copied..i]);
                text.push_str(MASK);
                i += len;
                copied = i;
                continue;
            }
        }
        i += 1;
    }
    text.push_str(&question[copied..]);
    let tokens = tokenize(&text);
    MaskedQuestion { text, tokens }
}

/// Lowercase alphanumeric runs; `<mask>` stays one token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with(MASK) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(MASK.to_string());
            rest = &rest[MASK.len()..];
            continue;
        }
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        rest = &rest[c.len_utf8()..];
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Pluggable similarity between masked questions; scores lie in [0, 1].
pub trait SimilarityMetric: Send + Sync {
    fn score(&self, a: &MaskedQuestion, b: &MaskedQuestion) -> f64;
}

/// Σ min(count) / Σ max(count) over token multisets; two empty lists score 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct MultisetJaccard;

impl SimilarityMetric for MultisetJaccard {
    fn score(&self, a: &MaskedQuestion, b: &MaskedQuestion) -> f64 {
        let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for t in &a.tokens {
            counts.entry(t).or_default().0 += 1;
        }
        for t in &b.tokens {
            counts.entry(t).or_default().1 += 1;
        }
        let (inter, union) = counts
            .values()
            .fold((0, 0), |(i, u), &(x, y)| (i + x.min(y), u + x.max(y)));
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

pub fn similarity(a: &MaskedQuestion, b: &MaskedQuestion) -> f64 {
    MultisetJaccard.score(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub score: f64,
}

/// A KeyInst set with every question pre-masked against its own schema.
pub struct DemoPool {
    records: Vec<KeyInstRecord>,
    masked: Vec<MaskedQuestion>,
    metric: Box<dyn SimilarityMetric>,
}

impl DemoPool {
    pub fn new(records: Vec<KeyInstRecord>) -> Self {
        Self::with_metric(records, Box::new(MultisetJaccard))
    }

    pub fn with_metric(records: Vec<KeyInstRecord>, metric: Box<dyn SimilarityMetric>) -> Self {
        let masked = records
            .par_iter()
            .map(|r| mask_question(&r.question, &r.schema))
            .collect();
        Self {
            records,
            masked,
            metric,
        }
    }

    pub fn records(&self) -> &[KeyInstRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Top `m` by descending score, ties by ascending pool index. Records whose
    /// question equals `question` exactly are skipped.
    pub fn select(&self, question: &str, schema: &DatabaseSchema, m: usize) -> Vec<Selection> {
        if m == 0 {
            return Vec::new();
        }
        let target = mask_question(question, schema);
        let mut scored: Vec<Selection> = self
            .masked
            .par_iter()
            .enumerate()
            .filter(|(i, _)| self.records[*i].question != question)
            .map(|(index, mq)| Selection {
                index,
                score: self.metric.score(&target, mq),
            })
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
        scored.truncate(m);
        scored
    }

    pub fn select_records(&self, task: &TaskInstance, m: usize) -> Vec<KeyInstRecord> {
        self.select(&task.question, &task.schema, m)
            .into_iter()
            .map(|s| self.records[s.index].clone())
            .collect()
    }
}

pub fn select_demonstrations(
    task: &TaskInstance,
    pool: &[KeyInstRecord],
    m: usize,
) -> Vec<KeyInstRecord> {
    DemoPool::new(pool.to_vec()).select_records(task, m)
}
