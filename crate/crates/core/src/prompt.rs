//! Prompt construction: question analysis, KeyInst in-context learning,
//! zero-shot SQL, and appending a KeyInst to an existing prompt.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::keyinst::{render_keyinst, KeyInst, KeyInstRecord, ANALYSIS_MARKER};
use crate::schema::{DatabaseSchema, TaskInstance};

const ANALYSIS_DEMOS: &str = include_str!("../templates/analysis_demos.txt");
const ANALYSIS_INSTRUCTION: &str = "Please analyse the following natural language query.";

pub const ICL_INSTRUCTION: &str =
    "Each example below gives a database schema and a natural language \
question, followed by an analysis of the question and the SQL keywords the answer should use. \
Complete the analysis and keyword suggestion for the last example in the same format.";
pub const ANSWER_CUE: &str = "Answer with a single SQL query only.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub role: Role,
    pub content: String,
}

impl Segment {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("a prompt needs at least one user segment")]
    NoUserSegment,
    #[error("the in-context prompt needs at least one demonstration")]
    EmptyDemos,
    #[error("question is empty")]
    EmptyQuestion,
}

/// Ordered chat segments; at least one is a user segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    segments: Vec<Segment>,
}

impl Prompt {
    pub fn new(segments: Vec<Segment>) -> Result<Self, PromptError> {
        if !segments.iter().any(|s| s.role == Role::User) {
            return Err(PromptError::NoUserSegment);
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment contents joined by a blank line.
    pub fn render(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.content.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    /// SHA-256 of the rendered text, lowercase hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}

/// The seven packaged question-analysis demonstrations.
pub fn analysis_demonstrations() -> impl Iterator<Item = &'static str> {
    ANALYSIS_DEMOS.trim_end().split("\n\n")
}

pub fn build_analysis_prompt(question: &str) -> Result<Prompt, PromptError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    let mut segments: Vec<Segment> = analysis_demonstrations().map(Segment::user).collect();
    segments.push(Segment::user(format!(
        "{ANALYSIS_INSTRUCTION}\nNatural language query: {question}\nAnalysis:"
    )));
    Prompt::new(segments)
}

fn schema_question(schema: &DatabaseSchema, question: &str) -> String {
    format!("{}\nQuestion: {}", schema.render_prompt(), question.trim())
}

/// Demonstrations in the given order, then the task with an open
/// `Question analysis:` cue. Gold SQL is never included.
pub fn build_keyinst_icl_prompt(
    task: &TaskInstance,
    demos: &[KeyInstRecord],
) -> Result<Prompt, PromptError> {
    if demos.is_empty() {
        return Err(PromptError::EmptyDemos);
    }
    let mut segments = vec![Segment::system(ICL_INSTRUCTION)];
    for demo in demos {
        segments.push(Segment::user(format!(
            "{}\n{}",
            schema_question(&demo.schema, &demo.question),
            render_keyinst(&demo.keyinst)
        )));
    }
    segments.push(Segment::user(format!(
        "{}\n{ANALYSIS_MARKER}",
        schema_question(&task.schema, &task.question)
    )));
    Prompt::new(segments)
}

pub fn build_zero_shot_sql_prompt(
    schema: &DatabaseSchema,
    question: &str,
    keyinst: Option<&KeyInst>,
) -> Prompt {
    let mut segments = vec![
        Segment::user(schema.render_prompt()),
        Segment::user(format!("Question: {}", question.trim())),
    ];
    if let Some(k) = keyinst {
        segments.push(Segment::user(render_keyinst(k)));
    }
    segments.push(Segment::user(ANSWER_CUE));
    Prompt { segments }
}

/// Adds the KeyInst as a new final user segment; earlier segments are untouched.
pub fn append_keyinst(base: &Prompt, keyinst: &KeyInst) -> Prompt {
    let existing = base
        .segments
        .iter()
        .filter(|s| s.content.starts_with(ANALYSIS_MARKER))
        .count();
    if existing > 0 {
        log::warn!("prompt already carries {existing} KeyInst segment(s); appending another");
    }
    let mut segments = base.segments.clone();
    segments.push(Segment::user(render_keyinst(keyinst)));
    Prompt { segments }
}
