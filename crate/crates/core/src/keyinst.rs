//! The KeyInst value (question analysis plus keyword suggestion), its text
//! form, and KeyInst set records built from gold data.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::llm::{GenerationConfig, LlmError, TextGenerator};
use crate::prompt::build_analysis_prompt;
use crate::schema::{DatabaseSchema, SchemaCatalog, SchemaError, TaskInstance};
use crate::sql::{self, KeywordSuggestion, ParseError, PriorityClass, SqlKeyword};

pub const ANALYSIS_MARKER: &str = "Question analysis:";
pub const SUGGESTION_MARKER: &str = "Keyword suggestion:";
const SUGGESTION_PREFIX: &str = "consider using";
const SUGGESTION_SUFFIX: &str = "in the SQL";

#[derive(Debug, thiserror::Error)]
pub enum KeyInstError {
    #[error("question analysis is empty")]
    AnalysisEmpty,
    #[error("question analysis contains a code block")]
    CodeInAnalysis,
    #[error("question analysis contains a KeyInst marker")]
    MarkerInAnalysis,
    #[error("keyword suggestion is empty")]
    EmptySuggestion,
    #[error("no `{ANALYSIS_MARKER}` or `{SUGGESTION_MARKER}` marker found")]
    MissingMarkers,
    #[error("gold SQL does not parse: {0}")]
    GoldSql(#[from] ParseError),
    #[error("task {task_id} has no gold SQL")]
    MissingGold { task_id: String },
    #[error("analysis provider failed for question {question:?}: {source}")]
    Provider {
        question: String,
        #[source]
        source: LlmError,
    },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KeyInstError + '_ {
    move |source| KeyInstError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn contains_ignore_case(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

/// A question analysis (single line, whitespace-normalized) and a nonempty
/// keyword suggestion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "KeyInstFields", into = "KeyInstFields")]
pub struct KeyInst {
    analysis: String,
    suggestion: KeywordSuggestion,
}

#[derive(Serialize, Deserialize)]
struct KeyInstFields {
    analysis: String,
    keywords: KeywordSuggestion,
}

impl TryFrom<KeyInstFields> for KeyInst {
    type Error = KeyInstError;

    fn try_from(f: KeyInstFields) -> Result<Self, Self::Error> {
        KeyInst::new(f.analysis, f.keywords)
    }
}

impl From<KeyInst> for KeyInstFields {
    fn from(k: KeyInst) -> Self {
        Self {
            analysis: k.analysis,
            keywords: k.suggestion,
        }
    }
}

impl KeyInst {
    pub fn new(
        analysis: impl AsRef<str>,
        suggestion: KeywordSuggestion,
    ) -> Result<Self, KeyInstError> {
        let analysis = analysis
            .as_ref()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        if analysis.is_empty() {
            return Err(KeyInstError::AnalysisEmpty);
        }
        if analysis.contains("```") {
            return Err(KeyInstError::CodeInAnalysis);
        }
        if contains_ignore_case(&analysis, ANALYSIS_MARKER)
            || contains_ignore_case(&analysis, SUGGESTION_MARKER)
        {
            return Err(KeyInstError::MarkerInAnalysis);
        }
        if suggestion.is_empty() {
            return Err(KeyInstError::EmptySuggestion);
        }
        Ok(Self {
            analysis,
            suggestion,
        })
    }

    pub fn analysis(&self) -> &str {
        &self.analysis
    }

    pub fn suggestion(&self) -> &KeywordSuggestion {
        &self.suggestion
    }
}

/// Two lines: the analysis, then the suggested keywords in canonical order.
pub fn render_keyinst(k: &KeyInst) -> String {
    let keywords: Vec<&str> = k.suggestion.keywords().map(|kw| kw.as_str()).collect();
    format!(
        "{ANALYSIS_MARKER} {}\n{SUGGESTION_MARKER} {SUGGESTION_PREFIX} {} {SUGGESTION_SUFFIX}.",
        k.analysis,
        keywords.join(", ")
    )
}

/// Result of reading a KeyInst back from free text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedKeyInst {
    pub keyinst: KeyInst,
    /// Recognized keywords removed by the priority filter.
    pub dropped: usize,
    /// Listed items that are not keywords at all.
    pub unrecognized: usize,
}

fn find_ignore_case(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    // ASCII lowercasing keeps byte offsets aligned with the original.
    haystack.to_ascii_lowercase()[from..]
        .find(&needle.to_ascii_lowercase())
        .map(|i| i + from)
}

fn strip_prefix_ignore_case<'a>(s: &'a str, prefix: &str) -> &'a str {
    match s.get(..prefix.len()) {
        Some(head) if head.eq_ignore_ascii_case(prefix) => &s[prefix.len()..],
        _ => s,
    }
}

fn strip_suffix_ignore_case<'a>(s: &'a str, suffix: &str) -> &'a str {
    let cut = s.len().checked_sub(suffix.len());
    match cut.and_then(|c| s.get(c..).map(|tail| (c, tail))) {
        Some((c, tail)) if tail.eq_ignore_ascii_case(suffix) => &s[..c],
        _ => s,
    }
}

/// Reads `Question analysis:` (up to the suggestion marker) and the keyword
/// list on the `Keyword suggestion:` line. Markers match case-insensitively.
pub fn parse_keyinst(text: &str) -> Result<ParsedKeyInst, KeyInstError> {
    let analysis_at = find_ignore_case(text, ANALYSIS_MARKER, 0);
    let search_from = analysis_at.map_or(0, |i| i + ANALYSIS_MARKER.len());
    let suggestion_at = find_ignore_case(text, SUGGESTION_MARKER, search_from);
    if analysis_at.is_none() && suggestion_at.is_none() {
        return Err(KeyInstError::MissingMarkers);
    }

    let analysis = match analysis_at {
        Some(i) => &text[i + ANALYSIS_MARKER.len()..suggestion_at.unwrap_or(text.len())],
        None => "",
    };

    let mut recognized = Vec::new();
    let mut unrecognized = 0;
    if let Some(i) = suggestion_at {
        let line = text[i + SUGGESTION_MARKER.len()..]
            .lines()
            .next()
            .unwrap_or("");
        let line = line.trim().trim_end_matches('.').trim_end();
        let line = strip_suffix_ignore_case(line, SUGGESTION_SUFFIX);
        let line = strip_prefix_ignore_case(line.trim(), SUGGESTION_PREFIX);
        for item in line.split(',') {
            let item = item
                .trim()
                .trim_matches(|c| matches!(c, '`' | '"' | '\'' | '*' | '.'));
            if item.is_empty() {
                continue;
            }
            match SqlKeyword::from_str(item) {
                Ok(kw) => recognized.push(kw),
                Err(_) => unrecognized += 1,
            }
        }
    }

    let excluded = recognized
        .iter()
        .filter(|k| k.priority() == PriorityClass::Excluded)
        .count();
    if excluded > 0 {
        log::warn!("dropped {excluded} excluded keyword(s) from a keyword suggestion");
    }
    let suggestion = KeywordSuggestion::from_keywords(recognized.iter().copied());
    let distinct: std::collections::BTreeSet<_> = recognized.iter().collect();
    // duplicates are not counted as dropped
    let dropped = distinct.len() - suggestion.len();
    let keyinst = KeyInst::new(analysis, suggestion)?;
    Ok(ParsedKeyInst {
        keyinst,
        dropped,
        unrecognized,
    })
}

/// One KeyInst set entry; the suggestion is always derived from `gold_sql`.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyInstRecord {
    pub schema: Arc<DatabaseSchema>,
    pub question: String,
    pub keyinst: KeyInst,
    pub gold_sql: String,
}

impl KeyInstRecord {
    pub fn new(
        schema: Arc<DatabaseSchema>,
        question: impl Into<String>,
        analysis: &str,
        gold_sql: impl Into<String>,
    ) -> Result<Self, KeyInstError> {
        let gold_sql = gold_sql.into();
        let suggestion = sql::make_keyword_suggestion(&gold_sql)?;
        Ok(Self {
            schema,
            question: question.into(),
            keyinst: KeyInst::new(analysis, suggestion)?,
            gold_sql,
        })
    }
}

/// Strips an echoed `Analysis:` label and anything after the model starts
/// a new demonstration.
fn clean_analysis(raw: &str) -> &str {
    let mut text = raw.trim_start();
    text = strip_prefix_ignore_case(text, "Analysis:");
    if let Some(i) = find_ignore_case(text, "Please analyse the following", 0) {
        text = &text[..i];
    }
    if let Some(i) = find_ignore_case(text, "Natural language query:", 0) {
        text = &text[..i];
    }
    text.trim()
}

pub fn build_keyinst_record(
    schema: Arc<DatabaseSchema>,
    question: &str,
    gold_sql: &str,
    provider: &dyn TextGenerator,
    config: &GenerationConfig,
) -> Result<KeyInstRecord, KeyInstError> {
    sql::parse_sql(gold_sql)?;
    let prompt = build_analysis_prompt(question).map_err(|_| KeyInstError::Format {
        line: 0,
        message: "question is empty".into(),
    })?;
    let raw = provider
        .generate(&prompt, config)
        .map_err(|source| KeyInstError::Provider {
            question: question.to_string(),
            source,
        })?;
    KeyInstRecord::new(schema, question, clean_analysis(&raw), gold_sql)
}

/// Persisted form of a record: `{db_id, question, analysis, keywords, gold_sql}`,
/// optionally with the schema inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyInstLine {
    pub db_id: String,
    pub question: String,
    pub analysis: String,
    pub keywords: Vec<SqlKeyword>,
    pub gold_sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<DatabaseSchema>,
}

impl KeyInstLine {
    pub fn from_record(r: &KeyInstRecord, with_schema: bool) -> Self {
        Self {
            db_id: r.schema.db_id().to_string(),
            question: r.question.clone(),
            analysis: r.keyinst.analysis().to_string(),
            keywords: r.keyinst.suggestion().to_vec(),
            gold_sql: r.gold_sql.clone(),
            schema: with_schema.then(|| (*r.schema).clone()),
        }
    }
}

pub fn write_keyinst_line(
    out: &mut impl Write,
    r: &KeyInstRecord,
    with_schema: bool,
) -> std::io::Result<()> {
    let line = serde_json::to_string(&KeyInstLine::from_record(r, with_schema))
        .map_err(std::io::Error::other)?;
    writeln!(out, "{line}")
}

/// Loads a KeyInst set. Keyword lists are recomputed from the gold SQL; a
/// stored list that disagrees is logged and ignored.
pub fn load_keyinst_jsonl(
    path: &Path,
    catalog: &SchemaCatalog,
) -> Result<Vec<KeyInstRecord>, KeyInstError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| KeyInstError::Format {
            line: i + 1,
            message,
        };
        let raw: KeyInstLine = serde_json::from_str(&line).map_err(|e| format(e.to_string()))?;
        let schema = match raw.schema {
            Some(s) => Arc::new(s),
            None => catalog
                .get(&raw.db_id)
                .ok_or_else(|| SchemaError::MissingDatabase {
                    db_ids: vec![raw.db_id.clone()],
                })?,
        };
        let record = KeyInstRecord::new(schema, raw.question, &raw.analysis, raw.gold_sql)
            .map_err(|e| format(e.to_string()))?;
        if record.keyinst.suggestion().to_vec() != raw.keywords {
            log::warn!(
                "{}:{}: stored keywords differ from gold SQL; recomputed",
                path.display(),
                i + 1
            );
        }
        records.push(record);
    }
    Ok(records)
}

fn partial_paths(out: &Path) -> (PathBuf, PathBuf) {
    let mut partial = out.as_os_str().to_owned();
    partial.push(".partial");
    let mut checkpoint = out.as_os_str().to_owned();
    checkpoint.push(".checkpoint");
    (partial.into(), checkpoint.into())
}

/// Builds one record per task into `out`. Work goes to `out.partial` with the
/// number of completed inputs in `out.checkpoint`; a failed run leaves both
/// behind and the next call resumes from the checkpoint. On success the
/// partial file is renamed to `out` and the checkpoint removed.
pub fn build_keyinst_dataset(
    tasks: &[TaskInstance],
    provider: &dyn TextGenerator,
    config: &GenerationConfig,
    out: &Path,
    concurrency: usize,
    with_schema: bool,
) -> Result<usize, KeyInstError> {
    let (partial, checkpoint) = partial_paths(out);
    let done = match fs::read_to_string(&checkpoint) {
        Ok(s) if partial.is_file() => {
            s.trim()
                .parse::<usize>()
                .map_err(|e| KeyInstError::Format {
                    line: 1,
                    message: format!("{}: {e}", checkpoint.display()),
                })?
        }
        _ => 0,
    };
    if done > tasks.len() {
        return Err(KeyInstError::Format {
            line: 1,
            message: format!("checkpoint {done} exceeds {} inputs", tasks.len()),
        });
    }

    // keep exactly the checkpointed lines
    let kept: Vec<String> = if done > 0 {
        let text = fs::read_to_string(&partial).map_err(io_err(&partial))?;
        text.lines().take(done).map(str::to_string).collect()
    } else {
        Vec::new()
    };
    if kept.len() < done {
        return Err(KeyInstError::Format {
            line: kept.len() + 1,
            message: format!("{} is shorter than its checkpoint", partial.display()),
        });
    }
    let mut file = File::create(&partial).map_err(io_err(&partial))?;
    for line in &kept {
        writeln!(file, "{line}").map_err(io_err(&partial))?;
    }
    file.sync_data().map_err(io_err(&partial))?;
    if done > 0 {
        log::info!("resuming KeyInst build at input {done} of {}", tasks.len());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .expect("thread pool");
    let mut completed = done;
    for window in tasks[done..].chunks(concurrency.max(1)) {
        let results: Vec<Result<KeyInstRecord, KeyInstError>> = pool.install(|| {
            window
                .par_iter()
                .map(|task| {
                    let gold = task.gold_sql().ok_or_else(|| KeyInstError::MissingGold {
                        task_id: task.task_id.clone(),
                    })?;
                    build_keyinst_record(
                        task.schema.clone(),
                        &task.question,
                        gold,
                        provider,
                        config,
                    )
                })
                .collect()
        });
        for result in results {
            let record = result?;
            write_keyinst_line(&mut file, &record, with_schema).map_err(io_err(&partial))?;
            file.flush().map_err(io_err(&partial))?;
            completed += 1;
            fs::write(&checkpoint, completed.to_string()).map_err(io_err(&checkpoint))?;
        }
    }
    file.sync_all().map_err(io_err(&partial))?;
    drop(file);
    fs::rename(&partial, out).map_err(io_err(out))?;
    let _ = fs::remove_file(&checkpoint);
    Ok(completed)
}
