//! A small end-to-end scenario: fixture databases, a KeyInst pool built from
//! most fixture tasks, and one held-out task per structural type.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use keyinst::keyinst::{write_keyinst_line, KeyInstRecord};
use keyinst::llm::LlmError;
use keyinst::pipeline::{KeyInstSource, PipelineConfig};
use keyinst::prompt::Prompt;
use keyinst::schema::{SchemaCatalog, TaskInstance};

use super::{fixtures, oracle};

pub struct Scenario {
    pub dir: tempfile::TempDir,
    pub root: PathBuf,
    pub catalog: SchemaCatalog,
    /// Held-out tasks; by default `f00`, `f05`, ..., `f30`, one per structural type.
    pub tasks: Vec<TaskInstance>,
    pub pool_path: PathBuf,
    pub gold_by_question: HashMap<String, String>,
}

pub fn scenario() -> Scenario {
    scenario_with(|i| i % 5 == 0)
}

/// Fixture tasks selected by `held_out` become the tasks; the rest form the pool.
pub fn scenario_with(held_out: impl Fn(usize) -> bool) -> Scenario {
    let dir = tempfile::tempdir().unwrap();
    let root = fixtures::build_databases(&dir.path().join("db"));
    let catalog = fixtures::catalog(&root);
    let all = fixtures::tasks(&root);
    let pool_path = dir.path().join("pool.jsonl");
    let mut out = BufWriter::new(File::create(&pool_path).unwrap());
    for (i, t) in all.iter().enumerate().filter(|(i, _)| !held_out(*i)) {
        let r = KeyInstRecord::new(
            t.schema.clone(),
            &t.question,
            &format!("Pool analysis {i}."),
            t.gold_sql().unwrap(),
        )
        .unwrap();
        write_keyinst_line(&mut out, &r, false).unwrap();
    }
    drop(out);
    let gold_by_question = all
        .iter()
        .map(|t| (t.question.clone(), t.gold_sql().unwrap().to_string()))
        .collect();
    let tasks = all
        .into_iter()
        .enumerate()
        .filter(|(i, _)| held_out(*i))
        .map(|(_, t)| t)
        .collect();
    Scenario {
        dir,
        root,
        catalog,
        tasks,
        pool_path,
        gold_by_question,
    }
}

impl Scenario {
    pub fn config(&self, out: &Path) -> PipelineConfig {
        PipelineConfig {
            keyinst_source: KeyInstSource::Icl,
            pool_path: Some(self.pool_path.clone()),
            output_path: out.to_path_buf(),
            ..Default::default()
        }
    }

    /// A generator that answers ICL prompts with the oracle's keywords for the
    /// question in the final segment.
    pub fn keyinst_reply(&self, p: &Prompt) -> Result<String, LlmError> {
        let q = question_of(p);
        let gold = &self.gold_by_question[&q];
        Ok(format!(
            " The question is: {q}\nKeyword suggestion: consider using {} in the SQL.",
            oracle::suggestion(gold).join(", ")
        ))
    }

    /// A SQL model that returns the gold query in a fenced block.
    pub fn sql_reply(&self, p: &Prompt) -> Result<String, LlmError> {
        let q = question_of(p);
        Ok(format!(
            "Here you go:\n```sql\n{}\n```",
            self.gold_by_question[&q]
        ))
    }
}

/// The question text of the task a prompt is about (last `Question:` line).
pub fn question_of(p: &Prompt) -> String {
    p.render()
        .lines()
        .filter_map(|l| l.strip_prefix("Question: "))
        .next_back()
        .expect("prompt names a question")
        .to_string()
}
