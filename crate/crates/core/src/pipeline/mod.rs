//! KeyInst generation, SQL generation and batch runs with a resumable log.

mod config;
mod extract;

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{evaluate_dataset, EvalError, EvalReport, PredictionRecord};
use crate::keyinst::{load_keyinst_jsonl, parse_keyinst, KeyInst, KeyInstError, ANALYSIS_MARKER};
use crate::llm::{LlmError, TextGenerator};
use crate::prompt::{build_keyinst_icl_prompt, build_zero_shot_sql_prompt};
use crate::retrieval::DemoPool;
use crate::schema::{SchemaCatalog, TaskInstance};

pub use config::{ConfigError, KeyInstSource, PipelineConfig};
pub use extract::{extract_sql_from_response, NoSqlFound};

pub const RUN_LOG: &str = "run_log.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const REPORT: &str = "report.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("task {task_id}: {source}")]
    Provider {
        task_id: String,
        #[source]
        source: LlmError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    KeyInst(#[from] KeyInstError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn is_transport(&self) -> bool {
        matches!(self, PipelineError::Provider { source, .. } if source.is_transport())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Pre-supplied KeyInst file line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyInstFileLine {
    pub task_id: String,
    #[serde(flatten)]
    pub keyinst: KeyInst,
}

/// Where KeyInsts come from for a run.
pub enum KeyInstResources {
    Icl(DemoPool),
    File(HashMap<String, KeyInst>),
    None,
}

impl KeyInstResources {
    pub fn load(config: &PipelineConfig, catalog: &SchemaCatalog) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(match config.keyinst_source {
            KeyInstSource::Icl => {
                let path = config.pool_path.as_deref().expect("validated");
                KeyInstResources::Icl(DemoPool::new(load_keyinst_jsonl(path, catalog)?))
            }
            KeyInstSource::File => {
                let path = config.keyinst_path.as_deref().expect("validated");
                let file = File::open(path).map_err(io_err(path))?;
                let mut map = HashMap::new();
                for (i, line) in BufReader::new(file).lines().enumerate() {
                    let line = line.map_err(io_err(path))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: KeyInstFileLine =
                        serde_json::from_str(&line).map_err(|e| PipelineError::Format {
                            path: path.to_path_buf(),
                            message: format!("line {}: {e}", i + 1),
                        })?;
                    map.insert(rec.task_id, rec.keyinst);
                }
                KeyInstResources::File(map)
            }
            KeyInstSource::None => KeyInstResources::None,
        })
    }
}

pub struct Providers<'a> {
    pub generator: &'a dyn TextGenerator,
    pub sql: &'a dyn TextGenerator,
}

/// One run-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub keyinst: Option<KeyInst>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demo_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyinst_prompt_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyinst_response: Option<String>,
    pub sql_prompt_hash: String,
    pub sql_response: String,
    pub predicted_sql: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Obtains a KeyInst (per the configured source) and then the SQL.
pub fn run_pipeline(
    task: &TaskInstance,
    config: &PipelineConfig,
    resources: &KeyInstResources,
    providers: &Providers<'_>,
) -> Result<TaskResult, PipelineError> {
    let provider_err = |source| PipelineError::Provider {
        task_id: task.task_id.clone(),
        source,
    };
    let mut warnings = Vec::new();
    let mut demo_indices = Vec::new();
    let mut keyinst_prompt_hash = None;
    let mut keyinst_response = None;

    let keyinst = match resources {
        KeyInstResources::Icl(pool) => {
            let picked = pool.select(&task.question, &task.schema, config.m);
            demo_indices = picked.iter().map(|s| s.index).collect();
            let demos: Vec<_> = picked
                .iter()
                .map(|s| pool.records()[s.index].clone())
                .collect();
            match build_keyinst_icl_prompt(task, &demos) {
                Ok(prompt) => {
                    keyinst_prompt_hash = Some(prompt.hash());
                    let response = providers
                        .generator
                        .generate(&prompt, &config.generator_config)
                        .map_err(provider_err)?;
                    // the prompt ends with the analysis cue, so replies usually omit it
                    let text = if response
                        .to_ascii_lowercase()
                        .contains(&ANALYSIS_MARKER.to_ascii_lowercase())
                    {
                        response.clone()
                    } else {
                        format!("{ANALYSIS_MARKER} {response}")
                    };
                    keyinst_response = Some(response);
                    match parse_keyinst(&text) {
                        Ok(parsed) => Some(parsed.keyinst),
                        Err(e) => {
                            warnings
                                .push(format!("KeyInst not usable, continuing without it: {e}"));
                            None
                        }
                    }
                }
                Err(e) => {
                    warnings.push(format!("no demonstrations: {e}"));
                    None
                }
            }
        }
        KeyInstResources::File(map) => {
            let k = map.get(&task.task_id).cloned();
            if k.is_none() {
                warnings.push("no KeyInst for this task in the KeyInst file".to_string());
            }
            k
        }
        KeyInstResources::None => None,
    };
    for w in &warnings {
        log::warn!("task {}: {w}", task.task_id);
    }

    let prompt = build_zero_shot_sql_prompt(&task.schema, &task.question, keyinst.as_ref());
    let sql_response = providers
        .sql
        .generate(&prompt, &config.sql_config)
        .map_err(provider_err)?;
    let predicted_sql = match extract_sql_from_response(&sql_response) {
        Ok(sql) => Some(sql),
        Err(e) => {
            log::warn!("task {}: {e}", task.task_id);
            warnings.push(e.to_string());
            None
        }
    };
    Ok(TaskResult {
        task_id: task.task_id.clone(),
        keyinst,
        demo_indices,
        keyinst_prompt_hash,
        keyinst_response,
        sql_prompt_hash: prompt.hash(),
        sql_response,
        predicted_sql,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskFailure {
    pub task_id: String,
    pub message: String,
    pub transport: bool,
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub predictions: Vec<PredictionRecord>,
    pub report: Option<EvalReport>,
    pub failures: Vec<TaskFailure>,
    /// Tasks processed in this call (not taken from the log).
    pub executed: usize,
}

/// Reads completed results; a torn final line (crash mid-write) is cut off.
fn read_run_log(path: &Path) -> Result<HashMap<String, TaskResult>, PipelineError> {
    let mut done = HashMap::new();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(io_err(path)(e)),
    };
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if complete < text.len() {
        log::warn!("{}: dropping incomplete final record", path.display());
        let f = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(io_err(path))?;
        f.set_len(complete as u64).map_err(io_err(path))?;
    }
    for (i, line) in text[..complete].lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: TaskResult = serde_json::from_str(line).map_err(|e| PipelineError::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?;
        done.insert(r.task_id.clone(), r);
    }
    Ok(done)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("serializable"));
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Runs every task not already in `<output>/run_log.jsonl`, appending results
/// in input order, then writes `predictions.jsonl` and (when every task has
/// gold SQL) `report.json`. Tasks that fail are reported and retried on the
/// next call.
pub fn run_batch(
    tasks: &[TaskInstance],
    config: &PipelineConfig,
    resources: &KeyInstResources,
    providers: &Providers<'_>,
) -> Result<BatchOutcome, PipelineError> {
    config.validate()?;
    let mut ids = HashSet::new();
    for t in tasks {
        if !ids.insert(t.task_id.as_str()) {
            return Err(PipelineError::DuplicateTask(t.task_id.clone()));
        }
    }
    let out = &config.output_path;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let log_path = out.join(RUN_LOG);
    let mut done = read_run_log(&log_path)?;
    let pending: Vec<&TaskInstance> = tasks
        .iter()
        .filter(|t| !done.contains_key(&t.task_id))
        .collect();
    if !done.is_empty() {
        log::info!(
            "resuming: {} of {} tasks already in the run log",
            tasks.len() - pending.len(),
            tasks.len()
        );
    }

    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(io_err(&log_path))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool");
    let mut failures = Vec::new();
    for window in pending.chunks(config.workers) {
        let results: Vec<_> = pool.install(|| {
            window
                .par_iter()
                .map(|t| run_pipeline(t, config, resources, providers))
                .collect()
        });
        for (task, result) in window.iter().zip(results) {
            match result {
                Ok(r) => {
                    let line = serde_json::to_string(&r).expect("serializable");
                    writeln!(log, "{line}").map_err(io_err(&log_path))?;
                    log.flush().map_err(io_err(&log_path))?;
                    done.insert(r.task_id.clone(), r);
                }
                Err(e) => {
                    log::error!("{e}");
                    failures.push(TaskFailure {
                        task_id: task.task_id.clone(),
                        message: e.to_string(),
                        transport: e.is_transport(),
                    });
                }
            }
        }
    }

    let predictions: Vec<PredictionRecord> = tasks
        .iter()
        .map(|t| PredictionRecord {
            task_id: t.task_id.clone(),
            sql: done.get(&t.task_id).and_then(|r| r.predicted_sql.clone()),
        })
        .collect();
    write_jsonl(&out.join(PREDICTIONS), &predictions)?;

    let report = if !tasks.is_empty() && tasks.iter().all(|t| t.gold_sql().is_some()) {
        let sqls: Vec<Option<String>> = predictions.iter().map(|p| p.sql.clone()).collect();
        let report = evaluate_dataset(tasks, &sqls, &config.eval)?;
        let path = out.join(REPORT);
        let mut text = serde_json::to_string_pretty(&report).expect("serializable");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        Some(report)
    } else {
        None
    };

    Ok(BatchOutcome {
        predictions,
        report,
        failures,
        executed: pending.len(),
    })
}
