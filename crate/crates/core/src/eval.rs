//! Execution accuracy: run predicted and gold SQL on the task database and
//! compare result tables.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rusqlite::types::ValueRef;
use rusqlite::{Connection, ErrorCode, OpenFlags};
use serde::{Deserialize, Serialize};

use crate::schema::TaskInstance;
use crate::sql::{self, StructuralType};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const REAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Value {
    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Integer(_) => 1,
            Value::Real(_) => 2,
            Value::Text(_) => 3,
            Value::Blob(_) => 4,
        }
    }

    /// Total order used only to canonicalize row multisets.
    fn sort_cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Blob(a), Value::Blob(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    /// Same type and value; reals within a relative tolerance of 1e-6.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => {
                a == b || (a - b).abs() <= REAL_TOLERANCE * 1f64.max(a.abs()).max(b.abs())
            }
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Blob(a), Value::Blob(b)) => a == b,
            _ => false,
        }
    }
}

impl From<ValueRef<'_>> for Value {
    fn from(v: ValueRef<'_>) -> Self {
        match v {
            ValueRef::Null => Value::Null,
            ValueRef::Integer(i) => Value::Integer(i),
            ValueRef::Real(r) => Value::Real(r),
            ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Value::Blob(b.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: usize,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("{0}")]
    Sql(String),
    #[error("query exceeded {0:?}")]
    Timeout(Duration),
}

/// Runs one statement on a read-only connection.
pub fn execute_sql(db_path: &Path, sql: &str, timeout: Duration) -> Result<ResultTable, ExecError> {
    let err = |e: rusqlite::Error| ExecError::Sql(e.to_string());
    let conn = Connection::open_with_flags(
        db_path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )
    .map_err(err)?;
    let deadline = Instant::now() + timeout;
    conn.progress_handler(1000, Some(move || Instant::now() > deadline));
    let interrupted = |e: rusqlite::Error| match &e {
        rusqlite::Error::SqliteFailure(f, _) if f.code == ErrorCode::OperationInterrupted => {
            ExecError::Timeout(timeout)
        }
        _ => ExecError::Sql(e.to_string()),
    };

    let mut stmt = conn.prepare(sql).map_err(interrupted)?;
    let columns = stmt.column_count();
    let mut rows = Vec::new();
    let mut cursor = stmt.query([]).map_err(interrupted)?;
    while let Some(row) = cursor.next().map_err(interrupted)? {
        let values = (0..columns)
            .map(|i| row.get_ref(i).map(Value::from))
            .collect::<Result<Vec<_>, _>>()
            .map_err(interrupted)?;
        rows.push(values);
    }
    Ok(ResultTable { columns, rows })
}

fn rows_match(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y))
}

fn sort_rows(rows: &[Vec<Value>]) -> Vec<&Vec<Value>> {
    let mut sorted: Vec<&Vec<Value>> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.sort_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    });
    sorted
}

/// Perfect matching between rows under the tolerant equality (Kuhn's algorithm).
fn multiset_match(pred: &[Vec<Value>], gold: &[Vec<Value>]) -> bool {
    let n = gold.len();
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| (0..n).filter(|&j| rows_match(p, &gold[j])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];

    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }

    (0..pred.len()).all(|i| {
        let mut seen = vec![false; n];
        augment(i, &adj, &mut seen, &mut owner)
    })
}

/// Equal column counts and equal rows: positionally when `ordered`, as
/// multisets otherwise.
pub fn compare_results(pred: &ResultTable, gold: &ResultTable, ordered: bool) -> bool {
    if pred.columns != gold.columns || pred.rows.len() != gold.rows.len() {
        return false;
    }
    if ordered {
        return pred
            .rows
            .iter()
            .zip(&gold.rows)
            .all(|(a, b)| rows_match(a, b));
    }
    let (a, b) = (sort_rows(&pred.rows), sort_rows(&gold.rows));
    if a.iter().zip(&b).all(|(x, y)| rows_match(x, y)) {
        return true;
    }
    // sorting can misalign rows whose reals differ within tolerance
    let has_real = |rows: &[Vec<Value>]| rows.iter().flatten().any(|v| matches!(v, Value::Real(_)));
    has_real(&pred.rows) && has_real(&gold.rows) && multiset_match(&pred.rows, &gold.rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Match,
    Mismatch,
    PredError,
    GoldError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub task_id: String,
    pub correct: bool,
    pub reason: Reason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_error_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_error_text: Option<String>,
}

impl EvalOutcome {
    fn new(task_id: &str, reason: Reason) -> Self {
        Self {
            task_id: task_id.to_string(),
            correct: reason == Reason::Match,
            reason,
            pred_error_text: None,
            gold_error_text: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub timeout: Duration,
    /// Count gold-execution failures in the denominators.
    pub strict: bool,
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
            strict: false,
            workers: 4,
        }
    }
}

/// Scores one prediction; `None` stands for a response with no SQL in it.
pub fn evaluate_task(
    task: &TaskInstance,
    predicted: Option<&str>,
    timeout: Duration,
) -> EvalOutcome {
    let Some(gold_sql) = task.gold_sql() else {
        let mut o = EvalOutcome::new(&task.task_id, Reason::GoldError);
        o.gold_error_text = Some("task has no gold SQL".into());
        return o;
    };
    let gold = match execute_sql(&task.db_path, gold_sql, timeout) {
        Ok(t) => t,
        Err(e) => {
            let mut o = EvalOutcome::new(&task.task_id, Reason::GoldError);
            o.gold_error_text = Some(e.to_string());
            return o;
        }
    };
    let Some(predicted) = predicted else {
        let mut o = EvalOutcome::new(&task.task_id, Reason::PredError);
        o.pred_error_text = Some("no SQL found in response".into());
        return o;
    };
    let pred = match execute_sql(&task.db_path, predicted, timeout) {
        Ok(t) => t,
        Err(e @ ExecError::Timeout(_)) => {
            let mut o = EvalOutcome::new(&task.task_id, Reason::Timeout);
            o.pred_error_text = Some(e.to_string());
            return o;
        }
        Err(e) => {
            let mut o = EvalOutcome::new(&task.task_id, Reason::PredError);
            o.pred_error_text = Some(e.to_string());
            return o;
        }
    };
    let ordered = sql::parse_sql(gold_sql).is_ok_and(|q| q.has_top_level_order_by());
    let reason = if compare_results(&pred, &gold, ordered) {
        Reason::Match
    } else {
        Reason::Mismatch
    };
    EvalOutcome::new(&task.task_id, reason)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub n: usize,
    pub correct: usize,
    pub ex_percent: f64,
}

impl Score {
    pub fn new(n: usize, correct: usize) -> Self {
        let ex_percent = if n == 0 {
            0.0
        } else {
            (1000.0 * correct as f64 / n as f64).round() / 10.0
        };
        Self {
            n,
            correct,
            ex_percent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_type: BTreeMap<StructuralType, Score>,
    pub overall: Score,
    pub outcomes: Vec<EvalOutcome>,
}

impl EvalReport {
    /// Aggregates outcomes (paired with each task's type) into per-type and
    /// overall scores.
    pub fn from_outcomes(
        outcomes: Vec<EvalOutcome>,
        types: &[StructuralType],
        strict: bool,
    ) -> Self {
        let mut counts: BTreeMap<StructuralType, (usize, usize)> = BTreeMap::new();
        for (o, t) in outcomes.iter().zip(types) {
            let entry = counts.entry(*t).or_default();
            if o.reason == Reason::GoldError && !strict {
                continue;
            }
            entry.0 += 1;
            entry.1 += o.correct as usize;
        }
        let per_type: BTreeMap<_, _> = counts
            .into_iter()
            .map(|(t, (n, c))| (t, Score::new(n, c)))
            .collect();
        let n = per_type.values().map(|s| s.n).sum();
        let correct = per_type.values().map(|s| s.correct).sum();
        Self {
            per_type,
            overall: Score::new(n, correct),
            outcomes,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{tasks} tasks but {predictions} predictions")]
    LengthMismatch { tasks: usize, predictions: usize },
}

/// Evaluates every task in parallel; outcomes keep task order.
pub fn evaluate_dataset(
    tasks: &[TaskInstance],
    predictions: &[Option<String>],
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    if tasks.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            tasks: tasks.len(),
            predictions: predictions.len(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<EvalOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .zip(predictions.par_iter())
            .map(|(t, p)| evaluate_task(t, p.as_deref(), options.timeout))
            .collect()
    });
    let types: Vec<StructuralType> = tasks.iter().map(TaskInstance::structural_type).collect();
    Ok(EvalReport::from_outcomes(outcomes, &types, options.strict))
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub task_id: String,
    pub sql: Option<String>,
}
