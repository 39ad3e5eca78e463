//! Spider-format ingestion (`tables.json` plus example arrays) and the JSON
//! Lines task format.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    database_path, Column, ColumnRef, DatabaseSchema, ForeignKey, SchemaCatalog, SchemaError,
    Table, TaskInstance,
};
use crate::sql::StructuralType;

fn read(path: &Path) -> Result<String, SchemaError> {
    fs::read_to_string(path).map_err(|source| SchemaError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Deserialize)]
struct SpiderTables {
    db_id: String,
    #[serde(default)]
    table_names_original: Option<Vec<String>>,
    #[serde(default)]
    table_names: Option<Vec<String>>,
    #[serde(default)]
    column_names_original: Option<Vec<(i64, String)>>,
    #[serde(default)]
    column_names: Option<Vec<(i64, String)>>,
    #[serde(default)]
    column_types: Vec<String>,
    #[serde(default)]
    primary_keys: Vec<Value>,
    #[serde(default)]
    foreign_keys: Vec<(usize, usize)>,
}

impl SpiderTables {
    fn into_schema(self, index: usize) -> Result<DatabaseSchema, SchemaError> {
        let bad = |msg: String| SchemaError::format(Some(index), msg);
        let table_names = self
            .table_names_original
            .or(self.table_names)
            .ok_or_else(|| bad("missing table_names_original".into()))?;
        let columns = self
            .column_names_original
            .or(self.column_names)
            .ok_or_else(|| bad("missing column_names_original".into()))?;

        let mut tables: Vec<Table> = table_names
            .iter()
            .map(|n| Table::new(n, Vec::new()))
            .collect();
        // Spider column ids index `column_names_original`, including the leading `*`.
        let mut col_refs: Vec<Option<ColumnRef>> = Vec::with_capacity(columns.len());
        for (ci, (ti, name)) in columns.iter().enumerate() {
            if *ti < 0 {
                col_refs.push(None);
                continue;
            }
            let table = tables
                .get_mut(*ti as usize)
                .ok_or_else(|| bad(format!("column `{name}` refers to missing table {ti}")))?;
            let ty = self.column_types.get(ci).cloned().unwrap_or_default();
            table.columns.push(Column::new(name, ty));
            col_refs.push(Some(ColumnRef::new(&table.name, name)));
        }
        let col = |id: usize| -> Result<ColumnRef, SchemaError> {
            col_refs
                .get(id)
                .cloned()
                .flatten()
                .ok_or_else(|| bad(format!("key refers to missing column id {id}")))
        };

        let mut primary_keys = Vec::new();
        for pk in &self.primary_keys {
            // composite keys appear as nested arrays in newer releases
            let ids: Vec<u64> = match pk {
                Value::Number(n) => n.as_u64().into_iter().collect(),
                Value::Array(items) => items.iter().filter_map(Value::as_u64).collect(),
                _ => return Err(bad(format!("unrecognized primary key entry {pk}"))),
            };
            for id in ids {
                primary_keys.push(col(id as usize)?);
            }
        }
        let foreign_keys = self
            .foreign_keys
            .iter()
            .map(|&(from, to)| {
                Ok(ForeignKey {
                    column: col(from)?,
                    references: col(to)?,
                })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;

        DatabaseSchema::new(self.db_id, tables, primary_keys, foreign_keys).map_err(|e| match e {
            SchemaError::Format { message, .. } => SchemaError::format(Some(index), message),
            other => other,
        })
    }
}

/// Parses a Spider `tables.json` file.
pub fn load_spider_tables(path: &Path) -> Result<Vec<DatabaseSchema>, SchemaError> {
    let entries: Vec<Value> = serde_json::from_str(&read(path)?)
        .map_err(|e| SchemaError::format(None, format!("{}: {e}", path.display())))?;
    entries
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let raw: SpiderTables = serde_json::from_value(v)
                .map_err(|e| SchemaError::format(Some(i), e.to_string()))?;
            raw.into_schema(i)
        })
        .collect()
}

#[derive(Deserialize)]
struct SpiderExample {
    db_id: String,
    question: String,
    query: String,
}

/// Loads a Spider split: one task per example, schema resolved by `db_id`,
/// database at `db_root/<db_id>/<db_id>.sqlite`.
pub fn load_spider_dataset(
    tables_file: &Path,
    examples_file: &Path,
    db_root: &Path,
) -> Result<Vec<TaskInstance>, SchemaError> {
    let schemas: HashMap<String, Arc<DatabaseSchema>> = load_spider_tables(tables_file)?
        .into_iter()
        .map(|s| (s.db_id().to_string(), Arc::new(s)))
        .collect();
    let values: Vec<Value> = serde_json::from_str(&read(examples_file)?)
        .map_err(|e| SchemaError::format(None, format!("{}: {e}", examples_file.display())))?;
    let examples = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value::<SpiderExample>(v)
                .map_err(|e| SchemaError::format(Some(i), e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let missing: BTreeSet<String> = examples
        .iter()
        .filter(|ex| {
            !schemas.contains_key(&ex.db_id) || !database_path(db_root, &ex.db_id).is_file()
        })
        .map(|ex| ex.db_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(SchemaError::MissingDatabase {
            db_ids: missing.into_iter().collect(),
        });
    }

    examples
        .into_iter()
        .enumerate()
        .map(|(i, ex)| {
            TaskInstance::new(
                i.to_string(),
                schemas[&ex.db_id].clone(),
                ex.question,
                Some(ex.query),
                database_path(db_root, &ex.db_id),
                None,
            )
            .map_err(|e| SchemaError::format(Some(i), e.to_string()))
        })
        .collect()
}

/// One line of a task file: `{db_id, question, gold_sql, type_tag}`, with an
/// optional explicit `task_id` and inline `schema`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    pub db_id: String,
    pub question: String,
    #[serde(default, alias = "query", skip_serializing_if = "Option::is_none")]
    pub gold_sql: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_tag: Option<StructuralType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<DatabaseSchema>,
}

impl TaskRecord {
    pub fn from_task(task: &TaskInstance, with_schema: bool) -> Self {
        Self {
            task_id: Some(task.task_id.clone()),
            db_id: task.schema.db_id().to_string(),
            question: task.question.clone(),
            gold_sql: task.gold_sql().map(str::to_string),
            type_tag: task.type_tag,
            schema: with_schema.then(|| (*task.schema).clone()),
        }
    }

    /// Resolves the schema (inline, catalog, then database introspection).
    pub fn into_task(
        self,
        index: usize,
        catalog: &SchemaCatalog,
        db_root: &Path,
    ) -> Result<TaskInstance, SchemaError> {
        let db_path = database_path(db_root, &self.db_id);
        let schema = match self.schema {
            Some(s) => Arc::new(s),
            None => match catalog.get(&self.db_id) {
                Some(s) => s,
                None if db_path.is_file() => {
                    Arc::new(DatabaseSchema::from_sqlite(self.db_id.clone(), &db_path)?)
                }
                None => {
                    return Err(SchemaError::MissingDatabase {
                        db_ids: vec![self.db_id],
                    })
                }
            },
        };
        TaskInstance::new(
            self.task_id.unwrap_or_else(|| index.to_string()),
            schema,
            self.question,
            self.gold_sql,
            db_path,
            self.type_tag,
        )
        .map_err(|e| SchemaError::format(Some(index), e.to_string()))
    }
}

/// Reads a JSON Lines task file. Blank lines are skipped.
pub fn load_tasks_jsonl(
    path: &Path,
    catalog: &SchemaCatalog,
    db_root: &Path,
) -> Result<Vec<TaskInstance>, SchemaError> {
    let text = read(path)?;
    let mut tasks = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let record: TaskRecord =
            serde_json::from_str(line).map_err(|e| SchemaError::format(Some(i), e.to_string()))?;
        tasks.push(record.into_task(i, catalog, db_root)?);
    }
    Ok(tasks)
}
