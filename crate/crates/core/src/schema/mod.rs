//! Database schemas, Text-to-SQL task instances and schema rendering.

mod introspect;
mod simplify;
mod spider;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sql::{self, ParseError, StructuralType};

pub use simplify::{filter_schema_by_sql, rewrite_question_terms, TermAnnotation};
pub use spider::{load_spider_dataset, load_spider_tables, load_tasks_jsonl, TaskRecord};

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("format error{}: {message}", .record.map(|i| format!(" in record {i}")).unwrap_or_default())]
    Format {
        record: Option<usize>,
        message: String,
    },
    #[error("no database found for db_id(s): {}", .db_ids.join(", "))]
    MissingDatabase { db_ids: Vec<String> },
    #[error("unknown schema reference `{0}`")]
    UnknownReference(String),
    #[error("annotation spans {first:?} and {second:?} overlap")]
    Overlap {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("annotation span {0:?} is outside the question or not on a character boundary")]
    SpanOutOfBounds((usize, usize)),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Sqlite {
        path: PathBuf,
        source: rusqlite::Error,
    },
}

impl SchemaError {
    pub(crate) fn format(record: Option<usize>, message: impl Into<String>) -> Self {
        SchemaError::Format {
            record,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            name: name.into(),
            columns,
        }
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub(crate) fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// `table.column`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        Self {
            table: table.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// `column` references `references`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForeignKey {
    pub column: ColumnRef,
    pub references: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
struct RawSchema {
    db_id: String,
    tables: Vec<Table>,
    #[serde(default)]
    primary_keys: Vec<ColumnRef>,
    #[serde(default)]
    foreign_keys: Vec<ForeignKey>,
}

/// A validated database schema: at least one table, unique table and column
/// names (case-insensitive), and keys that point at existing columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct DatabaseSchema {
    db_id: String,
    tables: Vec<Table>,
    primary_keys: Vec<ColumnRef>,
    foreign_keys: Vec<ForeignKey>,
}

impl TryFrom<RawSchema> for DatabaseSchema {
    type Error = SchemaError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        DatabaseSchema::new(raw.db_id, raw.tables, raw.primary_keys, raw.foreign_keys)
    }
}

impl From<DatabaseSchema> for RawSchema {
    fn from(s: DatabaseSchema) -> Self {
        RawSchema {
            db_id: s.db_id,
            tables: s.tables,
            primary_keys: s.primary_keys,
            foreign_keys: s.foreign_keys,
        }
    }
}

impl DatabaseSchema {
    pub fn new(
        db_id: impl Into<String>,
        tables: Vec<Table>,
        primary_keys: Vec<ColumnRef>,
        foreign_keys: Vec<ForeignKey>,
    ) -> Result<Self, SchemaError> {
        let db_id = db_id.into();
        if tables.is_empty() {
            return Err(SchemaError::format(
                None,
                format!("schema `{db_id}` has no tables"),
            ));
        }
        let mut seen = HashSet::new();
        for table in &tables {
            if !seen.insert(table.name.to_lowercase()) {
                return Err(SchemaError::format(
                    None,
                    format!("schema `{db_id}` has duplicate table `{}`", table.name),
                ));
            }
            let mut cols = HashSet::new();
            for c in &table.columns {
                if !cols.insert(c.name.to_lowercase()) {
                    return Err(SchemaError::format(
                        None,
                        format!("table `{}` has duplicate column `{}`", table.name, c.name),
                    ));
                }
            }
        }
        let schema = Self {
            db_id,
            tables,
            primary_keys,
            foreign_keys,
        };
        let keys = schema.primary_keys.iter().chain(
            schema
                .foreign_keys
                .iter()
                .flat_map(|fk| [&fk.column, &fk.references]),
        );
        for key in keys {
            if schema.resolve(key).is_none() {
                return Err(SchemaError::format(
                    None,
                    format!(
                        "schema `{}` key references missing column `{key}`",
                        schema.db_id
                    ),
                ));
            }
        }
        Ok(schema)
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn primary_keys(&self) -> &[ColumnRef] {
        &self.primary_keys
    }

    pub fn foreign_keys(&self) -> &[ForeignKey] {
        &self.foreign_keys
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub(crate) fn table_index(&self, name: &str) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| t.name.eq_ignore_ascii_case(name))
    }

    fn resolve(&self, r: &ColumnRef) -> Option<(usize, usize)> {
        let ti = self.table_index(&r.table)?;
        let ci = self.tables[ti].column_index(&r.column)?;
        Some((ti, ci))
    }

    pub fn is_primary_key(&self, table: &str, column: &str) -> bool {
        self.primary_keys.iter().any(|pk| {
            pk.table.eq_ignore_ascii_case(table) && pk.column.eq_ignore_ascii_case(column)
        })
    }

    /// `CREATE TABLE` lines, one per table, then one `-- a.b = c.d` line per
    /// foreign key. Byte-deterministic.
    pub fn render_prompt(&self) -> String {
        let mut lines = Vec::with_capacity(self.tables.len() + self.foreign_keys.len());
        for table in &self.tables {
            let cols: Vec<String> = table
                .columns
                .iter()
                .map(|c| {
                    let mut s = quote_ident(&c.name);
                    if !c.ty.is_empty() {
                        s.push(' ');
                        s.push_str(&c.ty.to_ascii_uppercase());
                    }
                    if self.is_primary_key(&table.name, &c.name) {
                        s.push_str(" PRIMARY KEY");
                    }
                    s
                })
                .collect();
            lines.push(format!(
                "CREATE TABLE {} ({});",
                quote_ident(&table.name),
                cols.join(", ")
            ));
        }
        for fk in &self.foreign_keys {
            lines.push(format!("-- {} = {}", fk.references, fk.column));
        }
        lines.join("\n")
    }

    /// Reads the schema of an existing SQLite database.
    pub fn from_sqlite(db_id: impl Into<String>, path: &Path) -> Result<Self, SchemaError> {
        introspect::read_schema(db_id.into(), path)
    }
}

pub fn render_schema_prompt(schema: &DatabaseSchema) -> String {
    schema.render_prompt()
}

fn quote_ident(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_alphanumeric() || c == '_');
    if simple {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

/// Conventional fixture location: `<db_root>/<db_id>/<db_id>.sqlite`.
pub fn database_path(db_root: &Path, db_id: &str) -> PathBuf {
    db_root.join(db_id).join(format!("{db_id}.sqlite"))
}

/// One Text-to-SQL task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub task_id: String,
    pub schema: Arc<DatabaseSchema>,
    pub question: String,
    gold_sql: Option<String>,
    pub db_path: PathBuf,
    pub type_tag: Option<StructuralType>,
}

impl TaskInstance {
    /// Fails if `gold_sql` is present but does not parse.
    pub fn new(
        task_id: impl Into<String>,
        schema: Arc<DatabaseSchema>,
        question: impl Into<String>,
        gold_sql: Option<String>,
        db_path: PathBuf,
        type_tag: Option<StructuralType>,
    ) -> Result<Self, ParseError> {
        if let Some(gold) = &gold_sql {
            sql::parse_sql(gold)?;
        }
        Ok(Self {
            task_id: task_id.into(),
            schema,
            question: question.into(),
            gold_sql,
            db_path,
            type_tag,
        })
    }

    pub fn gold_sql(&self) -> Option<&str> {
        self.gold_sql.as_deref()
    }

    /// Dataset tag if present, else classified from the gold SQL, else `NONE`.
    pub fn structural_type(&self) -> StructuralType {
        self.type_tag
            .or_else(|| {
                self.gold_sql
                    .as_deref()
                    .and_then(|g| sql::classify_structural_type(g).ok())
            })
            .unwrap_or(StructuralType::None)
    }
}

/// Schemas by `db_id`.
#[derive(Debug, Clone, Default)]
pub struct SchemaCatalog {
    schemas: HashMap<String, Arc<DatabaseSchema>>,
}

impl SchemaCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, schema: DatabaseSchema) {
        self.schemas
            .insert(schema.db_id().to_string(), Arc::new(schema));
    }

    pub fn get(&self, db_id: &str) -> Option<Arc<DatabaseSchema>> {
        self.schemas.get(db_id).cloned()
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn from_tables_file(path: &Path) -> Result<Self, SchemaError> {
        let mut catalog = Self::new();
        for schema in load_spider_tables(path)? {
            catalog.insert(schema);
        }
        Ok(catalog)
    }

    /// Introspects every `<db_root>/<db_id>/<db_id>.sqlite` fixture.
    pub fn from_db_root(db_root: &Path) -> Result<Self, SchemaError> {
        let io_err = |source| SchemaError::Io {
            path: db_root.to_path_buf(),
            source,
        };
        let mut entries: Vec<_> = std::fs::read_dir(db_root)
            .map_err(io_err)?
            .collect::<Result<_, _>>()
            .map_err(io_err)?;
        entries.sort_by_key(|e| e.file_name());
        let mut catalog = Self::new();
        for entry in entries {
            let db_id = entry.file_name().to_string_lossy().into_owned();
            let path = database_path(db_root, &db_id);
            if path.is_file() {
                catalog.insert(DatabaseSchema::from_sqlite(db_id, &path)?);
            }
        }
        Ok(catalog)
    }
}
