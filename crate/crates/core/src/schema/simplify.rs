//! Schema filtering by gold SQL and span-driven question rewriting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ColumnRef, DatabaseSchema, ForeignKey, SchemaError, Table};
use crate::sql::ast::*;
use crate::sql::parse_sql;

struct Source {
    key: String,
    /// Index into the schema's tables; `None` for derived tables.
    table: Option<usize>,
}

struct Scope {
    sources: Vec<Source>,
    aliases: Vec<String>,
}

struct Collector<'a> {
    schema: &'a DatabaseSchema,
    tables: BTreeSet<usize>,
    columns: BTreeSet<(usize, usize)>,
    scopes: Vec<Scope>,
}

impl<'a> Collector<'a> {
    fn unknown(name: impl Into<String>) -> SchemaError {
        SchemaError::UnknownReference(name.into())
    }

    fn query(&mut self, q: &Query) -> Result<(), SchemaError> {
        self.set_expr(&q.body, Some(q))
    }

    /// `tail` carries the ORDER BY / LIMIT, resolved in the leftmost SELECT's scope.
    fn set_expr(&mut self, s: &SetExpr, tail: Option<&Query>) -> Result<(), SchemaError> {
        match s {
            SetExpr::Select(select) => self.select(select, tail),
            SetExpr::SetOp { left, right, .. } => {
                self.set_expr(left, tail)?;
                self.set_expr(right, None)
            }
            SetExpr::Nested(q) => {
                self.query(q)?;
                if let Some(tail) = tail {
                    // the outer ORDER BY refers to the nested query's output
                    let mut leftmost = &q.body;
                    loop {
                        match leftmost {
                            SetExpr::SetOp { left, .. } => leftmost = left,
                            SetExpr::Nested(inner) => leftmost = &inner.body,
                            SetExpr::Select(select) => {
                                return self.select_tail_only(select, tail);
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn factor_source(&mut self, f: &TableFactor) -> Result<Source, SchemaError> {
        match f {
            TableFactor::Table { name, alias } => {
                let idx = self
                    .schema
                    .table_index(name)
                    .ok_or_else(|| Self::unknown(name))?;
                self.tables.insert(idx);
                Ok(Source {
                    key: alias.as_ref().map_or(name, |a| &a.name).to_lowercase(),
                    table: Some(idx),
                })
            }
            TableFactor::Derived { subquery, alias } => {
                self.query(subquery)?;
                Ok(Source {
                    key: alias
                        .as_ref()
                        .map(|a| a.name.to_lowercase())
                        .unwrap_or_default(),
                    table: None,
                })
            }
        }
    }

    fn push_scope(&mut self, s: &Select) -> Result<(), SchemaError> {
        let mut sources = Vec::new();
        if let Some(from) = &s.from {
            sources.push(self.factor_source(&from.first)?);
            for join in &from.joins {
                sources.push(self.factor_source(&join.factor)?);
            }
        }
        let aliases = s
            .projection
            .iter()
            .filter_map(|item| match item {
                SelectItem::Expr { alias: Some(a), .. } => Some(a.name.to_lowercase()),
                _ => None,
            })
            .collect();
        self.scopes.push(Scope { sources, aliases });
        Ok(())
    }

    fn select(&mut self, s: &Select, tail: Option<&Query>) -> Result<(), SchemaError> {
        self.push_scope(s)?;
        if let Some(from) = &s.from {
            for join in &from.joins {
                match &join.constraint {
                    JoinConstraint::None => {}
                    JoinConstraint::On(e) => self.expr(e)?,
                    JoinConstraint::Using(cols) => {
                        for c in cols {
                            self.column(None, c)?;
                        }
                    }
                }
            }
        }
        for item in &s.projection {
            match item {
                SelectItem::Wildcard => {
                    let tables: Vec<usize> = self
                        .scopes
                        .last()
                        .map(|sc| sc.sources.iter().filter_map(|s| s.table).collect())
                        .unwrap_or_default();
                    for t in tables {
                        self.mark_all(t);
                    }
                }
                SelectItem::QualifiedWildcard(t) => match self.lookup_source(t) {
                    Some(Some(idx)) => self.mark_all(idx),
                    Some(None) => {}
                    None => return Err(Self::unknown(t)),
                },
                SelectItem::Expr { expr, .. } => self.expr(expr)?,
            }
        }
        if let Some(e) = &s.selection {
            self.expr(e)?;
        }
        for e in &s.group_by {
            self.expr(e)?;
        }
        if let Some(e) = &s.having {
            self.expr(e)?;
        }
        if let Some(tail) = tail {
            self.tail(tail)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn select_tail_only(&mut self, s: &Select, tail: &Query) -> Result<(), SchemaError> {
        self.push_scope(s)?;
        self.tail(tail)?;
        self.scopes.pop();
        Ok(())
    }

    fn tail(&mut self, q: &Query) -> Result<(), SchemaError> {
        for item in &q.order_by {
            self.expr(&item.expr)?;
        }
        if let Some(limit) = &q.limit {
            self.expr(&limit.count)?;
            if let Some(o) = &limit.offset {
                self.expr(o)?;
            }
        }
        Ok(())
    }

    fn mark_all(&mut self, table: usize) {
        for c in 0..self.schema.tables[table].columns.len() {
            self.columns.insert((table, c));
        }
    }

    /// `Some(Some(i))` for a base table, `Some(None)` for a derived one.
    fn lookup_source(&self, key: &str) -> Option<Option<usize>> {
        let key = key.to_lowercase();
        self.scopes
            .iter()
            .rev()
            .flat_map(|sc| sc.sources.iter())
            .find(|s| s.key == key)
            .map(|s| s.table)
    }

    fn column(&mut self, table: Option<&str>, name: &str) -> Result<(), SchemaError> {
        if let Some(t) = table {
            return match self.lookup_source(t) {
                Some(Some(idx)) => {
                    let table = &self.schema.tables[idx];
                    let ci = table
                        .column_index(name)
                        .ok_or_else(|| Self::unknown(format!("{}.{name}", table.name)))?;
                    self.columns.insert((idx, ci));
                    Ok(())
                }
                Some(None) => Ok(()),
                None => Err(Self::unknown(t)),
            };
        }
        let lower = name.to_lowercase();
        for scope in self.scopes.iter().rev() {
            let hit = scope.sources.iter().find_map(|s| {
                let idx = s.table?;
                self.schema.tables[idx]
                    .column_index(name)
                    .map(|ci| (idx, ci))
            });
            if let Some(hit) = hit {
                self.columns.insert(hit);
                return Ok(());
            }
            if scope.aliases.contains(&lower) || scope.sources.iter().any(|s| s.table.is_none()) {
                return Ok(());
            }
        }
        Err(Self::unknown(name))
    }

    fn expr(&mut self, e: &Expr) -> Result<(), SchemaError> {
        match e {
            Expr::Column { table, name } => self.column(table.as_deref(), name),
            Expr::Literal(_) => Ok(()),
            Expr::Unary { expr, .. } | Expr::Nested(expr) | Expr::Cast { expr, .. } => {
                self.expr(expr)
            }
            Expr::Binary { left, right, .. } | Expr::Is { left, right, .. } => {
                self.expr(left)?;
                self.expr(right)
            }
            Expr::Like { expr, pattern, .. } => {
                self.expr(expr)?;
                self.expr(pattern)
            }
            Expr::Between {
                expr, low, high, ..
            } => {
                self.expr(expr)?;
                self.expr(low)?;
                self.expr(high)
            }
            Expr::InList { expr, list, .. } => {
                self.expr(expr)?;
                list.iter().try_for_each(|e| self.expr(e))
            }
            Expr::InSubquery { expr, subquery, .. } => {
                self.expr(expr)?;
                self.query(subquery)
            }
            Expr::Exists { subquery, .. } | Expr::Subquery(subquery) => self.query(subquery),
            Expr::Function { args, .. } => match args {
                FunctionArgs::Star => Ok(()),
                FunctionArgs::List { args, .. } => args.iter().try_for_each(|e| self.expr(e)),
            },
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                if let Some(op) = operand {
                    self.expr(op)?;
                }
                for (c, r) in branches {
                    self.expr(c)?;
                    self.expr(r)?;
                }
                if let Some(e) = else_result {
                    self.expr(e)?;
                }
                Ok(())
            }
            Expr::Tuple(items) => items.iter().try_for_each(|e| self.expr(e)),
        }
    }
}

/// Keeps exactly the tables referenced by `gold_sql`; within each, the
/// referenced columns plus the table's primary key. Schema order is preserved.
pub fn filter_schema_by_sql(
    schema: &DatabaseSchema,
    gold_sql: &str,
) -> Result<DatabaseSchema, SchemaError> {
    let query = parse_sql(gold_sql)?;
    let mut c = Collector {
        schema,
        tables: BTreeSet::new(),
        columns: BTreeSet::new(),
        scopes: Vec::new(),
    };
    c.query(&query)?;

    let mut tables = Vec::new();
    let mut kept: BTreeSet<ColumnRef> = BTreeSet::new();
    for &ti in &c.tables {
        let table = &schema.tables[ti];
        let columns: Vec<_> = table
            .columns
            .iter()
            .enumerate()
            .filter(|(ci, col)| {
                c.columns.contains(&(ti, *ci)) || schema.is_primary_key(&table.name, &col.name)
            })
            .map(|(_, col)| col.clone())
            .collect();
        for col in &columns {
            kept.insert(ColumnRef::new(&table.name, &col.name));
        }
        tables.push(Table::new(&table.name, columns));
    }
    let canonical = |r: &ColumnRef| -> Option<ColumnRef> {
        let (ti, ci) = schema.resolve(r)?;
        Some(ColumnRef::new(
            &schema.tables[ti].name,
            &schema.tables[ti].columns[ci].name,
        ))
    };
    let is_kept = |r: &ColumnRef| canonical(r).is_some_and(|r| kept.contains(&r));
    let primary_keys = schema
        .primary_keys
        .iter()
        .filter(|r| is_kept(r))
        .cloned()
        .collect();
    let foreign_keys: Vec<ForeignKey> = schema
        .foreign_keys
        .iter()
        .filter(|fk| is_kept(&fk.column) && is_kept(&fk.references))
        .cloned()
        .collect();
    DatabaseSchema::new(schema.db_id.clone(), tables, primary_keys, foreign_keys)
}

/// Byte span `[start, end)` of the question to be replaced by `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermAnnotation {
    pub start: usize,
    pub end: usize,
    pub target: ColumnRef,
}

impl TermAnnotation {
    pub fn new(start: usize, end: usize, target: ColumnRef) -> Self {
        Self { start, end, target }
    }
}

/// Replaces each annotated span with `table.column`.
pub fn rewrite_question_terms(
    question: &str,
    annotations: &[TermAnnotation],
) -> Result<String, SchemaError> {
    let mut spans: Vec<&TermAnnotation> = annotations.iter().collect();
    spans.sort_by_key(|a| (a.start, a.end));
    for a in &spans {
        let ok = a.start < a.end
            && a.end <= question.len()
            && question.is_char_boundary(a.start)
            && question.is_char_boundary(a.end);
        if !ok {
            return Err(SchemaError::SpanOutOfBounds((a.start, a.end)));
        }
    }
    for pair in spans.windows(2) {
        if pair[0].end > pair[1].start {
            return Err(SchemaError::Overlap {
                first: (pair[0].start, pair[0].end),
                second: (pair[1].start, pair[1].end),
            });
        }
    }
    let mut out = question.to_string();
    for a in spans.iter().rev() {
        out.replace_range(a.start..a.end, &a.target.to_string());
    }
    Ok(out)
}
