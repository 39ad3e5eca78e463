//! SQL parsing and keyword analysis.
//!
//! Everything here is a pure function of the input text: keyword extraction,
//! priority-filtered keyword suggestions, skeleton extraction and structural
//! type classification.

pub mod ast;
mod keyword;
mod lexer;
mod parser;
mod render;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use ast::Query;
pub use keyword::{KeywordSuggestion, PriorityClass, SqlKeyword, UnknownKeyword};
pub use parser::parse_sql;

use ast::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SQL parse error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(
        offset: usize,
        expected: impl Into<String>,
        found: impl Into<String>,
    ) -> Self {
        Self {
            offset,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

impl Query {
    /// Renders the tree back to SQL text.
    pub fn to_sql(&self) -> String {
        render::Renderer::sql(self)
    }

    /// Every keyword occurrence in the statement, subqueries included, in
    /// traversal order. Duplicates are kept.
    pub fn keyword_occurrences(&self) -> Vec<SqlKeyword> {
        let mut collector = KeywordCollector::default();
        collector.query(self);
        collector.found
    }

    pub fn keywords(&self) -> BTreeSet<SqlKeyword> {
        self.keyword_occurrences().into_iter().collect()
    }
}

/// Distinct keywords used anywhere in `sql`.
pub fn extract_keywords(sql: &str) -> Result<BTreeSet<SqlKeyword>, ParseError> {
    Ok(parse_sql(sql)?.keywords())
}

pub fn make_keyword_suggestion(sql: &str) -> Result<KeywordSuggestion, ParseError> {
    Ok(KeywordSuggestion::from_keywords(extract_keywords(sql)?))
}

/// SQL text with identifiers and literals replaced by `_`, keywords upper-cased,
/// single-spaced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqlSkeleton(String);

impl SqlSkeleton {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for SqlSkeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn extract_skeleton(sql: &str) -> Result<SqlSkeleton, ParseError> {
    Ok(SqlSkeleton(render::Renderer::skeleton(&parse_sql(sql)?)))
}

/// The single operation type a statement is bucketed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructuralType {
    GroupBy,
    Having,
    OrderBy,
    Limit,
    Except,
    Intersect,
    Union,
    None,
}

impl StructuralType {
    /// The seven operation types, in report order.
    pub const TAGGED: [StructuralType; 7] = [
        StructuralType::GroupBy,
        StructuralType::Having,
        StructuralType::OrderBy,
        StructuralType::Limit,
        StructuralType::Except,
        StructuralType::Intersect,
        StructuralType::Union,
    ];

    /// Classification precedence, first match wins.
    const PRECEDENCE: [(SqlKeyword, StructuralType); 7] = [
        (SqlKeyword::Except, StructuralType::Except),
        (SqlKeyword::Intersect, StructuralType::Intersect),
        (SqlKeyword::Union, StructuralType::Union),
        (SqlKeyword::Having, StructuralType::Having),
        (SqlKeyword::GroupBy, StructuralType::GroupBy),
        (SqlKeyword::Limit, StructuralType::Limit),
        (SqlKeyword::OrderBy, StructuralType::OrderBy),
    ];

    pub fn from_keywords(keywords: &BTreeSet<SqlKeyword>) -> Self {
        Self::PRECEDENCE
            .iter()
            .find(|(k, _)| keywords.contains(k))
            .map(|&(_, t)| t)
            .unwrap_or(StructuralType::None)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            StructuralType::GroupBy => "GROUP BY",
            StructuralType::Having => "HAVING",
            StructuralType::OrderBy => "ORDER BY",
            StructuralType::Limit => "LIMIT",
            StructuralType::Except => "EXCEPT",
            StructuralType::Intersect => "INTERSECT",
            StructuralType::Union => "UNION",
            StructuralType::None => "NONE",
        }
    }
}

impl fmt::Display for StructuralType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructuralType {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_uppercase();
        Self::TAGGED
            .into_iter()
            .chain([StructuralType::None])
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| UnknownKeyword(s.to_string()))
    }
}

impl Serialize for StructuralType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StructuralType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn classify_structural_type(sql: &str) -> Result<StructuralType, ParseError> {
    Ok(StructuralType::from_keywords(&extract_keywords(sql)?))
}

/// Everything the analysis CLI reports for one statement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlAnalysis {
    pub sql: String,
    pub keywords: Vec<SqlKeyword>,
    pub suggestion: KeywordSuggestion,
    pub skeleton: SqlSkeleton,
    #[serde(rename = "type")]
    pub structural_type: StructuralType,
}

pub fn analyze(sql: &str) -> Result<SqlAnalysis, ParseError> {
    let query = parse_sql(sql)?;
    let keywords = query.keywords();
    Ok(SqlAnalysis {
        sql: sql.to_string(),
        suggestion: KeywordSuggestion::from_keywords(keywords.iter().copied()),
        structural_type: StructuralType::from_keywords(&keywords),
        keywords: keywords.into_iter().collect(),
        skeleton: SqlSkeleton(render::Renderer::skeleton(&query)),
    })
}

#[derive(Default)]
struct KeywordCollector {
    found: Vec<SqlKeyword>,
}

impl KeywordCollector {
    fn push(&mut self, k: SqlKeyword) {
        self.found.push(k);
    }

    fn alias(&mut self, alias: Option<&Alias>) {
        if alias.is_some_and(|a| a.explicit) {
            self.push(SqlKeyword::As);
        }
    }

    fn query(&mut self, q: &Query) {
        self.set_expr(&q.body);
        if !q.order_by.is_empty() {
            self.push(SqlKeyword::OrderBy);
            for item in &q.order_by {
                self.expr(&item.expr);
                match item.direction {
                    Some(SortDirection::Asc) => self.push(SqlKeyword::Asc),
                    Some(SortDirection::Desc) => self.push(SqlKeyword::Desc),
                    None => {}
                }
            }
        }
        if let Some(limit) = &q.limit {
            self.push(SqlKeyword::Limit);
            self.expr(&limit.count);
            if let Some(offset) = &limit.offset {
                self.expr(offset);
            }
        }
    }

    fn set_expr(&mut self, s: &SetExpr) {
        match s {
            SetExpr::Select(select) => self.select(select),
            SetExpr::SetOp {
                op, left, right, ..
            } => {
                self.set_expr(left);
                self.push(match op {
                    SetOperator::Union => SqlKeyword::Union,
                    SetOperator::Intersect => SqlKeyword::Intersect,
                    SetOperator::Except => SqlKeyword::Except,
                });
                self.set_expr(right);
            }
            SetExpr::Nested(q) => self.query(q),
        }
    }

    fn select(&mut self, s: &Select) {
        self.push(SqlKeyword::Select);
        if s.distinct {
            self.push(SqlKeyword::Distinct);
        }
        for item in &s.projection {
            if let SelectItem::Expr { expr, alias } = item {
                self.expr(expr);
                self.alias(alias.as_ref());
            }
        }
        if let Some(from) = &s.from {
            self.push(SqlKeyword::From);
            self.table_factor(&from.first);
            for join in &from.joins {
                if join.kind != JoinKind::Comma {
                    self.push(SqlKeyword::Join);
                }
                self.table_factor(&join.factor);
                if let JoinConstraint::On(e) = &join.constraint {
                    self.push(SqlKeyword::On);
                    self.expr(e);
                }
            }
        }
        if let Some(e) = &s.selection {
            self.push(SqlKeyword::Where);
            self.expr(e);
        }
        if !s.group_by.is_empty() {
            self.push(SqlKeyword::GroupBy);
            s.group_by.iter().for_each(|e| self.expr(e));
        }
        if let Some(e) = &s.having {
            self.push(SqlKeyword::Having);
            self.expr(e);
        }
    }

    fn table_factor(&mut self, f: &TableFactor) {
        if let TableFactor::Derived { subquery, .. } = f {
            self.query(subquery);
        }
        self.alias(f.alias());
    }

    fn not(&mut self, negated: bool) {
        if negated {
            self.push(SqlKeyword::Not);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Column { .. } | Expr::Literal(_) => {}
            Expr::Unary { op, expr } => {
                if *op == UnaryOp::Not {
                    self.push(SqlKeyword::Not);
                }
                self.expr(expr);
            }
            Expr::Binary { op, left, right } => {
                self.expr(left);
                match op {
                    BinaryOp::And => self.push(SqlKeyword::And),
                    BinaryOp::Or => self.push(SqlKeyword::Or),
                    _ => {}
                }
                self.expr(right);
            }
            Expr::Is {
                negated,
                left,
                right,
            } => {
                self.expr(left);
                self.push(SqlKeyword::Is);
                self.not(*negated);
                self.expr(right);
            }
            Expr::Like {
                negated,
                expr,
                pattern,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(SqlKeyword::Like);
                self.expr(pattern);
            }
            Expr::Between {
                negated,
                expr,
                low,
                high,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(SqlKeyword::Between);
                self.expr(low);
                self.push(SqlKeyword::And);
                self.expr(high);
            }
            Expr::InList {
                negated,
                expr,
                list,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(SqlKeyword::In);
                list.iter().for_each(|e| self.expr(e));
            }
            Expr::InSubquery {
                negated,
                expr,
                subquery,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(SqlKeyword::In);
                self.query(subquery);
            }
            Expr::Exists { negated, subquery } => {
                self.not(*negated);
                self.push(SqlKeyword::Exists);
                self.query(subquery);
            }
            Expr::Subquery(q) => self.query(q),
            Expr::Function { name, args } => {
                if let Some(k) = SqlKeyword::aggregate(&name.to_ascii_uppercase()) {
                    self.push(k);
                }
                if let FunctionArgs::List { distinct, args } = args {
                    if *distinct {
                        self.push(SqlKeyword::Distinct);
                    }
                    args.iter().for_each(|e| self.expr(e));
                }
            }
            Expr::Cast { expr, .. } => {
                self.expr(expr);
                self.push(SqlKeyword::As);
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                if let Some(op) = operand {
                    self.expr(op);
                }
                for (cond, result) in branches {
                    self.expr(cond);
                    self.expr(result);
                }
                if let Some(e) = else_result {
                    self.expr(e);
                }
            }
            Expr::Nested(inner) => self.expr(inner),
            Expr::Tuple(items) => items.iter().for_each(|e| self.expr(e)),
        }
    }
}
