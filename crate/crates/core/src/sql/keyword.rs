//! SQL keyword vocabulary and the priority classes used for keyword suggestions.
//!
//! The declaration order of [`SqlKeyword`] is the canonical order: the
//! highest-priority keywords first, then `SELECT` and `FROM`, then everything
//! that never appears in a suggestion. `Ord` follows declaration order, so a
//! `BTreeSet<SqlKeyword>` iterates canonically.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SqlKeyword {
    GroupBy,
    Having,
    OrderBy,
    Limit,
    Except,
    Intersect,
    Union,
    Where,
    Select,
    From,
    Join,
    On,
    As,
    Count,
    Avg,
    Sum,
    Min,
    Max,
    Distinct,
    In,
    Like,
    Between,
    Exists,
    Is,
    Not,
    Or,
    And,
    Asc,
    Desc,
}

/// Priority level of a keyword when building a suggestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorityClass {
    Highest,
    Second,
    Excluded,
}

impl SqlKeyword {
    pub const ALL: [SqlKeyword; 29] = [
        SqlKeyword::GroupBy,
        SqlKeyword::Having,
        SqlKeyword::OrderBy,
        SqlKeyword::Limit,
        SqlKeyword::Except,
        SqlKeyword::Intersect,
        SqlKeyword::Union,
        SqlKeyword::Where,
        SqlKeyword::Select,
        SqlKeyword::From,
        SqlKeyword::Join,
        SqlKeyword::On,
        SqlKeyword::As,
        SqlKeyword::Count,
        SqlKeyword::Avg,
        SqlKeyword::Sum,
        SqlKeyword::Min,
        SqlKeyword::Max,
        SqlKeyword::Distinct,
        SqlKeyword::In,
        SqlKeyword::Like,
        SqlKeyword::Between,
        SqlKeyword::Exists,
        SqlKeyword::Is,
        SqlKeyword::Not,
        SqlKeyword::Or,
        SqlKeyword::And,
        SqlKeyword::Asc,
        SqlKeyword::Desc,
    ];

    pub const HIGHEST: [SqlKeyword; 8] = [
        SqlKeyword::GroupBy,
        SqlKeyword::Having,
        SqlKeyword::OrderBy,
        SqlKeyword::Limit,
        SqlKeyword::Except,
        SqlKeyword::Intersect,
        SqlKeyword::Union,
        SqlKeyword::Where,
    ];

    pub const SECOND: [SqlKeyword; 2] = [SqlKeyword::Select, SqlKeyword::From];

    pub fn priority(self) -> PriorityClass {
        use SqlKeyword::*;
        match self {
            GroupBy | Having | OrderBy | Limit | Except | Intersect | Union | Where => {
                PriorityClass::Highest
            }
            Select | From => PriorityClass::Second,
            _ => PriorityClass::Excluded,
        }
    }

    pub const fn as_str(self) -> &'static str {
        use SqlKeyword::*;
        match self {
            GroupBy => "GROUP BY",
            Having => "HAVING",
            OrderBy => "ORDER BY",
            Limit => "LIMIT",
            Except => "EXCEPT",
            Intersect => "INTERSECT",
            Union => "UNION",
            Where => "WHERE",
            Select => "SELECT",
            From => "FROM",
            Join => "JOIN",
            On => "ON",
            As => "AS",
            Count => "COUNT",
            Avg => "AVG",
            Sum => "SUM",
            Min => "MIN",
            Max => "MAX",
            Distinct => "DISTINCT",
            In => "IN",
            Like => "LIKE",
            Between => "BETWEEN",
            Exists => "EXISTS",
            Is => "IS",
            Not => "NOT",
            Or => "OR",
            And => "AND",
            Asc => "ASC",
            Desc => "DESC",
        }
    }

    /// Matches a single-word keyword given an already upper-cased word.
    pub(crate) fn from_single_word(upper: &str) -> Option<Self> {
        use SqlKeyword::*;
        Some(match upper {
            "HAVING" => Having,
            "LIMIT" => Limit,
            "EXCEPT" => Except,
            "INTERSECT" => Intersect,
            "UNION" => Union,
            "WHERE" => Where,
            "SELECT" => Select,
            "FROM" => From,
            "JOIN" => Join,
            "ON" => On,
            "AS" => As,
            "COUNT" => Count,
            "AVG" => Avg,
            "SUM" => Sum,
            "MIN" => Min,
            "MAX" => Max,
            "DISTINCT" => Distinct,
            "IN" => In,
            "LIKE" => Like,
            "BETWEEN" => Between,
            "EXISTS" => Exists,
            "IS" => Is,
            "NOT" => Not,
            "OR" => Or,
            "AND" => And,
            "ASC" => Asc,
            "DESC" => Desc,
            _ => return None,
        })
    }

    /// Aggregate function heads that count as keywords.
    pub(crate) fn aggregate(upper_name: &str) -> Option<Self> {
        match upper_name {
            "COUNT" => Some(SqlKeyword::Count),
            "AVG" => Some(SqlKeyword::Avg),
            "SUM" => Some(SqlKeyword::Sum),
            "MIN" => Some(SqlKeyword::Min),
            "MAX" => Some(SqlKeyword::Max),
            _ => None,
        }
    }
}

impl fmt::Display for SqlKeyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown SQL keyword `{0}`")]
pub struct UnknownKeyword(pub String);

impl FromStr for SqlKeyword {
    type Err = UnknownKeyword;

    /// Case-insensitive; any whitespace run inside `GROUP BY` / `ORDER BY` is accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<String> = s.split_whitespace().map(str::to_ascii_uppercase).collect();
        match words.as_slice() {
            [w] => Self::from_single_word(w),
            [a, b] if b == "BY" && a == "GROUP" => Some(SqlKeyword::GroupBy),
            [a, b] if b == "BY" && a == "ORDER" => Some(SqlKeyword::OrderBy),
            _ => None,
        }
        .ok_or_else(|| UnknownKeyword(s.to_string()))
    }
}

impl Serialize for SqlKeyword {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SqlKeyword {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A priority-filtered, deduplicated, canonically ordered keyword list.
///
/// Holds no excluded keyword, and never mixes highest-priority keywords with
/// `SELECT`/`FROM`. The only ways to build one are [`KeywordSuggestion::from_keywords`]
/// and [`KeywordSuggestion::empty`], so the invariants hold for every value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct KeywordSuggestion(BTreeSet<SqlKeyword>);

impl KeywordSuggestion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Applies the priority rule: keep the highest-priority keywords if any are
    /// present, otherwise fall back to `SELECT`/`FROM`. Excluded keywords are dropped.
    pub fn from_keywords<I: IntoIterator<Item = SqlKeyword>>(keywords: I) -> Self {
        let all: BTreeSet<SqlKeyword> = keywords.into_iter().collect();
        let highest: BTreeSet<SqlKeyword> = all
            .iter()
            .copied()
            .filter(|k| k.priority() == PriorityClass::Highest)
            .collect();
        if !highest.is_empty() {
            return Self(highest);
        }
        Self(
            all.into_iter()
                .filter(|k| k.priority() == PriorityClass::Second)
                .collect(),
        )
    }

    pub fn keywords(&self) -> impl Iterator<Item = SqlKeyword> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<SqlKeyword> {
        self.0.iter().copied().collect()
    }

    pub fn contains(&self, keyword: SqlKeyword) -> bool {
        self.0.contains(&keyword)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for KeywordSuggestion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for KeywordSuggestion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let keywords = Vec::<SqlKeyword>::deserialize(deserializer)?;
        Ok(Self::from_keywords(keywords))
    }
}
