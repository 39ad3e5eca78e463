//! Brute-force keyword scanner used as an oracle. Works on raw text only and
//! shares no code with the parser.

use std::collections::BTreeMap;

const SINGLE: &[&str] = &[
    "HAVING",
    "LIMIT",
    "EXCEPT",
    "INTERSECT",
    "UNION",
    "WHERE",
    "SELECT",
    "FROM",
    "JOIN",
    "ON",
    "AS",
    "COUNT",
    "AVG",
    "SUM",
    "MIN",
    "MAX",
    "DISTINCT",
    "IN",
    "LIKE",
    "BETWEEN",
    "EXISTS",
    "IS",
    "NOT",
    "OR",
    "AND",
    "ASC",
    "DESC",
];

const HIGHEST: &[&str] = &[
    "GROUP BY",
    "HAVING",
    "ORDER BY",
    "LIMIT",
    "EXCEPT",
    "INTERSECT",
    "UNION",
    "WHERE",
];

#[derive(Debug, PartialEq)]
enum Tok {
    Word(String),
    Other,
}

fn scan(sql: &str) -> Vec<Tok> {
    let chars: Vec<char> = sql.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '\'' || c == '"' || c == '`' || c == '[' {
            let close = if c == '[' { ']' } else { c };
            i += 1;
            while i < chars.len() {
                if chars[i] == close {
                    if close != ']' && i + 1 < chars.len() && chars[i + 1] == close {
                        i += 2;
                        continue;
                    }
                    break;
                }
                i += 1;
            }
            i += 1;
            toks.push(Tok::Other);
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            toks.push(Tok::Word(
                chars[start..i].iter().collect::<String>().to_uppercase(),
            ));
        } else if c.is_ascii_digit() {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                i += 1;
            }
            toks.push(Tok::Other);
        } else {
            i += 1;
            toks.push(Tok::Other);
        }
    }
    toks
}

/// Keyword occurrence counts, keyed by canonical spelling (`"ORDER BY"`, `"COUNT"`...).
pub fn keyword_counts(sql: &str) -> BTreeMap<String, usize> {
    let toks = scan(sql);
    let mut counts = BTreeMap::new();
    for (i, t) in toks.iter().enumerate() {
        let Tok::Word(w) = t else { continue };
        let kw =
            if (w == "GROUP" || w == "ORDER") && toks.get(i + 1) == Some(&Tok::Word("BY".into())) {
                Some(format!("{w} BY"))
            } else if SINGLE.contains(&w.as_str()) {
                Some(w.clone())
            } else {
                None
            };
        if let Some(kw) = kw {
            *counts.entry(kw).or_insert(0) += 1;
        }
    }
    counts
}

pub fn keyword_set(sql: &str) -> Vec<String> {
    keyword_counts(sql).into_keys().collect()
}

/// Priority filter applied to the scanner's keyword set, as a sorted list.
pub fn suggestion(sql: &str) -> Vec<String> {
    let all = keyword_set(sql);
    let highest: Vec<String> = all
        .iter()
        .filter(|k| HIGHEST.contains(&k.as_str()))
        .cloned()
        .collect();
    if !highest.is_empty() {
        return highest;
    }
    all.into_iter()
        .filter(|k| k == "SELECT" || k == "FROM")
        .collect()
}

pub fn is_highest(kw: &str) -> bool {
    HIGHEST.contains(&kw)
}
