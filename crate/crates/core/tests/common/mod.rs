#![allow(dead_code)]

pub mod fixtures;
pub mod golden;
pub mod harness;
pub mod oracle;

pub fn gold_corpus() -> Vec<&'static str> {
    include_str!("../data/gold_corpus.sql")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}
