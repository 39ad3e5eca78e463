//! Inputs for the pinned prompt snapshots in `tests/golden`.

use std::path::PathBuf;
use std::sync::Arc;

use keyinst::keyinst::{KeyInst, KeyInstRecord};
use keyinst::prompt::*;
use keyinst::schema::{Column, ColumnRef, DatabaseSchema, ForeignKey, Table, TaskInstance};
use keyinst::sql::{KeywordSuggestion, SqlKeyword};

pub const QUESTION: &str = "What is the name of the oldest singer?";

pub fn schema() -> Arc<DatabaseSchema> {
    Arc::new(
        DatabaseSchema::new(
            "concert_singer",
            vec![
                Table::new(
                    "singer",
                    vec![
                        Column::new("singer_id", "number"),
                        Column::new("name", "text"),
                        Column::new("age", "number"),
                    ],
                ),
                Table::new(
                    "concert",
                    vec![
                        Column::new("concert_id", "number"),
                        Column::new("singer_id", "number"),
                        Column::new("year", "text"),
                    ],
                ),
            ],
            vec![
                ColumnRef::new("singer", "singer_id"),
                ColumnRef::new("concert", "concert_id"),
            ],
            vec![ForeignKey {
                column: ColumnRef::new("concert", "singer_id"),
                references: ColumnRef::new("singer", "singer_id"),
            }],
        )
        .unwrap(),
    )
}

pub fn demos() -> Vec<KeyInstRecord> {
    [
        ("How many singers are there?", "Count all singers.", "SELECT count(*) FROM singer"),
        ("List singer names by age.", "Return names sorted by age ascending.", "SELECT name FROM singer ORDER BY age"),
        ("Which year had the most concerts?", "Group concerts by year and take the largest group.", "SELECT year FROM concert GROUP BY year ORDER BY count(*) DESC LIMIT 1"),
        ("Names of singers older than 30.", "Filter singers by age above 30.", "SELECT name FROM singer WHERE age > 30"),
        ("Years with more than two concerts.", "Group by year and keep groups larger than two.", "SELECT year FROM concert GROUP BY year HAVING count(*) > 2"),
        ("Singers who never held a concert.", "All singers minus those with a concert.", "SELECT name FROM singer EXCEPT SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.singer_id = T2.singer_id"),
    ]
    .into_iter()
    .map(|(q, a, g)| KeyInstRecord::new(schema(), q, a, g).unwrap())
    .collect()
}

pub fn keyinst() -> KeyInst {
    KeyInst::new(
        "Sort singers by age descending and return the first name.",
        KeywordSuggestion::from_keywords([SqlKeyword::OrderBy, SqlKeyword::Limit]),
    )
    .unwrap()
}

pub fn task() -> TaskInstance {
    TaskInstance::new("t", schema(), QUESTION, None, Default::default(), None).unwrap()
}

/// `(file name, rendered prompt)` for every snapshot.
pub fn cases() -> Vec<(&'static str, String)> {
    let zero = build_zero_shot_sql_prompt(&schema(), QUESTION, None);
    vec![
        (
            "analysis.txt",
            build_analysis_prompt(QUESTION).unwrap().render(),
        ),
        (
            "keyinst_icl.txt",
            build_keyinst_icl_prompt(&task(), &demos())
                .unwrap()
                .render(),
        ),
        ("zero_shot.txt", zero.render()),
        (
            "zero_shot_keyinst.txt",
            build_zero_shot_sql_prompt(&schema(), QUESTION, Some(&keyinst())).render(),
        ),
        ("appended.txt", append_keyinst(&zero, &keyinst()).render()),
    ]
}

pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}
