mod common;

use std::time::Duration;

use common::fixtures::{self, EQUIVALENT, TASKS, WRONG};
use keyinst::eval::*;
use keyinst::schema::database_path;
use keyinst::sql::{classify_structural_type, StructuralType};
use proptest::prelude::*;

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let root = fixtures::build_databases(dir.path());
    (dir, root)
}

#[test]
fn fixture_tags_agree_with_classifier() {
    for f in &TASKS {
        assert_eq!(
            classify_structural_type(f.gold).unwrap(),
            f.ty,
            "{}",
            f.gold
        );
    }
    let (_d, root) = setup();
    let report = evaluate_dataset(
        &fixtures::tasks(&root),
        &vec![None; 35],
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(report.per_type.len(), 7);
    assert!(report.per_type.values().all(|s| s.n == 5));
    assert_eq!(report.overall.n, 35);
}

#[test]
fn permuted_predictions_are_true_permutations() {
    let (_d, root) = setup();
    for f in &TASKS {
        let db = database_path(&root, f.db);
        let gold = execute_sql(&db, f.gold, DEFAULT_TIMEOUT).unwrap();
        let perm = execute_sql(&db, f.permuted, DEFAULT_TIMEOUT).unwrap();
        assert!(gold.rows.len() >= 2, "{}", f.gold);
        assert!(compare_results(&perm, &gold, false), "{}", f.permuted);
        assert!(!compare_results(&perm, &gold, true), "{}", f.permuted);
    }
}

#[test]
fn gold_against_gold_is_perfect() {
    let (_d, root) = setup();
    let tasks = fixtures::tasks(&root);
    let preds: Vec<_> = TASKS.iter().map(|f| Some(f.gold.to_string())).collect();
    let report = evaluate_dataset(&tasks, &preds, &EvalOptions::default()).unwrap();
    assert_eq!(report.overall.ex_percent, 100.0);
    assert!(report.per_type.values().all(|s| s.ex_percent == 100.0));
}

#[test]
fn equivalent_and_wrong_predictions() {
    let (_d, root) = setup();
    let catalog = fixtures::catalog(&root);
    for (i, (db, gold, pred)) in EQUIVALENT.iter().enumerate() {
        let task = fixtures::task(&catalog, &root, format!("e{i}"), db, "q", gold, None);
        let o = evaluate_task(&task, Some(pred), DEFAULT_TIMEOUT);
        assert!(o.correct, "{pred}: {o:?}");
    }
    for (i, (db, gold, pred)) in WRONG.iter().enumerate() {
        let task = fixtures::task(&catalog, &root, format!("w{i}"), db, "q", gold, None);
        let o = evaluate_task(&task, Some(pred), DEFAULT_TIMEOUT);
        assert!(!o.correct, "{pred}");
        assert_eq!(o.reason, Reason::Mismatch);
    }
}

#[test]
fn order_sensitivity_follows_gold() {
    let (_d, root) = setup();
    for (task, f) in fixtures::tasks(&root).iter().zip(&TASKS) {
        let ordered = f.gold.contains("ORDER BY");
        let o = evaluate_task(task, Some(f.permuted), DEFAULT_TIMEOUT);
        assert_eq!(o.correct, !ordered, "{}", f.gold);
    }
}

#[test]
fn execute_examples() {
    let (_d, root) = setup();
    let db = database_path(&root, "store");
    let one = execute_sql(&db, "SELECT 1", DEFAULT_TIMEOUT).unwrap();
    assert_eq!(one.rows, vec![vec![Value::Integer(1)]]);
    let n = execute_sql(
        &db,
        "SELECT count(*) FROM shop WHERE city = 'Paris'",
        DEFAULT_TIMEOUT,
    )
    .unwrap();
    assert_eq!(n.rows, vec![vec![Value::Integer(3)]]);
    assert!(matches!(
        execute_sql(&db, "SELECT FROM", DEFAULT_TIMEOUT),
        Err(ExecError::Sql(_))
    ));
    let null = execute_sql(&db, "SELECT NULL", DEFAULT_TIMEOUT).unwrap();
    assert_eq!(null.rows, vec![vec![Value::Null]]);
}

#[test]
fn count_on_a_three_shop_database() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("three.sqlite");
    rusqlite::Connection::open(&db)
        .unwrap()
        .execute_batch("CREATE TABLE shop (id INTEGER, name TEXT); INSERT INTO shop VALUES (1, 'a'), (2, 'b'), (3, 'c');")
        .unwrap();
    let t = execute_sql(&db, "SELECT count(*) FROM shop", DEFAULT_TIMEOUT).unwrap();
    assert_eq!(t.rows, vec![vec![Value::Integer(3)]]);
}

#[test]
fn real_tolerance_against_computed_third() {
    let (_d, root) = setup();
    let db = database_path(&root, "store");
    let third = execute_sql(&db, "SELECT 1.0 / 3", DEFAULT_TIMEOUT).unwrap();
    let approx = execute_sql(&db, "SELECT 0.3333333", DEFAULT_TIMEOUT).unwrap();
    assert!(compare_results(&approx, &third, false));
    let off = execute_sql(&db, "SELECT 0.3333", DEFAULT_TIMEOUT).unwrap();
    assert!(!compare_results(&off, &third, false));
}

#[test]
fn prediction_failures_are_incorrect() {
    let (_d, root) = setup();
    let tasks = fixtures::tasks(&root);
    let o = evaluate_task(&tasks[0], Some("SELECT nope FROM shop"), DEFAULT_TIMEOUT);
    assert_eq!((o.correct, o.reason), (false, Reason::PredError));
    assert!(o.pred_error_text.is_some());
    let o = evaluate_task(&tasks[0], None, DEFAULT_TIMEOUT);
    assert_eq!(o.reason, Reason::PredError);
    let o = evaluate_task(
        &tasks[0],
        Some(tasks[0].gold_sql().unwrap()),
        DEFAULT_TIMEOUT,
    );
    assert_eq!((o.correct, o.reason), (true, Reason::Match));
}

#[test]
fn half_correct_is_fifty_percent() {
    let (_d, root) = setup();
    let tasks: Vec<_> = fixtures::tasks(&root).into_iter().take(8).collect();
    let preds: Vec<_> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Some(if i % 2 == 0 {
                t.gold_sql().unwrap().to_string()
            } else {
                "SELECT 0".into()
            })
        })
        .collect();
    let report = evaluate_dataset(&tasks, &preds, &EvalOptions::default()).unwrap();
    assert_eq!(
        (
            report.overall.n,
            report.overall.correct,
            report.overall.ex_percent
        ),
        (8, 4, 50.0)
    );
    assert_eq!(
        evaluate_dataset(&tasks, &preds[..3], &EvalOptions::default()),
        Err(EvalError::LengthMismatch {
            tasks: 8,
            predictions: 3
        })
    );
}

#[test]
fn strict_flag_controls_gold_errors() {
    let (_d, root) = setup();
    let catalog = fixtures::catalog(&root);
    // parses, but the table does not exist in the database
    let broken = fixtures::task(
        &catalog,
        &root,
        "b".into(),
        "store",
        "q",
        "SELECT x FROM missing",
        None,
    );
    let good = fixtures::tasks(&root).remove(0);
    let tasks = vec![good.clone(), broken];
    let preds = vec![
        Some(good.gold_sql().unwrap().to_string()),
        Some("SELECT 1".into()),
    ];
    let lenient = evaluate_dataset(&tasks, &preds, &EvalOptions::default()).unwrap();
    assert_eq!(lenient.outcomes[1].reason, Reason::GoldError);
    assert_eq!((lenient.overall.n, lenient.overall.ex_percent), (1, 100.0));
    let strict = evaluate_dataset(
        &tasks,
        &preds,
        &EvalOptions {
            strict: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!((strict.overall.n, strict.overall.ex_percent), (2, 50.0));
}

#[test]
fn reports_are_reproducible_and_keyed_by_type() {
    let (_d, root) = setup();
    let tasks = fixtures::tasks(&root);
    let preds: Vec<_> = TASKS.iter().map(|f| Some(f.permuted.to_string())).collect();
    let opts = EvalOptions {
        timeout: Duration::from_secs(5),
        ..Default::default()
    };
    let a = serde_json::to_string(&evaluate_dataset(&tasks, &preds, &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&evaluate_dataset(&tasks, &preds, &opts).unwrap()).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["per_type"]["ORDER BY"]["correct"], 0);
    assert_eq!(v["per_type"]["UNION"]["ex_percent"], 100.0);
    let ids: Vec<_> = v["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["task_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(
        ids,
        tasks.iter().map(|t| t.task_id.clone()).collect::<Vec<_>>()
    );
    let _ = StructuralType::None;
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        (-5i64..5).prop_map(Value::Integer),
        (-3.0f64..3.0).prop_map(Value::Real),
        "[ab]{0,2}".prop_map(Value::Text),
    ]
}

fn table() -> impl Strategy<Value = ResultTable> {
    (1usize..3).prop_flat_map(|cols| {
        prop::collection::vec(prop::collection::vec(value(), cols), 0..8).prop_map(move |rows| {
            ResultTable {
                columns: cols,
                rows,
            }
        })
    })
}

proptest! {
    #[test]
    fn unordered_comparison_ignores_row_order(t in table(), seed in any::<u64>()) {
        let mut rows = t.rows.clone();
        // deterministic shuffle from the seed
        let n = rows.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
            rows.swap(i, j);
        }
        let p = ResultTable { columns: t.columns, rows };
        prop_assert!(compare_results(&p, &t, false));
        prop_assert!(compare_results(&t, &t, true));
    }

    #[test]
    fn unordered_comparison_is_symmetric(a in table(), b in table()) {
        prop_assert_eq!(compare_results(&a, &b, false), compare_results(&b, &a, false));
    }

    #[test]
    fn tolerance_is_symmetric(x in -1e6f64..1e6, eps in -2e-6f64..2e-6) {
        let y = x + eps * x.abs().max(1.0);
        let (a, b) = (Value::Real(x), Value::Real(y));
        prop_assert_eq!(a.matches(&b), b.matches(&a));
    }
}
