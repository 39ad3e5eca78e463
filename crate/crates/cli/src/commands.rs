use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use keyinst::eval::{evaluate_dataset, PredictionRecord};
use keyinst::keyinst::{build_keyinst_dataset, load_keyinst_jsonl, KeyInst, KeyInstError};
use keyinst::llm::HttpProvider;
use keyinst::pipeline::{run_batch, KeyInstResources, PipelineConfig, PipelineError, Providers};
use keyinst::prompt::{
    build_analysis_prompt, build_keyinst_icl_prompt, build_zero_shot_sql_prompt,
};
use keyinst::retrieval::DemoPool;
use keyinst::schema::{
    filter_schema_by_sql, load_spider_dataset, load_tasks_jsonl, DatabaseSchema, SchemaCatalog,
    SchemaError, TaskInstance, TaskRecord,
};
use keyinst::sql::analyze;

use crate::{Cli, Command, PromptArgs, PromptMode};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Transport(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Transport(m) => f.write_str(m),
        }
    }
}

fn data(e: impl fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        data(e)
    }
}

impl From<KeyInstError> for CliError {
    fn from(e: KeyInstError) -> Self {
        match &e {
            KeyInstError::Provider { source, .. } if source.is_transport() => {
                CliError::Transport(e.to_string())
            }
            _ => data(e),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match &e {
            _ if e.is_transport() => CliError::Transport(e.to_string()),
            PipelineError::Config(_) => CliError::Usage(e.to_string()),
            _ => data(e),
        }
    }
}

struct Context {
    config: PipelineConfig,
    db_root: Option<PathBuf>,
    tables: Option<PathBuf>,
}

impl Context {
    fn db_root(&self) -> Result<&Path, CliError> {
        self.db_root
            .as_deref()
            .ok_or_else(|| CliError::Usage("--db-root is required for this command".into()))
    }

    /// Schemas from `--tables` when given, else introspected from `--db-root`.
    fn catalog(&self) -> Result<SchemaCatalog, CliError> {
        Ok(match (&self.tables, &self.db_root) {
            (Some(tables), _) => SchemaCatalog::from_tables_file(tables)?,
            (None, Some(root)) => SchemaCatalog::from_db_root(root)?,
            (None, None) => SchemaCatalog::new(),
        })
    }

    /// A `.json` file is read as a Spider example array (needs `--tables`);
    /// anything else as a JSON Lines task file.
    fn tasks(&self, path: &Path) -> Result<Vec<TaskInstance>, CliError> {
        let root = self.db_root()?;
        if path.extension().is_some_and(|e| e == "json") {
            let tables = self
                .tables
                .as_deref()
                .ok_or_else(|| CliError::Usage("a Spider example file needs --tables".into()))?;
            return Ok(load_spider_dataset(tables, path, root)?);
        }
        Ok(load_tasks_jsonl(path, &self.catalog()?, root)?)
    }

    /// One task as a JSON object; the database need not exist.
    fn task(&self, path: &Path) -> Result<TaskInstance, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        let record: TaskRecord =
            serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))?;
        let root = self.db_root.clone().unwrap_or_default();
        Ok(record.into_task(0, &self.catalog()?, &root)?)
    }
}

fn write_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(data)?;
    println!("{text}");
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => {
            PipelineConfig::from_file(path).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        log::info!("seed {seed} ignored: decoding is greedy");
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = Context {
        config,
        db_root: cli.db_root,
        tables: cli.tables,
    };
    match cli.command {
        Command::ExtractKeywords | Command::Skeleton | Command::Classify => analyze_stdin(),
        Command::Simplify { db, sql, render } => simplify(&ctx, &db, &sql, render),
        Command::Retrieve { m, pool, task } => retrieve(&ctx, m, &pool, &task),
        Command::Prompt(args) => prompt(&ctx, &args),
        Command::Evaluate {
            tasks,
            preds,
            strict,
            out,
        } => evaluate(&ctx, &tasks, &preds, strict, out.as_deref()),
        Command::BuildDataset {
            tasks,
            out,
            concurrency,
            inline_schema,
        } => {
            let tasks = ctx.tasks(&tasks)?;
            let n = build_keyinst_dataset(
                &tasks,
                &HttpProvider::new(),
                &ctx.config.generator_config,
                &out,
                concurrency,
                inline_schema,
            )?;
            eprintln!("wrote {n} records to {}", out.display());
            Ok(())
        }
        Command::Generate { tasks, output } => generate(ctx, &tasks, output),
    }
}

fn analyze_stdin() -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut failed = 0;
    for (i, line) in io::stdin().lock().lines().enumerate() {
        let line = line.map_err(data)?;
        let sql = line.trim();
        if sql.is_empty() {
            continue;
        }
        match analyze(sql) {
            Ok(a) => writeln!(out, "{}", serde_json::to_string(&a).map_err(data)?).map_err(data)?,
            Err(e) => {
                failed += 1;
                eprintln!("line {}: {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        return Err(data(format!("{failed} statement(s) failed to parse")));
    }
    Ok(())
}

fn simplify(ctx: &Context, db: &str, sql: &str, render: bool) -> Result<(), CliError> {
    let schema = ctx
        .catalog()?
        .get(db)
        .ok_or_else(|| data(format!("unknown database `{db}`")))?;
    let filtered: DatabaseSchema = filter_schema_by_sql(&schema, sql)?;
    if render {
        println!("{}", filtered.render_prompt());
        Ok(())
    } else {
        write_json(&filtered)
    }
}

fn load_pool(ctx: &Context, path: &Path) -> Result<DemoPool, CliError> {
    Ok(DemoPool::new(load_keyinst_jsonl(path, &ctx.catalog()?)?))
}

fn retrieve(ctx: &Context, m: usize, pool: &Path, task: &Path) -> Result<(), CliError> {
    let pool = load_pool(ctx, pool)?;
    let task = ctx.task(task)?;
    write_json(&pool.select(&task.question, &task.schema, m))
}

fn prompt(ctx: &Context, args: &PromptArgs) -> Result<(), CliError> {
    let usage = |m: &str| CliError::Usage(m.to_string());
    let prompt = match args.mode {
        PromptMode::Analysis => {
            let question = match (&args.question, &args.task) {
                (Some(q), _) => q.clone(),
                (None, Some(t)) => ctx.task(t)?.question,
                (None, None) => return Err(usage("analysis mode needs --question or --task")),
            };
            build_analysis_prompt(&question).map_err(data)?
        }
        PromptMode::KeyinstIcl => {
            let task = ctx.task(
                args.task
                    .as_deref()
                    .ok_or_else(|| usage("keyinst-icl mode needs --task"))?,
            )?;
            let pool = load_pool(
                ctx,
                args.pool
                    .as_deref()
                    .ok_or_else(|| usage("keyinst-icl mode needs --pool"))?,
            )?;
            let demos: Vec<_> = pool
                .select(&task.question, &task.schema, args.m)
                .iter()
                .map(|s| pool.records()[s.index].clone())
                .collect();
            build_keyinst_icl_prompt(&task, &demos).map_err(data)?
        }
        PromptMode::SqlZero => {
            let task = ctx.task(
                args.task
                    .as_deref()
                    .ok_or_else(|| usage("sql-zero mode needs --task"))?,
            )?;
            let keyinst: Option<KeyInst> = match &args.keyinst {
                Some(p) => {
                    let text =
                        fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
                    Some(
                        serde_json::from_str(&text)
                            .map_err(|e| data(format!("{}: {e}", p.display())))?,
                    )
                }
                None => None,
            };
            build_zero_shot_sql_prompt(&task.schema, &task.question, keyinst.as_ref())
        }
    };
    println!("{}", prompt.render());
    Ok(())
}

fn evaluate(
    ctx: &Context,
    tasks: &Path,
    preds: &Path,
    strict: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let tasks = ctx.tasks(tasks)?;
    let text = fs::read_to_string(preds).map_err(|e| data(format!("{}: {e}", preds.display())))?;
    let mut by_id: HashMap<String, Option<String>> = HashMap::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let p: PredictionRecord = serde_json::from_str(line)
            .map_err(|e| data(format!("{}:{}: {e}", preds.display(), i + 1)))?;
        by_id.insert(p.task_id, p.sql);
    }
    let predictions: Vec<Option<String>> = tasks
        .iter()
        .map(|t| {
            let p = by_id.get(&t.task_id).cloned().flatten();
            if !by_id.contains_key(&t.task_id) {
                log::warn!("no prediction for task {}", t.task_id);
            }
            p
        })
        .collect();
    let mut options = ctx.config.eval;
    options.strict |= strict;
    let report = evaluate_dataset(&tasks, &predictions, &options).map_err(data)?;
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&report).map_err(data)? + "\n";
        fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display())))?;
    }
    write_json(&report)
}

fn generate(mut ctx: Context, tasks: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    if let Some(o) = output {
        ctx.config.output_path = o;
    }
    let tasks = ctx.tasks(tasks)?;
    let catalog = ctx.catalog()?;
    let resources = KeyInstResources::load(&ctx.config, &catalog)?;
    let http = HttpProvider::new();
    let outcome = run_batch(
        &tasks,
        &ctx.config,
        &resources,
        &Providers {
            generator: &http,
            sql: &http,
        },
    )?;
    if let Some(report) = &outcome.report {
        write_json(report)?;
    }
    eprintln!(
        "{} task(s) run, {} failed; outputs in {}",
        outcome.executed,
        outcome.failures.len(),
        ctx.config.output_path.display()
    );
    if let Some(f) = outcome.failures.iter().find(|f| f.transport) {
        return Err(CliError::Transport(format!(
            "{} task(s) failed, first: {}",
            outcome.failures.len(),
            f.message
        )));
    }
    if let Some(f) = outcome.failures.first() {
        return Err(data(format!(
            "{} task(s) failed, first: {}",
            outcome.failures.len(),
            f.message
        )));
    }
    Ok(())
}
