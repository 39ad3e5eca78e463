mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "keyinst",
    version,
    about = "Keyword instructions for Text-to-SQL"
)]
struct Cli {
    /// Key-value config file (`key = value` per line).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Reserved; generation is greedy so no randomness is drawn.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding `<db_id>/<db_id>.sqlite` databases.
    #[arg(long, global = true)]
    db_root: Option<PathBuf>,
    /// Spider-format `tables.json` used to resolve schemas by db_id.
    #[arg(long, global = true)]
    tables: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate question analyses for gold tasks and write a KeyInst set.
    BuildDataset {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Store each record's schema inline.
        #[arg(long)]
        inline_schema: bool,
    },
    /// Run the pipeline over a task file and score it when gold SQL is present.
    Generate {
        #[arg(long)]
        tasks: PathBuf,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a predictions file against a task file.
    Evaluate {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        preds: PathBuf,
        /// Count tasks whose gold SQL fails as incorrect instead of excluding them.
        #[arg(long)]
        strict: bool,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyse SQL statements read one per line from stdin.
    ExtractKeywords,
    /// Same output as `extract-keywords`.
    Skeleton,
    /// Same output as `extract-keywords`.
    Classify,
    /// Reduce a schema to what a SQL query references.
    Simplify {
        #[arg(long)]
        db: String,
        #[arg(long)]
        sql: String,
        /// Print the prompt rendering instead of JSON.
        #[arg(long)]
        render: bool,
    },
    /// Select demonstrations for one task from a KeyInst set.
    Retrieve {
        #[arg(long, default_value_t = keyinst::retrieval::DEFAULT_DEMOS)]
        m: usize,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        task: PathBuf,
    },
    /// Print a rendered prompt.
    Prompt(PromptArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PromptMode {
    Analysis,
    KeyinstIcl,
    SqlZero,
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[arg(long, value_enum)]
    mode: PromptMode,
    /// Task JSON object; `--question` is enough for `analysis`.
    #[arg(long)]
    task: Option<PathBuf>,
    #[arg(long)]
    question: Option<String>,
    /// KeyInst set for `keyinst-icl`.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = keyinst::retrieval::DEFAULT_DEMOS)]
    m: usize,
    /// `{analysis, keywords}` JSON to include in a `sql-zero` prompt.
    #[arg(long)]
    keyinst: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
