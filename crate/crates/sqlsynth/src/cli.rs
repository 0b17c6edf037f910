//! `sqlsynth` subcommands. Exit codes: 0 success, 1 domain error (one
//! `error: <Kind>: ...` line on stderr), 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sqlsynth_core::analysis::{classify_difficulty, tag_operators, DifficultyLevel, StatsReport};
use sqlsynth_core::eval::{score, Breakdown, MatchMode};
use sqlsynth_core::exec::{execute, render_denotation, DEFAULT_SEPARATOR};
use sqlsynth_core::linearize::{build_source, flatten_table, truncate_rows};
use sqlsynth_core::sql::{element_stream, parse, print_canonical};
use sqlsynth_core::synth::{split_holdout, SynthesisConfig};

use crate::io::{jsonl_records, load_table_auto, load_tables_dir, load_templates, read_jsonl, read_lines, write_jsonl, JsonlWriter};
use crate::pipeline::{default_jobs, synthesize_parallel};
use crate::report::{eval_text, stats_text};
use crate::Error;

#[derive(Parser, Debug)]
#[command(name = "sqlsynth", version, about = "Synthesize SQL-execution corpora over tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize a JSONL corpus
    Synth(SynthArgs),
    /// Execute a query against a table and print the answer
    Exec(ExecArgs),
    /// Print the canonical form and element count of a query
    Parse(ParseArgs),
    /// Print the flattened table, optionally prefixed by a sentence
    Linearize(LinearizeArgs),
    /// Print the difficulty level and operator tags of a query
    Classify(ClassifyArgs),
    /// Summarize a corpus
    Stats(StatsArgs),
    /// Split a corpus into table-disjoint train and holdout files
    Split(SplitArgs),
    /// Score predictions against a gold corpus
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory of .csv / .json tables
    #[arg(long)]
    pub tables: PathBuf,
    /// Template file, one template per line
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with synthesis settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, overrides_with = "no_dedup")]
    pub dedup: bool,
    #[arg(long, overrides_with = "dedup")]
    pub no_dedup: bool,
    /// Level fractions, e.g. easy=0.25,medium=0.25,hard=0.25,extra-hard=0.25
    #[arg(long, value_parser = parse_mix)]
    pub mix: Option<BTreeMap<DifficultyLevel, f64>>,
    /// Source length budget in characters; rows are dropped to fit
    #[arg(long)]
    pub max_chars: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    #[arg(long)]
    pub separator: Option<String>,
    /// Worker threads [default: $SQLSYNTH_JOBS or the number of CPUs]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ExecArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub sql: String,
    #[arg(long, default_value = DEFAULT_SEPARATOR)]
    pub separator: String,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    #[arg(long)]
    pub sql: String,
    /// Resolve column names against this table
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LinearizeArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub sentence: Option<String>,
    #[arg(long, requires = "sentence")]
    pub max_chars: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub sql: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// [default: <corpus>.train.jsonl]
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// [default: <corpus>.holdout.jsonl]
    #[arg(long)]
    pub holdout: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ByArg {
    Difficulty,
    Operator,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// One predicted answer per line
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub by: Vec<ByArg>,
    /// Compare raw strings instead of normalized answer sets
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value = DEFAULT_SEPARATOR)]
    pub separator: String,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

fn parse_mix(s: &str) -> Result<BTreeMap<DifficultyLevel, f64>, String> {
    let mut mix = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (level, frac) = part.split_once('=').ok_or_else(|| format!("expected level=fraction, got {part:?}"))?;
        let level: DifficultyLevel = level.trim().parse()?;
        let frac: f64 = frac.trim().parse().map_err(|e| format!("{frac:?}: {e}"))?;
        if mix.insert(level, frac).is_some() {
            return Err(format!("level {level} given twice"));
        }
    }
    Ok(mix)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {line}");
            1
        }
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Error> {
    match cmd {
        Command::Synth(a) => synth(a, out),
        Command::Exec(a) => {
            let table = load_table_auto(&a.table)?;
            let q = parse(&a.sql, Some(table.schema()))?;
            let d = execute(&q, &table)?;
            writeln!(out, "{}", render_denotation(&d, &a.separator)).map_err(stdout_err)
        }
        Command::Parse(a) => {
            let table = a.table.as_deref().map(load_table_auto).transpose()?;
            let q = parse(&a.sql, table.as_ref().map(|t| t.schema()))?;
            writeln!(out, "{}\nelements: {}", print_canonical(&q), element_stream(&q).len()).map_err(stdout_err)
        }
        Command::Linearize(a) => {
            let table = load_table_auto(&a.table)?;
            let text = match &a.sentence {
                None => flatten_table(&table)?,
                Some(s) => {
                    let table = match a.max_chars {
                        Some(budget) => truncate_rows(&table, budget, s)?,
                        None => table,
                    };
                    build_source(s, &table)?.text
                }
            };
            writeln!(out, "{text}").map_err(stdout_err)
        }
        Command::Classify(a) => {
            let q = parse(&a.sql, None)?;
            let tags: Vec<&str> = tag_operators(&q).into_iter().map(|t| t.name()).collect();
            writeln!(out, "{}\n{}", classify_difficulty(&q), tags.join(",")).map_err(stdout_err)
        }
        Command::Stats(a) => {
            let mut report = StatsReport::default();
            for r in jsonl_records(&a.corpus)? {
                report.add(&r?);
            }
            let text = match a.format {
                OutputFormat::Text => stats_text(&report),
                OutputFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
            };
            out.write_all(text.as_bytes()).map_err(stdout_err)
        }
        Command::Split(a) => {
            let records = read_jsonl(&a.corpus)?;
            let (train, holdout) = split_holdout(records, a.fraction, a.seed)?;
            let train_path = a.train.unwrap_or_else(|| sibling(&a.corpus, "train"));
            let holdout_path = a.holdout.unwrap_or_else(|| sibling(&a.corpus, "holdout"));
            write_jsonl(&train, &train_path)?;
            write_jsonl(&holdout, &holdout_path)?;
            let tables = |rs: &[sqlsynth_core::synth::CorpusRecord]| rs.iter().map(|r| &r.table_id).collect::<BTreeSet<_>>().len();
            writeln!(
                out,
                "train\t{}\t{}\t{}\nholdout\t{}\t{}\t{}",
                train.len(),
                tables(&train),
                train_path.display(),
                holdout.len(),
                tables(&holdout),
                holdout_path.display()
            )
            .map_err(stdout_err)
        }
        Command::Eval(a) => {
            let preds = read_lines(&a.pred)?;
            let gold = read_jsonl(&a.gold)?;
            let by: BTreeSet<Breakdown> = a
                .by
                .iter()
                .map(|b| match b {
                    ByArg::Difficulty => Breakdown::Difficulty,
                    ByArg::Operator => Breakdown::Operator,
                })
                .collect();
            let mode = if a.strict { MatchMode::Strict } else { MatchMode::Normalized };
            let report = score(&preds, &gold, &by, mode, &a.separator)?;
            let text = match a.format {
                OutputFormat::Text => eval_text(&report),
                OutputFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
            };
            out.write_all(text.as_bytes()).map_err(stdout_err)
        }
    }
}

/// `dir/name.jsonl` -> `dir/name.<tag>.jsonl`
fn sibling(corpus: &Path, tag: &str) -> PathBuf {
    let stem = corpus.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into());
    corpus.with_file_name(format!("{stem}.{tag}.jsonl"))
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<(), Error> {
    let mut config = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?;
            serde_json::from_str::<SynthesisConfig>(&text)
                .map_err(|e| Error::Format { path: p.clone(), row: None, message: format!("bad config: {e}") })?
        }
        None => SynthesisConfig::default(),
    };
    if let Some(n) = a.count {
        config.target_count = n;
    }
    if let Some(s) = a.seed {
        config.global_seed = s;
    }
    if a.dedup {
        config.dedup = true;
    }
    if a.no_dedup {
        config.dedup = false;
    }
    if a.mix.is_some() {
        config.difficulty_mix = a.mix;
    }
    if a.max_chars.is_some() {
        config.max_source_chars = a.max_chars;
    }
    if let Some(m) = a.max_attempts {
        config.max_attempts_per_record = m;
    }
    if let Some(s) = a.separator {
        config.separator = s;
    }
    let tables = load_tables_dir(&a.tables)?;
    let templates = load_templates(&a.templates)?;
    let jobs = a.jobs.unwrap_or_else(default_jobs);

    let mut tmp = a.out.clone().into_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let file = std::fs::File::create(&tmp).map_err(io(&tmp))?;
    let mut writer = JsonlWriter::new(file);
    let result = synthesize_parallel(&tables, &templates, config, jobs, |r| writer.write(&r).map_err(io(&tmp)))
        .and_then(|n| writer.finish().map(|_| n).map_err(io(&tmp)));
    match result {
        Ok(n) => {
            std::fs::rename(&tmp, &a.out).map_err(io(&a.out))?;
            writeln!(out, "{n}").map_err(stdout_err)
        }
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}
