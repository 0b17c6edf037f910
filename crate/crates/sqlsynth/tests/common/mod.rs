#![allow(dead_code)]

pub mod sqlite;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqlsynth::io::{load_templates, table_to_csv};
use sqlsynth_core::table::Table;
use sqlsynth_core::template::QueryTemplate;
use sqlsynth_core::testkit::random_table_with;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn templates_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../templates/default.tsv")
}

pub fn default_templates() -> Vec<QueryTemplate> {
    load_templates(&templates_path()).expect("default templates load")
}

/// `n` random tables with ids `g000`, `g001`, ...
pub fn generated_tables(n: usize, seed: u64, max_rows: usize, max_cols: usize, binary_exact: bool) -> Vec<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_table_with(&mut rng, &format!("g{i:03}"), max_rows, max_cols, binary_exact)).collect()
}

pub fn write_tables(dir: &Path, tables: &[Table]) {
    std::fs::create_dir_all(dir).unwrap();
    for t in tables {
        std::fs::write(dir.join(format!("{}.csv", t.id())), table_to_csv(t)).unwrap();
    }
}

/// Runs the CLI in-process.
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sqlsynth").chain(args.iter().copied());
    let code = sqlsynth::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Runs the built binary.
pub fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqlsynth")).args(args).output().expect("binary runs")
}

/// Peak resident set size of this process in bytes, where the platform
/// reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
