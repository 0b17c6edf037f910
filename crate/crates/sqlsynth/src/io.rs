//! Tables, templates and corpora on disk.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sqlsynth_core::synth::CorpusRecord;
use sqlsynth_core::table::{Table, TableError};
use sqlsynth_core::template::{parse_template_file, QueryTemplate, TemplateError};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> Option<TableFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(TableFormat::Csv),
            "json" => Some(TableFormat::Json),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, e: TableError) -> Error {
    let TableError::Format { row, message } = e;
    Error::Format { path: path.to_path_buf(), row, message }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads a table; the id is the file stem unless a JSON file names one.
pub fn load_table(path: &Path, format: TableFormat) -> Result<Table, Error> {
    let mut text = String::new();
    File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(io_err(path))?;
    match format {
        TableFormat::Csv => parse_csv_table(&stem(path), &text).map_err(|e| match e {
            Error::Format { row, message, .. } => Error::Format { path: path.to_path_buf(), row, message },
            other => other,
        }),
        TableFormat::Json => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct JsonTable {
                header: Vec<String>,
                rows: Vec<Vec<String>>,
                id: Option<String>,
            }
            let t: JsonTable = serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                row: None,
                message: format!("malformed JSON table: {e}"),
            })?;
            let id = t.id.unwrap_or_else(|| stem(path));
            Table::from_raw(id, &t.header, &t.rows).map_err(|e| format_err(path, e))
        }
    }
}

/// Loads a table, picking the format from the file extension.
pub fn load_table_auto(path: &Path) -> Result<Table, Error> {
    let format = TableFormat::from_path(path).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        row: None,
        message: "unknown table format (expected .csv or .json)".into(),
    })?;
    load_table(path, format)
}

/// CSV text to a table: first record is the header row.
pub fn parse_csv_table(id: &str, text: &str) -> Result<Table, Error> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format {
            path: PathBuf::new(),
            // record 0 is the header
            row: (i > 0).then_some(i),
            message: format!("malformed CSV: {e}"),
        })?;
        records.push(rec.iter().map(String::from).collect::<Vec<_>>());
    }
    let Some((header, rows)) = records.split_first() else {
        return Err(Error::Format { path: PathBuf::new(), row: None, message: "missing header row".into() });
    };
    Table::from_raw(id, header, rows).map_err(|e| format_err(Path::new(""), e))
}

/// The table as CSV, header first, cells in display form.
pub fn table_to_csv(table: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.headers()).expect("writing to memory");
    for row in table.display_rows() {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

/// Every `.csv` and `.json` file in `dir`, in file-name order.
pub fn load_tables_dir(dir: &Path) -> Result<Vec<Table>, Error> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.is_file() && TableFormat::from_path(p).is_some());
    paths.sort();
    let mut tables = Vec::with_capacity(paths.len());
    let mut ids = std::collections::HashSet::new();
    for p in paths {
        let t = load_table_auto(&p)?;
        if !ids.insert(t.id().to_string()) {
            return Err(Error::Format { path: p, row: None, message: format!("duplicate table id {:?}", t.id()) });
        }
        tables.push(t);
    }
    Ok(tables)
}

pub fn load_templates(path: &Path) -> Result<Vec<QueryTemplate>, Error> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_template_file(&text).map_err(|e: TemplateError| Error::Template { path: path.to_path_buf(), source: e })
}

/// Line-per-record JSON writer.
pub struct JsonlWriter<W: Write> {
    out: BufWriter<W>,
    count: u64,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        JsonlWriter { out: BufWriter::new(out), count: 0 }
    }

    pub fn write(&mut self, record: &CorpusRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| e.into_error())
    }
}

pub fn write_jsonl<'a>(records: impl IntoIterator<Item = &'a CorpusRecord>, path: &Path) -> Result<u64, Error> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = JsonlWriter::new(file);
    for r in records {
        w.write(r).map_err(io_err(path))?;
    }
    let n = w.count();
    w.finish().map_err(io_err(path))?;
    Ok(n)
}

/// Streams records from a JSONL file. Blank lines are skipped.
pub fn jsonl_records(path: &Path) -> Result<impl Iterator<Item = Result<CorpusRecord, Error>>, Error> {
    let file = File::open(path).map_err(io_err(path))?;
    let path = path.to_path_buf();
    Ok(BufReader::new(file).lines().enumerate().filter_map(move |(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(source) => return Some(Err(Error::Io { path: path.clone(), source })),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: path.clone(),
            line: i + 1,
            message: e.to_string(),
        }))
    }))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<CorpusRecord>, Error> {
    jsonl_records(path)?.collect()
}

/// Prediction lines, trailing `\r` removed.
pub fn read_lines(path: &Path) -> Result<Vec<String>, Error> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(String::from).collect())
}
