//! Flattened table format fed to sequence-to-sequence models:
//!
//! ```text
//! [HEAD] : h1 | h2 | ... | hN [ROW] 1 : c1 | c2 | ... | cN [ROW] 2 : ...
//! ```
//!
//! The input prefix is the sentence (or SQL query) followed by one space.
//! Cell and header text containing `|`, `[HEAD]` or `[ROW]` is rewritten
//! (`|` to `/`, the markers to `/HEAD/` and `/ROW/`) so the markers stay
//! unambiguous.

use alloc::string::String;
use core::fmt::Write;
use core::ops::Range;

use crate::table::Table;

pub const HEAD_TOKEN: &str = "[HEAD]";
pub const ROW_TOKEN: &str = "[ROW]";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinearizeError {
    #[error("EmptyTableError: table has no columns")]
    EmptyTable,
    #[error("EmptySentenceError: sentence is empty")]
    EmptySentence,
    #[error("BudgetError: {needed} characters needed for the header alone, budget is {budget}")]
    Budget { needed: usize, budget: usize },
}

impl LinearizeError {
    pub fn kind(&self) -> &'static str {
        match self {
            LinearizeError::EmptyTable => "EmptyTableError",
            LinearizeError::EmptySentence => "EmptySentenceError",
            LinearizeError::Budget { .. } => "BudgetError",
        }
    }
}

/// Model input: sentence, one space, flattened table. Spans are character
/// offsets into `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizedSource {
    pub text: String,
    pub sentence_span: Range<usize>,
    pub table_span: Range<usize>,
}

/// Text with delimiter collisions rewritten.
pub fn escape_cell(text: &str) -> String {
    text.replace('|', "/").replace(HEAD_TOKEN, "/HEAD/").replace(ROW_TOKEN, "/ROW/")
}

fn write_row<'a>(out: &mut String, cells: impl Iterator<Item = &'a str>) {
    for (i, c) in cells.enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        out.push_str(&escape_cell(c));
    }
}

fn head_segment(table: &Table) -> String {
    let mut out = String::from("[HEAD] : ");
    write_row(&mut out, table.headers().iter().map(String::as_str));
    out
}

fn row_segment(index: usize, cells: &[crate::table::CellValue]) -> String {
    let mut out = String::new();
    write!(out, " [ROW] {} : ", index + 1).unwrap();
    let display: alloc::vec::Vec<String> = cells.iter().map(|c| c.display()).collect();
    write_row(&mut out, display.iter().map(String::as_str));
    out
}

pub fn flatten_table(table: &Table) -> Result<String, LinearizeError> {
    if table.width() == 0 {
        return Err(LinearizeError::EmptyTable);
    }
    let mut out = head_segment(table);
    for (i, row) in table.rows().iter().enumerate() {
        out.push_str(&row_segment(i, row));
    }
    out.truncate(out.trim_end().len());
    Ok(out)
}

pub fn build_source(sentence: &str, table: &Table) -> Result<LinearizedSource, LinearizeError> {
    let sentence = sentence.trim();
    if sentence.is_empty() {
        return Err(LinearizeError::EmptySentence);
    }
    let flat = flatten_table(table)?;
    let sentence_len = sentence.chars().count();
    let table_start = sentence_len + 1;
    let table_span = table_start..table_start + flat.chars().count();
    let mut text = String::with_capacity(sentence.len() + 1 + flat.len());
    text.push_str(sentence);
    text.push(' ');
    text.push_str(&flat);
    Ok(LinearizedSource { text, sentence_span: 0..sentence_len, table_span })
}

/// Keeps the longest row prefix whose source text fits in
/// `max_source_chars` characters. Columns are never dropped.
pub fn truncate_rows(table: &Table, max_source_chars: usize, sentence: &str) -> Result<Table, LinearizeError> {
    let sentence = sentence.trim();
    if sentence.is_empty() {
        return Err(LinearizeError::EmptySentence);
    }
    if table.width() == 0 {
        return Err(LinearizeError::EmptyTable);
    }
    let mut used = sentence.chars().count() + 1 + head_segment(table).trim_end().chars().count();
    if used > max_source_chars {
        return Err(LinearizeError::Budget { needed: used, budget: max_source_chars });
    }
    let mut keep = 0;
    for (i, row) in table.rows().iter().enumerate() {
        // only the final segment loses trailing whitespace, so the trimmed
        // length of the candidate prefix is what counts
        let seg = row_segment(i, row);
        let trimmed_total = used + seg.trim_end().chars().count();
        if trimmed_total > max_source_chars {
            break;
        }
        used += seg.chars().count();
        keep = i + 1;
    }
    Ok(if keep == table.len() { table.clone() } else { table.with_row_prefix(keep) })
}
