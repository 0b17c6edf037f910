//! Typed in-memory tables.
//!
//! A [`Table`] is immutable once built. Raw string grids from any source
//! format go through [`Table::from_raw`], which disambiguates headers,
//! checks row widths and assigns column types.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use rust_decimal::Decimal;

/// Errors raised while assembling a table from raw cells.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    /// Ragged rows, empty header names and similar structural defects.
    /// `row` is the 1-based data row index, when one applies.
    #[error("FormatError: {}{message}", row.map(|r| format!("row {r}: ")).unwrap_or_default())]
    Format { row: Option<usize>, message: String },
}

impl TableError {
    pub fn format(row: Option<usize>, message: impl Into<String>) -> Self {
        TableError::Format { row, message: message.into() }
    }
}

/// A single cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CellValue {
    Empty,
    Number(Decimal),
    Text(String),
}

impl CellValue {
    pub fn is_empty(&self) -> bool {
        matches!(self, CellValue::Empty)
    }

    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            CellValue::Number(d) => Some(*d),
            _ => None,
        }
    }

    /// Rendering used everywhere a cell becomes text: linearized tables,
    /// rendered denotations and SQL literals.
    pub fn display(&self) -> String {
        match self {
            CellValue::Empty => String::new(),
            CellValue::Number(d) => display_number(*d),
            CellValue::Text(s) => s.clone(),
        }
    }

    /// Key used for case-insensitive equality, grouping and DISTINCT.
    pub fn fold_key(&self) -> String {
        match self {
            CellValue::Empty => String::new(),
            CellValue::Number(d) => display_number(*d),
            CellValue::Text(s) => fold_text(s),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            CellValue::Empty => 0,
            CellValue::Number(_) => 1,
            CellValue::Text(_) => 2,
        }
    }

    /// Sort order used by ORDER BY: Empty first, numbers by value, text
    /// case-insensitively. Case variants of the same text compare equal so
    /// that the caller's stable sort falls back to row order.
    pub fn sort_cmp(&self, other: &CellValue) -> Ordering {
        match (self, other) {
            (CellValue::Number(a), CellValue::Number(b)) => a.cmp(b),
            (CellValue::Text(a), CellValue::Text(b)) => cmp_folded(a, b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Ord for CellValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_cmp(other).then_with(|| match (self, other) {
            (CellValue::Text(a), CellValue::Text(b)) => a.cmp(b),
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for CellValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

/// Shortest rendering without trailing zeros; integers carry no decimal point.
pub fn display_number(d: Decimal) -> String {
    if d.is_zero() {
        return "0".into();
    }
    d.normalize().to_string()
}

/// Case-folded, whitespace-trimmed text.
pub fn fold_text(s: &str) -> String {
    s.trim().chars().flat_map(char::to_lowercase).collect()
}

fn cmp_folded(a: &str, b: &str) -> Ordering {
    a.chars()
        .flat_map(char::to_lowercase)
        .cmp(b.chars().flat_map(char::to_lowercase))
}

/// Parses a plain decimal number: optional sign, digits with optional
/// well-formed thousands separators, optional fractional part. Exponents,
/// suffixes like `2k` and anything else yield `None`.
pub fn parse_number(raw: &str) -> Option<Decimal> {
    let s = raw.trim();
    let (sign, body) = match s.as_bytes().first()? {
        b'-' => ("-", &s[1..]),
        b'+' => ("", &s[1..]),
        _ => ("", s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let digits: String = if int_part.contains(',') {
        let mut groups = int_part.split(',');
        let head = groups.next()?;
        if head.is_empty() || head.len() > 3 || !head.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut out = String::from(head);
        for g in groups {
            if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            out.push_str(g);
        }
        out
    } else {
        if !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        int_part.into()
    };
    if digits.is_empty() && frac_part.is_none() {
        return None;
    }
    let mut text = String::from(sign);
    text.push_str(if digits.is_empty() { "0" } else { &digits });
    if let Some(f) = frac_part {
        text.push('.');
        text.push_str(f);
    }
    Decimal::from_str(&text).ok().map(|d| d.normalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ColumnType {
    NumberCol,
    TextCol,
}

/// A column is numeric iff it has at least one non-empty cell and every
/// non-empty cell parses as a number.
pub fn infer_column_types<S: AsRef<str>>(raw_columns: &[Vec<S>]) -> Vec<ColumnType> {
    raw_columns.iter().map(|col| infer_column_type(col)).collect()
}

fn infer_column_type<S: AsRef<str>>(cells: &[S]) -> ColumnType {
    let mut seen = false;
    for c in cells {
        let c = c.as_ref();
        if c.trim().is_empty() {
            continue;
        }
        if parse_number(c).is_none() {
            return ColumnType::TextCol;
        }
        seen = true;
    }
    if seen {
        ColumnType::NumberCol
    } else {
        ColumnType::TextCol
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    id: String,
    headers: Vec<String>,
    column_types: Vec<ColumnType>,
    rows: Vec<Vec<CellValue>>,
}

impl Table {
    /// Builds a table from raw strings. Headers are trimmed and
    /// case-insensitive duplicates receive `_2`, `_3`, ... suffixes.
    pub fn from_raw<H, C>(id: impl Into<String>, headers: &[H], rows: &[Vec<C>]) -> Result<Table, TableError>
    where
        H: AsRef<str>,
        C: AsRef<str>,
    {
        let width = headers.len();
        if width == 0 {
            return Err(TableError::format(None, "missing header row"));
        }
        let headers = disambiguate_headers(headers)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TableError::format(
                    Some(i + 1),
                    format!("expected {width} cells, found {}", row.len()),
                ));
            }
        }
        let columns: Vec<Vec<&str>> = (0..width)
            .map(|j| rows.iter().map(|r| r[j].as_ref()).collect())
            .collect();
        let column_types = infer_column_types(&columns);
        let rows = rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&column_types)
                    .map(|(raw, ty)| make_cell(raw.as_ref(), *ty))
                    .collect()
            })
            .collect();
        Ok(Table { id: id.into(), headers, column_types, rows })
    }

    /// Builds a table from already-typed parts, checking every invariant.
    pub fn new(
        id: impl Into<String>,
        headers: Vec<String>,
        column_types: Vec<ColumnType>,
        rows: Vec<Vec<CellValue>>,
    ) -> Result<Table, TableError> {
        if headers.is_empty() {
            return Err(TableError::format(None, "missing header row"));
        }
        if column_types.len() != headers.len() {
            return Err(TableError::format(None, "column type count differs from header count"));
        }
        let headers = disambiguate_headers(&headers)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != headers.len() {
                return Err(TableError::format(
                    Some(i + 1),
                    format!("expected {} cells, found {}", headers.len(), row.len()),
                ));
            }
            for (cell, ty) in row.iter().zip(&column_types) {
                let ok = match (ty, cell) {
                    (_, CellValue::Empty) => true,
                    (ColumnType::NumberCol, CellValue::Number(_)) => true,
                    (ColumnType::TextCol, CellValue::Text(t)) => !t.is_empty(),
                    _ => false,
                };
                if !ok {
                    return Err(TableError::format(Some(i + 1), "cell does not match its column type"));
                }
            }
        }
        Ok(Table { id: id.into(), headers, column_types, rows })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn column_types(&self) -> &[ColumnType] {
        &self.column_types
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn width(&self) -> usize {
        self.headers.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Case-insensitive header lookup.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        let wanted = fold_text(name);
        self.headers.iter().position(|h| fold_text(h) == wanted)
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = &CellValue> {
        self.rows.iter().map(move |r| &r[index])
    }

    /// Same table restricted to its first `n` rows.
    pub fn with_row_prefix(&self, n: usize) -> Table {
        Table {
            id: self.id.clone(),
            headers: self.headers.clone(),
            column_types: self.column_types.clone(),
            rows: self.rows[..n.min(self.rows.len())].to_vec(),
        }
    }

    /// Display strings of every row, the shape CSV writers expect.
    pub fn display_rows(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(|r| r.iter().map(CellValue::display).collect()).collect()
    }
}

fn make_cell(raw: &str, ty: ColumnType) -> CellValue {
    if raw.trim().is_empty() {
        return CellValue::Empty;
    }
    match ty {
        ColumnType::NumberCol => {
            CellValue::Number(parse_number(raw).expect("numeric column holds only numbers"))
        }
        ColumnType::TextCol => CellValue::Text(raw.into()),
    }
}

fn disambiguate_headers<H: AsRef<str>>(raw: &[H]) -> Result<Vec<String>, TableError> {
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    for (j, h) in raw.iter().enumerate() {
        let base = h.as_ref().trim();
        if base.is_empty() {
            return Err(TableError::format(None, format!("empty header in column {}", j + 1)));
        }
        let taken = |name: &str, out: &[String]| {
            let key = fold_text(name);
            out.iter().any(|o| fold_text(o) == key)
        };
        let mut name = String::from(base);
        let mut ordinal = 2;
        while taken(&name, &out) {
            name = format!("{base}_{ordinal}");
            ordinal += 1;
        }
        out.push(name);
    }
    Ok(out)
}
