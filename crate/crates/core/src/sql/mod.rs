//! The restricted single-table SQL dialect: lexer, parser, binder,
//! canonical printer and element stream. The grammar is written out in
//! `GRAMMAR.md` at the repository root.

mod ast;
mod elements;
mod parser;
mod printer;
mod token;

use alloc::string::String;

pub use ast::*;
pub use elements::{element_stream, Element};
pub use parser::{bind, parse};
pub(crate) use parser::{for_each_subquery, visit_aggregates};
pub use printer::{literal_text, print_canonical, quote_identifier, quote_string};
pub use token::{tokenize, SqlToken, TokenKind, KEYWORDS};

use crate::table::{fold_text, ColumnType, Table};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlError {
    #[error("LexError at offset {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("BindError: {0}")]
    Bind(String),
}

impl SqlError {
    pub fn kind(&self) -> &'static str {
        match self {
            SqlError::Lex { .. } => "LexError",
            SqlError::Parse(_) => "ParseError",
            SqlError::Bind(_) => "BindError",
        }
    }
}

/// Header names and column types a query binds against.
#[derive(Debug, Clone, Copy)]
pub struct Schema<'a> {
    pub headers: &'a [String],
    pub types: &'a [ColumnType],
}

impl<'a> Schema<'a> {
    pub fn new(headers: &'a [String], types: &'a [ColumnType]) -> Self {
        Schema { headers, types }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        let wanted = fold_text(name);
        self.headers.iter().position(|h| fold_text(h) == wanted)
    }
}

impl Table {
    pub fn schema(&self) -> Schema<'_> {
        Schema::new(self.headers(), self.column_types())
    }
}
