use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use super::SqlError;

pub const KEYWORDS: [&str; 18] = [
    "SELECT", "WHERE", "AND", "OR", "NOT", "IN", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT",
    "DISTINCT", "COUNT", "SUM", "AVG", "MIN", "MAX",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    NumberLit,
    StringLit,
    Operator,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlToken {
    pub kind: TokenKind,
    /// Keywords are upper-cased, string literals and quoted identifiers
    /// carry their unescaped contents.
    pub text: String,
    /// Character offsets into the input.
    pub span: Range<usize>,
    /// Set for back-quoted identifiers and identifiers matched against a
    /// supplied header list; such tokens never merge with neighbours.
    pub quoted: bool,
}

pub fn keyword(word: &str) -> Option<&'static str> {
    KEYWORDS.iter().copied().find(|k| k.eq_ignore_ascii_case(word))
}

pub fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '#'
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    headers: &'a [String],
}

/// Splits `sql` into tokens. When `headers` is given, header names that
/// contain spaces or punctuation are recognised unquoted by longest match.
pub fn tokenize(sql: &str, headers: Option<&[String]>) -> Result<Vec<SqlToken>, SqlError> {
    let mut lexer = Lexer { chars: sql.chars().collect(), pos: 0, headers: headers.unwrap_or(&[]) };
    let mut out = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        out.push(tok);
    }
    if out.is_empty() {
        return Err(SqlError::Lex { offset: 0, message: "empty query".into() });
    }
    Ok(out)
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn token(&self, kind: TokenKind, text: String, start: usize) -> SqlToken {
        SqlToken { kind, text, span: start..self.pos, quoted: false }
    }

    fn next_token(&mut self) -> Result<Option<SqlToken>, SqlError> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else { return Ok(None) };
        if let Some(tok) = self.header_match() {
            return Ok(Some(tok));
        }
        let tok = match c {
            '\'' | '"' => {
                let text = self.quoted(c)?;
                self.token(TokenKind::StringLit, text, start)
            }
            '`' => {
                let text = self.quoted('`')?;
                if text.trim().is_empty() {
                    return Err(SqlError::Lex { offset: start, message: "empty quoted identifier".into() });
                }
                let mut t = self.token(TokenKind::Identifier, text, start);
                t.quoted = true;
                t
            }
            c if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut text = String::new();
                while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                    text.push(d);
                    self.pos += 1;
                }
                if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                    text.push('.');
                    self.pos += 1;
                    while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                        text.push(d);
                        self.pos += 1;
                    }
                }
                if self.peek().is_some_and(is_ident_char) {
                    // `2k`, `1st` and friends are identifiers, not numbers
                    while let Some(d) = self.peek().filter(|c| is_ident_char(*c)) {
                        text.push(d);
                        self.pos += 1;
                    }
                    self.token(TokenKind::Identifier, text, start)
                } else {
                    self.token(TokenKind::NumberLit, text, start)
                }
            }
            c if is_ident_start(c) || c == '#' => {
                let mut text = String::new();
                while let Some(d) = self.peek().filter(|c| is_ident_char(*c)) {
                    text.push(d);
                    self.pos += 1;
                }
                match keyword(&text) {
                    Some(k) => self.token(TokenKind::Keyword, k.into(), start),
                    None => self.token(TokenKind::Identifier, text, start),
                }
            }
            '(' | ')' | ',' => {
                self.pos += 1;
                self.token(TokenKind::Punct, c.into(), start)
            }
            '=' | '+' | '-' | '*' | '/' => {
                self.pos += 1;
                self.token(TokenKind::Operator, c.into(), start)
            }
            '!' => {
                if self.peek_at(1) != Some('=') {
                    return Err(SqlError::Lex { offset: start, message: "expected '=' after '!'".into() });
                }
                self.pos += 2;
                self.token(TokenKind::Operator, "!=".into(), start)
            }
            '<' | '>' => {
                self.pos += 1;
                let text = match (c, self.peek()) {
                    ('<', Some('=')) | ('>', Some('=')) => {
                        self.pos += 1;
                        if c == '<' { "<=" } else { ">=" }
                    }
                    ('<', Some('>')) => {
                        self.pos += 1;
                        "!="
                    }
                    _ => {
                        if c == '<' { "<" } else { ">" }
                    }
                };
                self.token(TokenKind::Operator, text.into(), start)
            }
            other => {
                return Err(SqlError::Lex {
                    offset: start,
                    message: alloc::format!("illegal character {other:?}"),
                })
            }
        };
        Ok(Some(tok))
    }

    /// Reads a quoted run; the closing quote is escaped by doubling it.
    fn quoted(&mut self, quote: char) -> Result<String, SqlError> {
        let start = self.pos;
        self.pos += 1;
        let mut text = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(SqlError::Lex { offset: start, message: "unterminated quoted text".into() })
                }
                Some(c) if c == quote => {
                    if self.peek_at(1) == Some(quote) {
                        text.push(quote);
                        self.pos += 2;
                    } else {
                        self.pos += 1;
                        return Ok(text);
                    }
                }
                Some(c) => {
                    text.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    /// Longest header matching at the cursor, case-insensitively, ending on
    /// a word boundary. Plain single-word headers are left to the regular
    /// rules so that keywords keep their meaning.
    fn header_match(&mut self) -> Option<SqlToken> {
        let start = self.pos;
        let mut best: Option<(usize, &String)> = None;
        for h in self.headers {
            let simple = h.chars().next().is_some_and(is_ident_start) && h.chars().all(is_ident_char);
            if simple {
                continue;
            }
            let len = h.chars().count();
            if best.is_some_and(|(l, _)| l >= len) {
                continue;
            }
            let Some(window) = self.chars.get(start..start + len) else { continue };
            let same = window
                .iter()
                .zip(h.chars())
                .all(|(a, b)| a.to_lowercase().eq(b.to_lowercase()));
            let last_is_word = h.chars().last().is_some_and(is_ident_char);
            let boundary = !last_is_word || !self.chars.get(start + len).is_some_and(|c| is_ident_char(*c));
            if same && boundary {
                best = Some((len, h));
            }
        }
        let (len, h) = best?;
        self.pos += len;
        let mut tok = self.token(TokenKind::Identifier, h.clone(), start);
        tok.quoted = true;
        Some(tok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kinds(sql: &str) -> Vec<(TokenKind, String)> {
        tokenize(sql, None).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn select_date() {
        assert_eq!(
            kinds("SELECT Date"),
            vec![(TokenKind::Keyword, "SELECT".into()), (TokenKind::Identifier, "Date".into())]
        );
    }

    #[test]
    fn counts_non_punct_tokens() {
        let toks = tokenize("SELECT Name WHERE Age >= 28", None).unwrap();
        assert_eq!(toks.iter().filter(|t| t.kind != TokenKind::Punct).count(), 6);
    }

    #[test]
    fn unterminated_string_offset() {
        assert_eq!(
            tokenize("SELECT 'unterminated", None).unwrap_err(),
            SqlError::Lex { offset: 7, message: "unterminated quoted text".into() }
        );
    }

    #[test]
    fn keywords_case_insensitive() {
        assert_eq!(kinds("select")[0], (TokenKind::Keyword, "SELECT".into()));
    }

    #[test]
    fn doubled_quotes() {
        assert_eq!(kinds("'it''s'")[0], (TokenKind::StringLit, "it's".into()));
        assert_eq!(kinds("`a``b`")[0], (TokenKind::Identifier, "a`b".into()));
    }

    #[test]
    fn illegal_character() {
        assert!(matches!(tokenize("SELECT a ; b", None), Err(SqlError::Lex { offset: 9, .. })));
        assert!(matches!(tokenize("   ", None), Err(SqlError::Lex { .. })));
    }

    #[test]
    fn header_longest_match() {
        let headers = vec!["Chart".into(), "Chart Position".into(), "average speed (mph)".into()];
        let toks = tokenize("SELECT MAX(chart position) - MIN(Average Speed (mph))", Some(&headers)).unwrap();
        let idents: Vec<_> = toks.iter().filter(|t| t.kind == TokenKind::Identifier).map(|t| t.text.as_str()).collect();
        assert_eq!(idents, ["Chart Position", "average speed (mph)"]);
    }

    #[test]
    fn operators() {
        let ops: Vec<_> = kinds("a <> b <= c >= d != e < f > g")
            .into_iter()
            .filter(|(k, _)| *k == TokenKind::Operator)
            .map(|(_, t)| t)
            .collect();
        assert_eq!(ops, ["!=", "<=", ">=", "!=", "<", ">"]);
    }
}
