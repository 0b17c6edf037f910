use alloc::string::String;
use core::fmt::{self, Write};

use super::ast::*;
use super::token::{is_ident_char, is_ident_start, keyword};
use crate::table::display_number;

/// Canonical single-line rendering: upper-case keywords, double-quoted
/// strings, back-quoted identifiers where a bare one would not lex back.
pub fn print_canonical(query: &SqlQuery) -> String {
    let mut out = String::new();
    write_query(&mut out, query).expect("writing to a String cannot fail");
    out
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_query(f, self)
    }
}

/// Identifier as it must appear in query text.
pub fn quote_identifier(name: &str) -> String {
    let bare = name.chars().next().is_some_and(is_ident_start)
        && name.chars().all(is_ident_char)
        && keyword(name).is_none();
    if bare {
        name.into()
    } else {
        let mut s = String::with_capacity(name.len() + 2);
        s.push('`');
        for c in name.chars() {
            if c == '`' {
                s.push('`');
            }
            s.push(c);
        }
        s.push('`');
        s
    }
}

pub fn quote_string(text: &str) -> String {
    let mut s = String::with_capacity(text.len() + 2);
    s.push('"');
    for c in text.chars() {
        if c == '"' {
            s.push('"');
        }
        s.push(c);
    }
    s.push('"');
    s
}

pub fn literal_text(lit: &Literal) -> String {
    match lit {
        Literal::Number(d) => display_number(*d),
        Literal::Text(t) => quote_string(t),
    }
}

fn write_query(w: &mut dyn Write, q: &SqlQuery) -> fmt::Result {
    w.write_str("SELECT ")?;
    for (i, p) in q.projection.iter().enumerate() {
        if i > 0 {
            w.write_str(", ")?;
        }
        match p {
            SelectExpr::Column(c) => w.write_str(&quote_identifier(c))?,
            SelectExpr::Scalar(s) => write_scalar(w, s, 0)?,
            SelectExpr::Compare(l, op, r) => {
                write_scalar(w, l, 0)?;
                write!(w, " {} ", op.symbol())?;
                write_scalar(w, r, 0)?;
            }
        }
    }
    if let Some(c) = &q.where_clause {
        w.write_str(" WHERE ")?;
        write_condition(w, c, 0)?;
    }
    if let Some(g) = &q.group_by {
        write!(w, " GROUP BY {}", quote_identifier(g))?;
    }
    if let Some(o) = &q.order_by {
        w.write_str(" ORDER BY ")?;
        match &o.key {
            OrderKey::Column(c) => w.write_str(&quote_identifier(c))?,
            OrderKey::Aggregate(a) => write_aggregate(w, a)?,
        }
        w.write_str(match o.direction {
            Direction::Asc => " ASC",
            Direction::Desc => " DESC",
        })?;
    }
    if let Some(n) = q.limit {
        write!(w, " LIMIT {n}")?;
    }
    Ok(())
}

fn write_aggregate(w: &mut dyn Write, a: &Aggregate) -> fmt::Result {
    write!(w, "{}(", a.func.keyword())?;
    if a.distinct {
        w.write_str("DISTINCT ")?;
    }
    match &a.target {
        AggTarget::Star => w.write_str("*")?,
        AggTarget::Column(c) => w.write_str(&quote_identifier(c))?,
    }
    w.write_str(")")
}

/// `min_prec` is the binding strength the context demands; operators
/// weaker than that get parenthesised.
fn write_scalar(w: &mut dyn Write, s: &ScalarExpr, min_prec: u8) -> fmt::Result {
    match s {
        ScalarExpr::Literal(l) => w.write_str(&literal_text(l)),
        ScalarExpr::Aggregate(a) => write_aggregate(w, a),
        ScalarExpr::Subquery(q) => {
            w.write_str("(")?;
            write_query(w, q)?;
            w.write_str(")")
        }
        ScalarExpr::Arith(l, op, r) => {
            let prec = op.precedence();
            let parens = prec < min_prec;
            if parens {
                w.write_str("(")?;
            }
            write_scalar(w, l, prec)?;
            write!(w, " {} ", op.symbol())?;
            write_scalar(w, r, prec + 1)?;
            if parens {
                w.write_str(")")?;
            }
            Ok(())
        }
    }
}

fn condition_prec(c: &Condition) -> u8 {
    match c {
        Condition::Or(..) => 1,
        Condition::And(..) => 2,
        Condition::Not(_) => 3,
        _ => 4,
    }
}

fn write_condition(w: &mut dyn Write, c: &Condition, min_prec: u8) -> fmt::Result {
    let prec = condition_prec(c);
    let parens = prec < min_prec;
    if parens {
        w.write_str("(")?;
    }
    match c {
        Condition::Compare { column, op, rhs } => {
            write!(w, "{} {} ", quote_identifier(column), op.symbol())?;
            match rhs {
                CompareRhs::Literal(l) => w.write_str(&literal_text(l))?,
                CompareRhs::Subquery(q) => {
                    w.write_str("(")?;
                    write_query(w, q)?;
                    w.write_str(")")?;
                }
            }
        }
        Condition::InList { column, values } => {
            write!(w, "{} IN (", quote_identifier(column))?;
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    w.write_str(", ")?;
                }
                w.write_str(&literal_text(v))?;
            }
            w.write_str(")")?;
        }
        Condition::And(a, b) | Condition::Or(a, b) => {
            write_condition(w, a, prec)?;
            w.write_str(if prec == 2 { " AND " } else { " OR " })?;
            write_condition(w, b, prec + 1)?;
        }
        Condition::Not(a) => {
            w.write_str("NOT ")?;
            write_condition(w, a, prec)?;
        }
    }
    if parens {
        w.write_str(")")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Schema};
    use super::*;
    use crate::table::ColumnType;
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn roundtrip(sql: &str) -> String {
        let q = parse(sql, None).unwrap();
        let printed = print_canonical(&q);
        assert_eq!(parse(&printed, None).unwrap(), q, "{printed}");
        printed
    }

    #[test]
    fn preserves_header_case() {
        let headers: Vec<String> = vec!["Date".to_string()];
        let types = vec![ColumnType::TextCol];
        let q = parse("select date", Some(Schema::new(&headers, &types))).unwrap();
        assert_eq!(print_canonical(&q), "SELECT Date");
    }

    #[test]
    fn subquery_is_parenthesised() {
        assert_eq!(
            roundtrip("select nation where gold = (select gold where nation = 'Japan')"),
            "SELECT nation WHERE gold = (SELECT gold WHERE nation = \"Japan\")"
        );
    }

    #[test]
    fn count_distinct_wrapper_normalised() {
        assert_eq!(roundtrip("SELECT (SELECT COUNT( Distinct Area)) >= 5"), "SELECT COUNT(DISTINCT Area) >= 5");
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(roundtrip("SELECT a WHERE (b = 1 OR c = 2) AND NOT (d = 3 AND e = 4)"),
            "SELECT a WHERE (b = 1 OR c = 2) AND NOT (d = 3 AND e = 4)");
        assert_eq!(roundtrip("SELECT a WHERE b = 1 AND (c = 2 AND d = 3)"), "SELECT a WHERE b = 1 AND (c = 2 AND d = 3)");
        assert_eq!(roundtrip("SELECT MAX(a) - (MIN(a) - 1)"), "SELECT MAX(a) - (MIN(a) - 1)");
        assert_eq!(roundtrip("SELECT (MAX(a) + 1) * 2"), "SELECT (MAX(a) + 1) * 2");
        assert_eq!(roundtrip("select x order by y"), "SELECT x ORDER BY y ASC");
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_identifier("Year"), "Year");
        assert_eq!(quote_identifier("Pick#"), "Pick#");
        assert_eq!(quote_identifier("pick #"), "`pick #`");
        assert_eq!(quote_identifier("Count"), "`Count`");
        assert_eq!(quote_identifier("a`b"), "`a``b`");
        assert_eq!(quote_string("say \"hi\""), "\"say \"\"hi\"\"\"");
        roundtrip("SELECT `pick #` WHERE `a``b` = \"say \"\"hi\"\"\"");
    }
}
