use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use rust_decimal::Decimal;

use super::ast::*;
use super::token::{tokenize, SqlToken, TokenKind};
use super::{Schema, SqlError};
use crate::table::{fold_text, ColumnType};

/// Parses one dialect query. With a schema, column references are resolved
/// to the exact header spelling and type restrictions are enforced.
pub fn parse(sql: &str, schema: Option<Schema<'_>>) -> Result<SqlQuery, SqlError> {
    let tokens = tokenize(sql, schema.map(|s| s.headers))?;
    let mut parser = Parser { tokens, pos: 0 };
    let query = parser.query()?;
    if let Some(tok) = parser.tokens.get(parser.pos) {
        return Err(SqlError::Parse(format!("unexpected {:?} after end of query", tok.text)));
    }
    validate(&query)?;
    match schema {
        Some(schema) => bind(query, schema),
        None => Ok(query),
    }
}

struct Parser {
    tokens: Vec<SqlToken>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&SqlToken> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == kind && t.text == text)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        self.peek_is(TokenKind::Keyword, kw)
    }

    fn eat(&mut self, kind: TokenKind, text: &str) -> bool {
        if self.peek_is(kind, text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<(), SqlError> {
        if self.eat(kind, text) {
            Ok(())
        } else {
            Err(self.unexpected(text))
        }
    }

    fn unexpected(&self, expected: &str) -> SqlError {
        match self.peek() {
            Some(t) => SqlError::Parse(format!("expected {expected}, found {:?} at offset {}", t.text, t.span.start)),
            None => SqlError::Parse(format!("expected {expected}, found end of input")),
        }
    }

    fn query(&mut self) -> Result<SqlQuery, SqlError> {
        self.expect(TokenKind::Keyword, "SELECT")?;
        let mut projection = Vec::new();
        if self.peek().is_none() || self.peek().is_some_and(|t| t.kind == TokenKind::Keyword && is_clause_keyword(&t.text)) {
            return Err(SqlError::Parse("empty projection".into()));
        }
        loop {
            projection.push(self.select_item()?);
            if !self.eat(TokenKind::Punct, ",") {
                break;
            }
        }
        let where_clause = if self.eat(TokenKind::Keyword, "WHERE") { Some(self.condition()?) } else { None };
        let group_by = if self.eat(TokenKind::Keyword, "GROUP") {
            self.expect(TokenKind::Keyword, "BY")?;
            Some(self.column()?)
        } else {
            None
        };
        let order_by = if self.eat(TokenKind::Keyword, "ORDER") {
            self.expect(TokenKind::Keyword, "BY")?;
            let key = if self.peek().is_some_and(|t| t.kind == TokenKind::Keyword && AggFunc::from_keyword(&t.text).is_some()) {
                OrderKey::Aggregate(self.aggregate()?)
            } else {
                OrderKey::Column(self.column()?)
            };
            let direction = if self.eat(TokenKind::Keyword, "DESC") {
                Direction::Desc
            } else {
                self.eat(TokenKind::Keyword, "ASC");
                Direction::Asc
            };
            Some(OrderBy { key, direction })
        } else {
            None
        };
        let limit = if self.eat(TokenKind::Keyword, "LIMIT") {
            let tok = self.peek().cloned().ok_or_else(|| self.unexpected("LIMIT count"))?;
            let n = (tok.kind == TokenKind::NumberLit)
                .then(|| tok.text.parse::<u64>().ok())
                .flatten()
                .filter(|n| *n >= 1)
                .ok_or_else(|| SqlError::Parse(format!("LIMIT needs a positive integer, found {:?}", tok.text)))?;
            self.pos += 1;
            Some(n)
        } else {
            None
        };
        Ok(SqlQuery { projection, where_clause, group_by, order_by, limit })
    }

    fn select_item(&mut self) -> Result<SelectExpr, SqlError> {
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            return Ok(SelectExpr::Column(self.column()?));
        }
        let left = self.scalar()?;
        match self.cmp_op() {
            Some(op) => {
                let right = self.scalar()?;
                Ok(SelectExpr::Compare(left, op, right))
            }
            None => Ok(SelectExpr::Scalar(left)),
        }
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = self.peek().filter(|t| t.kind == TokenKind::Operator).and_then(|t| CmpOp::from_symbol(&t.text))?;
        self.pos += 1;
        Some(op)
    }

    fn arith_op(&mut self, precedence: u8) -> Option<ArithOp> {
        let op = match self.peek().filter(|t| t.kind == TokenKind::Operator)?.text.as_str() {
            "+" => ArithOp::Add,
            "-" => ArithOp::Sub,
            "*" => ArithOp::Mul,
            "/" => ArithOp::Div,
            _ => return None,
        };
        if op.precedence() != precedence {
            return None;
        }
        self.pos += 1;
        Some(op)
    }

    fn scalar(&mut self) -> Result<ScalarExpr, SqlError> {
        let mut left = self.term()?;
        while let Some(op) = self.arith_op(1) {
            let right = self.term()?;
            left = ScalarExpr::Arith(Box::new(left), op, Box::new(right));
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<ScalarExpr, SqlError> {
        let mut left = self.factor()?;
        while let Some(op) = self.arith_op(2) {
            let right = self.factor()?;
            left = ScalarExpr::Arith(Box::new(left), op, Box::new(right));
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<ScalarExpr, SqlError> {
        let Some(tok) = self.peek() else { return Err(self.unexpected("expression")) };
        match tok.kind {
            TokenKind::Keyword if AggFunc::from_keyword(&tok.text).is_some() => {
                Ok(ScalarExpr::Aggregate(self.aggregate()?))
            }
            TokenKind::Punct if tok.text == "(" => {
                self.pos += 1;
                let inner = if self.peek_keyword("SELECT") {
                    simplify_subquery(self.query()?)
                } else {
                    self.scalar()?
                };
                self.expect(TokenKind::Punct, ")")?;
                Ok(inner)
            }
            TokenKind::NumberLit | TokenKind::StringLit => Ok(ScalarExpr::Literal(self.literal()?)),
            TokenKind::Operator if tok.text == "-" => Ok(ScalarExpr::Literal(self.literal()?)),
            TokenKind::Identifier => Err(SqlError::Parse(format!(
                "column {:?} used where a single value is required",
                tok.text
            ))),
            _ => Err(self.unexpected("expression")),
        }
    }

    fn aggregate(&mut self) -> Result<Aggregate, SqlError> {
        let tok = self.peek().cloned().ok_or_else(|| self.unexpected("aggregate"))?;
        let func = AggFunc::from_keyword(&tok.text).ok_or_else(|| self.unexpected("aggregate"))?;
        self.pos += 1;
        self.expect(TokenKind::Punct, "(")?;
        let distinct = self.eat(TokenKind::Keyword, "DISTINCT");
        let target = if self.eat(TokenKind::Operator, "*") {
            AggTarget::Star
        } else {
            AggTarget::Column(self.column()?)
        };
        self.expect(TokenKind::Punct, ")")?;
        Ok(Aggregate { func, target, distinct })
    }

    fn literal(&mut self) -> Result<Literal, SqlError> {
        let negative = self.eat(TokenKind::Operator, "-");
        let tok = self.peek().cloned().ok_or_else(|| self.unexpected("literal"))?;
        let lit = match tok.kind {
            TokenKind::NumberLit => {
                let mut d = Decimal::from_str(&tok.text)
                    .map_err(|_| SqlError::Parse(format!("number {:?} out of range", tok.text)))?
                    .normalize();
                if negative {
                    d = -d;
                }
                Literal::Number(d.normalize())
            }
            TokenKind::StringLit if !negative => Literal::Text(tok.text.clone()),
            _ => return Err(self.unexpected("literal")),
        };
        self.pos += 1;
        Ok(lit)
    }

    /// Column reference: a quoted identifier, or a run of bare identifiers
    /// joined by single spaces (`Chart Position`).
    fn column(&mut self) -> Result<String, SqlError> {
        let first = self.peek().filter(|t| t.kind == TokenKind::Identifier).cloned().ok_or_else(|| self.unexpected("column"))?;
        self.pos += 1;
        if first.quoted {
            return Ok(first.text);
        }
        let mut name = first.text;
        while let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Identifier && !t.quoted) {
            name.push(' ');
            name.push_str(&t.text);
            self.pos += 1;
        }
        Ok(name)
    }

    fn condition(&mut self) -> Result<Condition, SqlError> {
        let mut left = self.and_condition()?;
        while self.eat(TokenKind::Keyword, "OR") {
            let right = self.and_condition()?;
            left = Condition::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_condition(&mut self) -> Result<Condition, SqlError> {
        let mut left = self.not_condition()?;
        while self.eat(TokenKind::Keyword, "AND") {
            let right = self.not_condition()?;
            left = Condition::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_condition(&mut self) -> Result<Condition, SqlError> {
        if self.eat(TokenKind::Keyword, "NOT") {
            return Ok(Condition::Not(Box::new(self.not_condition()?)));
        }
        if self.eat(TokenKind::Punct, "(") {
            let inner = self.condition()?;
            self.expect(TokenKind::Punct, ")")?;
            return Ok(inner);
        }
        let column = self.column()?;
        if self.eat(TokenKind::Keyword, "IN") {
            self.expect(TokenKind::Punct, "(")?;
            let mut values = Vec::new();
            loop {
                values.push(self.literal()?);
                if !self.eat(TokenKind::Punct, ",") {
                    break;
                }
            }
            self.expect(TokenKind::Punct, ")")?;
            return Ok(Condition::InList { column, values });
        }
        let op = self.cmp_op().ok_or_else(|| self.unexpected("comparison operator"))?;
        let rhs = if self.peek_is(TokenKind::Punct, "(") {
            self.pos += 1;
            let q = self.query()?;
            self.expect(TokenKind::Punct, ")")?;
            CompareRhs::Subquery(Box::new(q))
        } else {
            CompareRhs::Literal(self.literal()?)
        };
        Ok(Condition::Compare { column, op, rhs })
    }
}

fn is_clause_keyword(k: &str) -> bool {
    matches!(k, "WHERE" | "GROUP" | "ORDER" | "LIMIT")
}

/// `(SELECT COUNT(x))` with no clauses is the aggregate itself.
fn simplify_subquery(q: SqlQuery) -> ScalarExpr {
    let bare = q.where_clause.is_none() && q.group_by.is_none() && q.order_by.is_none() && q.limit.is_none();
    if bare && q.projection.len() == 1 {
        if let SelectExpr::Scalar(_) = &q.projection[0] {
            let Some(SelectExpr::Scalar(s)) = q.projection.into_iter().next() else { unreachable!() };
            return s;
        }
    }
    ScalarExpr::Subquery(Box::new(q))
}

/// Structural rules that hold with or without a schema.
pub(crate) fn validate(q: &SqlQuery) -> Result<(), SqlError> {
    let err = |m: &str| Err(SqlError::Parse(m.to_string()));
    if q.projection.is_empty() {
        return err("empty projection");
    }
    if q.limit == Some(0) {
        return err("LIMIT must be at least 1");
    }
    let columns = q.projection.iter().filter(|p| matches!(p, SelectExpr::Column(_))).count();
    let compares = q.projection.iter().filter(|p| matches!(p, SelectExpr::Compare(..))).count();
    if compares > 0 && (q.projection.len() > 1 || q.group_by.is_some()) {
        return err("a boolean comparison must be the only projection");
    }
    match &q.group_by {
        Some(g) => {
            for p in &q.projection {
                if let SelectExpr::Column(c) = p {
                    if fold_text(c) != fold_text(g) {
                        return Err(SqlError::Parse(format!("column {c:?} must appear in GROUP BY")));
                    }
                }
            }
            if let Some(OrderBy { key: OrderKey::Column(c), .. }) = &q.order_by {
                if fold_text(c) != fold_text(g) {
                    return err("ORDER BY in a grouped query must use the grouped column or an aggregate");
                }
            }
        }
        None => {
            if columns > 0 && columns < q.projection.len() {
                return err("mixing columns and aggregates requires GROUP BY");
            }
            if let Some(OrderBy { key: OrderKey::Aggregate(_), .. }) = &q.order_by {
                return err("ORDER BY an aggregate requires GROUP BY");
            }
        }
    }
    let mut result = Ok(());
    visit_aggregates(q, &mut |a| {
        if a.target == AggTarget::Star && (a.func != AggFunc::Count || a.distinct) {
            result = Err(SqlError::Parse(format!("{}(*) is not allowed", a.func.keyword())));
        }
    });
    result?;
    for_each_subquery(q, &mut |s| validate(s))
}

fn visit_scalar_aggregates(s: &ScalarExpr, f: &mut dyn FnMut(&Aggregate)) {
    match s {
        ScalarExpr::Aggregate(a) => f(a),
        ScalarExpr::Arith(l, _, r) => {
            visit_scalar_aggregates(l, f);
            visit_scalar_aggregates(r, f);
        }
        ScalarExpr::Literal(_) | ScalarExpr::Subquery(_) => {}
    }
}

/// Aggregates of this query level, not descending into subqueries.
pub(crate) fn visit_aggregates(q: &SqlQuery, f: &mut dyn FnMut(&Aggregate)) {
    for p in &q.projection {
        match p {
            SelectExpr::Column(_) => {}
            SelectExpr::Scalar(s) => visit_scalar_aggregates(s, f),
            SelectExpr::Compare(l, _, r) => {
                visit_scalar_aggregates(l, f);
                visit_scalar_aggregates(r, f);
            }
        }
    }
    if let Some(OrderBy { key: OrderKey::Aggregate(a), .. }) = &q.order_by {
        f(a);
    }
}

/// Direct subqueries of this level.
pub(crate) fn for_each_subquery<E>(
    q: &SqlQuery,
    f: &mut dyn FnMut(&SqlQuery) -> Result<(), E>,
) -> Result<(), E> {
    fn scalar<E>(s: &ScalarExpr, f: &mut dyn FnMut(&SqlQuery) -> Result<(), E>) -> Result<(), E> {
        match s {
            ScalarExpr::Subquery(q) => f(q),
            ScalarExpr::Arith(l, _, r) => {
                scalar(l, f)?;
                scalar(r, f)
            }
            _ => Ok(()),
        }
    }
    fn cond<E>(c: &Condition, f: &mut dyn FnMut(&SqlQuery) -> Result<(), E>) -> Result<(), E> {
        match c {
            Condition::Compare { rhs: CompareRhs::Subquery(q), .. } => f(q),
            Condition::Compare { .. } | Condition::InList { .. } => Ok(()),
            Condition::And(a, b) | Condition::Or(a, b) => {
                cond(a, f)?;
                cond(b, f)
            }
            Condition::Not(a) => cond(a, f),
        }
    }
    for p in &q.projection {
        match p {
            SelectExpr::Column(_) => {}
            SelectExpr::Scalar(s) => scalar(s, f)?,
            SelectExpr::Compare(l, _, r) => {
                scalar(l, f)?;
                scalar(r, f)?;
            }
        }
    }
    if let Some(w) = &q.where_clause {
        cond(w, f)?;
    }
    Ok(())
}

struct Binder<'a> {
    schema: Schema<'a>,
}

impl Binder<'_> {
    fn column(&self, name: &str) -> Result<(String, ColumnType), SqlError> {
        let idx = self
            .schema
            .column_index(name)
            .ok_or_else(|| SqlError::Bind(format!("unknown column {name:?}")))?;
        Ok((self.schema.headers[idx].clone(), self.schema.types[idx]))
    }

    fn query(&self, q: SqlQuery) -> Result<SqlQuery, SqlError> {
        let projection = q.projection.into_iter().map(|p| self.select(p)).collect::<Result<_, _>>()?;
        let where_clause = q.where_clause.map(|c| self.condition(c)).transpose()?;
        let group_by = q.group_by.map(|g| self.column(&g).map(|c| c.0)).transpose()?;
        let order_by = q
            .order_by
            .map(|o| {
                let key = match o.key {
                    OrderKey::Column(c) => OrderKey::Column(self.column(&c)?.0),
                    OrderKey::Aggregate(a) => OrderKey::Aggregate(self.aggregate(a)?),
                };
                Ok::<_, SqlError>(OrderBy { key, direction: o.direction })
            })
            .transpose()?;
        Ok(SqlQuery { projection, where_clause, group_by, order_by, limit: q.limit })
    }

    fn select(&self, p: SelectExpr) -> Result<SelectExpr, SqlError> {
        Ok(match p {
            SelectExpr::Column(c) => SelectExpr::Column(self.column(&c)?.0),
            SelectExpr::Scalar(s) => SelectExpr::Scalar(self.scalar(s)?),
            SelectExpr::Compare(l, op, r) => SelectExpr::Compare(self.scalar(l)?, op, self.scalar(r)?),
        })
    }

    fn scalar(&self, s: ScalarExpr) -> Result<ScalarExpr, SqlError> {
        Ok(match s {
            ScalarExpr::Literal(l) => ScalarExpr::Literal(l),
            ScalarExpr::Aggregate(a) => ScalarExpr::Aggregate(self.aggregate(a)?),
            ScalarExpr::Arith(l, op, r) => {
                ScalarExpr::Arith(Box::new(self.scalar(*l)?), op, Box::new(self.scalar(*r)?))
            }
            ScalarExpr::Subquery(q) => ScalarExpr::Subquery(Box::new(self.query(*q)?)),
        })
    }

    fn aggregate(&self, a: Aggregate) -> Result<Aggregate, SqlError> {
        let target = match a.target {
            AggTarget::Star => AggTarget::Star,
            AggTarget::Column(c) => {
                let (name, ty) = self.column(&c)?;
                if a.func != AggFunc::Count && ty == ColumnType::TextCol {
                    return Err(SqlError::Bind(format!("{} over text column {name:?}", a.func.keyword())));
                }
                AggTarget::Column(name)
            }
        };
        Ok(Aggregate { target, ..a })
    }

    fn condition(&self, c: Condition) -> Result<Condition, SqlError> {
        Ok(match c {
            Condition::Compare { column, op, rhs } => {
                let (column, ty) = self.column(&column)?;
                if ty == ColumnType::TextCol && !op.is_equality() {
                    return Err(SqlError::Bind(format!(
                        "comparison {} on text column {column:?}",
                        op.symbol()
                    )));
                }
                let rhs = match rhs {
                    CompareRhs::Literal(l) => CompareRhs::Literal(l),
                    CompareRhs::Subquery(q) => CompareRhs::Subquery(Box::new(self.query(*q)?)),
                };
                Condition::Compare { column, op, rhs }
            }
            Condition::InList { column, values } => Condition::InList { column: self.column(&column)?.0, values },
            Condition::And(a, b) => Condition::And(Box::new(self.condition(*a)?), Box::new(self.condition(*b)?)),
            Condition::Or(a, b) => Condition::Or(Box::new(self.condition(*a)?), Box::new(self.condition(*b)?)),
            Condition::Not(a) => Condition::Not(Box::new(self.condition(*a)?)),
        })
    }
}

/// Resolves every column of an already-parsed query against `schema`.
pub fn bind(query: SqlQuery, schema: Schema<'_>) -> Result<SqlQuery, SqlError> {
    let bound = Binder { schema }.query(query)?;
    validate(&bound)?;
    Ok(bound)
}
