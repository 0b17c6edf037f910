use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;

/// One unit of query complexity: keywords (ORDER BY counts twice),
/// aggregate names, operators, column references, literals and LIMIT
/// counts. Parentheses, commas and `*` are not elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    Keyword(&'static str),
    Aggregate(AggFunc),
    Operator(&'static str),
    Column(String),
    Literal(Literal),
    LimitCount(u64),
}

/// Depth-first element stream of `query`.
pub fn element_stream(query: &SqlQuery) -> Vec<Element> {
    let mut out = Vec::new();
    query_elements(query, &mut out);
    out
}

fn query_elements(q: &SqlQuery, out: &mut Vec<Element>) {
    out.push(Element::Keyword("SELECT"));
    for p in &q.projection {
        match p {
            SelectExpr::Column(c) => out.push(Element::Column(c.clone())),
            SelectExpr::Scalar(s) => scalar_elements(s, out),
            SelectExpr::Compare(l, op, r) => {
                scalar_elements(l, out);
                out.push(Element::Operator(op.symbol()));
                scalar_elements(r, out);
            }
        }
    }
    if let Some(c) = &q.where_clause {
        out.push(Element::Keyword("WHERE"));
        condition_elements(c, out);
    }
    if let Some(g) = &q.group_by {
        out.push(Element::Keyword("GROUP"));
        out.push(Element::Keyword("BY"));
        out.push(Element::Column(g.clone()));
    }
    if let Some(o) = &q.order_by {
        out.push(Element::Keyword("ORDER"));
        out.push(Element::Keyword("BY"));
        match &o.key {
            OrderKey::Column(c) => out.push(Element::Column(c.clone())),
            OrderKey::Aggregate(a) => aggregate_elements(a, out),
        }
        out.push(Element::Keyword(match o.direction {
            Direction::Asc => "ASC",
            Direction::Desc => "DESC",
        }));
    }
    if let Some(n) = q.limit {
        out.push(Element::Keyword("LIMIT"));
        out.push(Element::LimitCount(n));
    }
}

fn aggregate_elements(a: &Aggregate, out: &mut Vec<Element>) {
    out.push(Element::Aggregate(a.func));
    if a.distinct {
        out.push(Element::Keyword("DISTINCT"));
    }
    if let AggTarget::Column(c) = &a.target {
        out.push(Element::Column(c.clone()));
    }
}

fn scalar_elements(s: &ScalarExpr, out: &mut Vec<Element>) {
    match s {
        ScalarExpr::Literal(l) => out.push(Element::Literal(l.clone())),
        ScalarExpr::Aggregate(a) => aggregate_elements(a, out),
        ScalarExpr::Arith(l, op, r) => {
            scalar_elements(l, out);
            out.push(Element::Operator(op.symbol()));
            scalar_elements(r, out);
        }
        ScalarExpr::Subquery(q) => query_elements(q, out),
    }
}

fn condition_elements(c: &Condition, out: &mut Vec<Element>) {
    match c {
        Condition::Compare { column, op, rhs } => {
            out.push(Element::Column(column.clone()));
            out.push(Element::Operator(op.symbol()));
            match rhs {
                CompareRhs::Literal(l) => out.push(Element::Literal(l.clone())),
                CompareRhs::Subquery(q) => query_elements(q, out),
            }
        }
        Condition::InList { column, values } => {
            out.push(Element::Column(column.clone()));
            out.push(Element::Keyword("IN"));
            out.extend(values.iter().cloned().map(Element::Literal));
        }
        Condition::And(a, b) => {
            condition_elements(a, out);
            out.push(Element::Keyword("AND"));
            condition_elements(b, out);
        }
        Condition::Or(a, b) => {
            condition_elements(a, out);
            out.push(Element::Keyword("OR"));
            condition_elements(b, out);
        }
        Condition::Not(a) => {
            out.push(Element::Keyword("NOT"));
            condition_elements(a, out);
        }
    }
}
