//! Deterministic interpreter for the dialect.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rust_decimal::Decimal;

use crate::sql::*;
use crate::table::{fold_text, parse_number, CellValue, ColumnType, Table};

/// What a query evaluates to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Denotation {
    ValueList(Vec<CellValue>),
    Scalar(CellValue),
    Boolean(bool),
}

impl Denotation {
    /// Only an empty value list counts as empty.
    pub fn is_empty(&self) -> bool {
        matches!(self, Denotation::ValueList(v) if v.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("BindError: {0}")]
    Bind(String),
    #[error("CardinalityError: scalar subquery returned {0} values")]
    Cardinality(usize),
    #[error("TypeError: {0}")]
    Type(String),
    #[error("DivByZero: {0}")]
    DivByZero(&'static str),
    #[error("OverflowError: decimal arithmetic overflowed")]
    Overflow,
}

impl ExecError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExecError::Bind(_) => "BindError",
            ExecError::Cardinality(_) => "CardinalityError",
            ExecError::Type(_) => "TypeError",
            ExecError::DivByZero(_) => "DivByZero",
            ExecError::Overflow => "OverflowError",
        }
    }
}

pub const DEFAULT_SEPARATOR: &str = ", ";

/// Joins list values with `separator`; booleans render as `1`/`0`.
pub fn render_denotation(d: &Denotation, separator: &str) -> String {
    match d {
        Denotation::ValueList(values) => {
            let mut out = String::new();
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push_str(separator);
                }
                out.push_str(&v.display());
            }
            out
        }
        Denotation::Scalar(v) => v.display(),
        Denotation::Boolean(b) => String::from(if *b { "1" } else { "0" }),
    }
}

/// Evaluates `query` over `table`.
pub fn execute(query: &SqlQuery, table: &Table) -> Result<Denotation, ExecError> {
    Executor { table }.query(query)
}

struct Executor<'a> {
    table: &'a Table,
}

enum Predicate {
    Compare { column: usize, op: CmpOp, value: CellValue },
    In { column: usize, values: Vec<CellValue> },
    And(alloc::boxed::Box<Predicate>, alloc::boxed::Box<Predicate>),
    Or(alloc::boxed::Box<Predicate>, alloc::boxed::Box<Predicate>),
    Not(alloc::boxed::Box<Predicate>),
}

fn literal_cell(l: &Literal) -> CellValue {
    match l {
        Literal::Number(d) => CellValue::Number(*d),
        Literal::Text(t) => CellValue::Text(t.clone()),
    }
}

/// Cell-versus-value comparison used by WHERE. Empty never matches.
fn cell_matches(cell: &CellValue, op: CmpOp, value: &CellValue) -> bool {
    match (cell, value) {
        (CellValue::Empty, _) | (_, CellValue::Empty) => false,
        (CellValue::Number(a), CellValue::Number(b)) => op.holds(a.cmp(b)),
        (CellValue::Number(a), CellValue::Text(t)) => parse_number(t).is_some_and(|b| op.holds(a.cmp(&b))),
        (CellValue::Text(s), v) => op.holds(fold_text(s).cmp(&v.fold_key())),
    }
}

/// Comparison between two computed values in a boolean projection.
fn values_compare(a: &CellValue, op: CmpOp, b: &CellValue) -> bool {
    match (a, b) {
        (CellValue::Empty, _) | (_, CellValue::Empty) => false,
        (CellValue::Number(x), CellValue::Number(y)) => op.holds(x.cmp(y)),
        (CellValue::Text(x), CellValue::Text(y)) => op.holds(fold_text(x).cmp(&fold_text(y))),
        (CellValue::Number(x), CellValue::Text(t)) => parse_number(t).is_some_and(|y| op.holds(x.cmp(&y))),
        (CellValue::Text(t), CellValue::Number(y)) => parse_number(t).is_some_and(|x| op.holds(x.cmp(y))),
    }
}

impl Predicate {
    fn holds(&self, row: &[CellValue]) -> bool {
        match self {
            Predicate::Compare { column, op, value } => cell_matches(&row[*column], *op, value),
            Predicate::In { column, values } => values.iter().any(|v| cell_matches(&row[*column], CmpOp::Eq, v)),
            Predicate::And(a, b) => a.holds(row) && b.holds(row),
            Predicate::Or(a, b) => a.holds(row) || b.holds(row),
            Predicate::Not(a) => !a.holds(row),
        }
    }
}

impl Executor<'_> {
    fn column(&self, name: &str) -> Result<usize, ExecError> {
        self.table
            .column_index(name)
            .ok_or_else(|| ExecError::Bind(format!("unknown column {name:?}")))
    }

    fn query(&self, q: &SqlQuery) -> Result<Denotation, ExecError> {
        let rows = match &q.where_clause {
            Some(c) => {
                let pred = self.predicate(c)?;
                let all = self.table.rows();
                (0..all.len()).filter(|&i| pred.holds(&all[i])).collect()
            }
            None => (0..self.table.len()).collect::<Vec<usize>>(),
        };
        if let Some(g) = &q.group_by {
            return self.grouped(q, g, rows);
        }
        if let [SelectExpr::Compare(l, op, r)] = q.projection.as_slice() {
            let a = self.scalar(l, &rows)?;
            let b = self.scalar(r, &rows)?;
            return Ok(Denotation::Boolean(values_compare(&a, *op, &b)));
        }
        if q.projection.iter().all(|p| matches!(p, SelectExpr::Column(_))) {
            return self.plain(q, rows);
        }
        let mut values = Vec::with_capacity(q.projection.len());
        for p in &q.projection {
            match p {
                SelectExpr::Scalar(s) => values.push(self.scalar(s, &rows)?),
                _ => return Err(ExecError::Type("mixed projection without GROUP BY".into())),
            }
        }
        if values.len() == 1 {
            Ok(Denotation::Scalar(values.pop().unwrap()))
        } else {
            Ok(Denotation::ValueList(values))
        }
    }

    fn plain(&self, q: &SqlQuery, mut rows: Vec<usize>) -> Result<Denotation, ExecError> {
        let cols = q
            .projection
            .iter()
            .map(|p| match p {
                SelectExpr::Column(c) => self.column(c),
                _ => unreachable!(),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let all = self.table.rows();
        if let Some(o) = &q.order_by {
            let OrderKey::Column(c) = &o.key else {
                return Err(ExecError::Type("ORDER BY an aggregate requires GROUP BY".into()));
            };
            let k = self.column(c)?;
            sort_stable(&mut rows, o.direction, |&a, &b| all[a][k].sort_cmp(&all[b][k]));
        }
        if let Some(n) = q.limit {
            rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
        }
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for r in rows {
            out.extend(cols.iter().map(|&c| all[r][c].clone()));
        }
        Ok(Denotation::ValueList(out))
    }

    fn grouped(&self, q: &SqlQuery, group: &str, rows: Vec<usize>) -> Result<Denotation, ExecError> {
        let g = self.column(group)?;
        let all = self.table.rows();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for r in rows {
            let key = all[r][g].fold_key();
            let slot = *index.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push(r);
        }
        if let Some(o) = &q.order_by {
            let keys = groups
                .iter()
                .map(|members| match &o.key {
                    OrderKey::Column(c) => Ok(all[members[0]][self.column(c)?].clone()),
                    OrderKey::Aggregate(a) => self.aggregate(a, members),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut order: Vec<usize> = (0..groups.len()).collect();
            sort_stable(&mut order, o.direction, |&a, &b| keys[a].sort_cmp(&keys[b]));
            let mut taken: Vec<Option<Vec<usize>>> = groups.into_iter().map(Some).collect();
            groups = order.into_iter().map(|i| taken[i].take().unwrap()).collect();
        }
        if let Some(n) = q.limit {
            groups.truncate(usize::try_from(n).unwrap_or(usize::MAX));
        }
        let mut out = Vec::new();
        for members in &groups {
            for p in &q.projection {
                out.push(match p {
                    SelectExpr::Column(c) => all[members[0]][self.column(c)?].clone(),
                    SelectExpr::Scalar(s) => self.scalar(s, members)?,
                    SelectExpr::Compare(..) => {
                        return Err(ExecError::Type("boolean projection in a grouped query".into()))
                    }
                });
            }
        }
        Ok(Denotation::ValueList(out))
    }

    fn predicate(&self, c: &Condition) -> Result<Predicate, ExecError> {
        use alloc::boxed::Box;
        Ok(match c {
            Condition::Compare { column, op, rhs } => {
                let column = self.column(column)?;
                let value = match rhs {
                    CompareRhs::Literal(l) => literal_cell(l),
                    CompareRhs::Subquery(q) => self.subquery_value(q)?,
                };
                Predicate::Compare { column, op: *op, value }
            }
            Condition::InList { column, values } => Predicate::In {
                column: self.column(column)?,
                values: values.iter().map(literal_cell).collect(),
            },
            Condition::And(a, b) => Predicate::And(Box::new(self.predicate(a)?), Box::new(self.predicate(b)?)),
            Condition::Or(a, b) => Predicate::Or(Box::new(self.predicate(a)?), Box::new(self.predicate(b)?)),
            Condition::Not(a) => Predicate::Not(Box::new(self.predicate(a)?)),
        })
    }

    /// Subqueries run against the whole table. An empty result is Empty,
    /// two or more values are an error.
    fn subquery_value(&self, q: &SqlQuery) -> Result<CellValue, ExecError> {
        match self.query(q)? {
            Denotation::Scalar(v) => Ok(v),
            Denotation::Boolean(b) => Ok(CellValue::Number(Decimal::from(b as u8))),
            Denotation::ValueList(mut v) => match v.len() {
                0 => Ok(CellValue::Empty),
                1 => Ok(v.pop().unwrap()),
                n => Err(ExecError::Cardinality(n)),
            },
        }
    }

    fn scalar(&self, s: &ScalarExpr, rows: &[usize]) -> Result<CellValue, ExecError> {
        match s {
            ScalarExpr::Literal(l) => Ok(literal_cell(l)),
            ScalarExpr::Aggregate(a) => self.aggregate(a, rows),
            ScalarExpr::Subquery(q) => self.subquery_value(q),
            ScalarExpr::Arith(l, op, r) => {
                let a = self.scalar(l, rows)?;
                let b = self.scalar(r, rows)?;
                arith(&a, *op, &b)
            }
        }
    }

    fn aggregate(&self, a: &Aggregate, rows: &[usize]) -> Result<CellValue, ExecError> {
        let all = self.table.rows();
        let column = match &a.target {
            AggTarget::Star => {
                if a.func != AggFunc::Count {
                    return Err(ExecError::Type(format!("{}(*)", a.func.keyword())));
                }
                return Ok(CellValue::Number(Decimal::from(rows.len())));
            }
            AggTarget::Column(c) => self.column(c)?,
        };
        let cells = rows.iter().map(|&r| &all[r][column]).filter(|c| !c.is_empty());
        if a.func == AggFunc::Count {
            let n = if a.distinct {
                cells.map(CellValue::fold_key).collect::<BTreeSet<_>>().len()
            } else {
                cells.count()
            };
            return Ok(CellValue::Number(Decimal::from(n)));
        }
        if self.table.column_types()[column] == ColumnType::TextCol {
            return Err(ExecError::Type(format!(
                "{} over text column {:?}",
                a.func.keyword(),
                self.table.headers()[column]
            )));
        }
        let mut numbers: Vec<Decimal> = cells.filter_map(CellValue::as_number).collect();
        if a.distinct {
            numbers = numbers.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        }
        let sum = || numbers.iter().try_fold(Decimal::ZERO, |acc, n| acc.checked_add(*n)).ok_or(ExecError::Overflow);
        let value = match a.func {
            AggFunc::Count => unreachable!(),
            AggFunc::Sum if numbers.is_empty() => return Ok(CellValue::Empty),
            AggFunc::Sum => sum()?,
            AggFunc::Avg if numbers.is_empty() => return Err(ExecError::DivByZero("AVG over zero rows")),
            AggFunc::Avg => sum()?.checked_div(Decimal::from(numbers.len())).ok_or(ExecError::Overflow)?,
            AggFunc::Min => match numbers.iter().min() {
                Some(m) => *m,
                None => return Ok(CellValue::Empty),
            },
            AggFunc::Max => match numbers.iter().max() {
                Some(m) => *m,
                None => return Ok(CellValue::Empty),
            },
        };
        Ok(CellValue::Number(value.normalize()))
    }
}

fn arith(a: &CellValue, op: ArithOp, b: &CellValue) -> Result<CellValue, ExecError> {
    let (x, y) = match (a, b) {
        (CellValue::Empty, _) | (_, CellValue::Empty) => return Ok(CellValue::Empty),
        (CellValue::Number(x), CellValue::Number(y)) => (*x, *y),
        _ => return Err(ExecError::Type(format!("arithmetic on text value in {}", op.symbol()))),
    };
    let out = match op {
        ArithOp::Add => x.checked_add(y),
        ArithOp::Sub => x.checked_sub(y),
        ArithOp::Mul => x.checked_mul(y),
        ArithOp::Div => {
            if y.is_zero() {
                return Err(ExecError::DivByZero("division by zero"));
            }
            x.checked_div(y)
        }
    };
    out.map(|d| CellValue::Number(d.normalize())).ok_or(ExecError::Overflow)
}

/// Stable sort; ties keep their incoming order in both directions.
fn sort_stable<T>(items: &mut [T], direction: Direction, cmp: impl Fn(&T, &T) -> Ordering) {
    match direction {
        Direction::Asc => items.sort_by(|a, b| cmp(a, b)),
        Direction::Desc => items.sort_by(|a, b| cmp(b, a)),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn t_demo() -> Table {
        Table::from_raw(
            "t_demo",
            &["Year", "Result", "Driver", "Pos"],
            &[
                vec!["1986", "won", "alice", "2"],
                vec!["1988", "won", "bob", "1"],
                vec!["1990", "lost", "carol", "3"],
            ],
        )
        .unwrap()
    }

    fn run(sql: &str) -> Result<Denotation, ExecError> {
        let t = t_demo();
        execute(&parse(sql, Some(t.schema())).unwrap(), &t)
    }

    fn num(n: i64) -> CellValue {
        CellValue::Number(Decimal::from(n))
    }

    fn text(s: &str) -> CellValue {
        CellValue::Text(s.into())
    }

    #[test]
    fn demo_examples() {
        assert_eq!(run("SELECT COUNT(*) WHERE Result = 'won' AND Year > 1987"), Ok(Denotation::Scalar(num(1))));
        assert_eq!(run("SELECT Driver ORDER BY Pos ASC LIMIT 1"), Ok(Denotation::ValueList(vec![text("bob")])));
        assert_eq!(run("SELECT MAX(Year) - MIN(Year)"), Ok(Denotation::Scalar(num(4))));
        assert_eq!(run("SELECT Year WHERE Result = 'tied'"), Ok(Denotation::ValueList(vec![])));
        assert!(run("SELECT Year WHERE Result = 'tied'").unwrap().is_empty());
        assert_eq!(run("SELECT (SELECT COUNT(DISTINCT Result)) >= 5"), Ok(Denotation::Boolean(false)));
    }

    #[test]
    fn string_equality_folds_case_and_space() {
        assert_eq!(run("SELECT Driver WHERE Result = ' WON '"), Ok(Denotation::ValueList(vec![text("alice"), text("bob")])));
        assert_eq!(run("SELECT Driver WHERE Result IN ('Lost', 'x')"), Ok(Denotation::ValueList(vec![text("carol")])));
    }

    #[test]
    fn numeric_column_against_string_literal() {
        assert_eq!(run("SELECT Driver WHERE Year = '1,988'"), Ok(Denotation::ValueList(vec![text("bob")])));
        assert_eq!(run("SELECT Driver WHERE Year != 'abc'"), Ok(Denotation::ValueList(vec![])));
    }

    #[test]
    fn subqueries() {
        assert_eq!(
            run("SELECT Driver WHERE Result != 'lost' AND Pos < (SELECT Pos WHERE Driver = 'alice')"),
            Ok(Denotation::ValueList(vec![text("bob")]))
        );
        assert_eq!(run("SELECT Driver WHERE Pos = (SELECT Pos WHERE Result = 'won')"), Err(ExecError::Cardinality(2)));
        assert_eq!(run("SELECT Driver WHERE Pos = (SELECT Pos WHERE Result = 'x')"), Ok(Denotation::ValueList(vec![])));
    }

    #[test]
    fn grouping() {
        assert_eq!(
            run("SELECT Result GROUP BY Result ORDER BY COUNT(*) DESC LIMIT 1"),
            Ok(Denotation::ValueList(vec![text("won")]))
        );
        assert_eq!(
            run("SELECT Result, COUNT(*) GROUP BY Result"),
            Ok(Denotation::ValueList(vec![text("won"), num(2), text("lost"), num(1)]))
        );
        assert_eq!(
            run("SELECT Result, SUM(Pos) GROUP BY Result ORDER BY Result ASC"),
            Ok(Denotation::ValueList(vec![text("lost"), num(3), text("won"), num(3)]))
        );
    }

    #[test]
    fn aggregates() {
        assert_eq!(run("SELECT AVG(Pos)"), Ok(Denotation::Scalar(num(2))));
        assert_eq!(run("SELECT SUM(Pos) WHERE Result = 'x'"), Ok(Denotation::Scalar(CellValue::Empty)));
        assert_eq!(run("SELECT AVG(Pos) WHERE Result = 'x'"), Err(ExecError::DivByZero("AVG over zero rows")));
        assert_eq!(run("SELECT COUNT(Driver), COUNT(DISTINCT Result)"), Ok(Denotation::ValueList(vec![num(3), num(2)])));
        assert_eq!(run("SELECT MAX(Year) / (MIN(Pos) - 1)"), Err(ExecError::DivByZero("division by zero")));
        assert_eq!(
            run("SELECT MIN(Year) / 4").map(|d| render_denotation(&d, ", ")),
            Ok("496.5".into())
        );
    }

    #[test]
    fn text_aggregate_is_type_error() {
        let t = t_demo();
        let q = parse("SELECT SUM(Result)", None).unwrap();
        assert!(matches!(execute(&q, &t), Err(ExecError::Type(_))));
        let q = parse("SELECT Nope", None).unwrap();
        assert!(matches!(execute(&q, &t), Err(ExecError::Bind(_))));
    }

    #[test]
    fn order_desc_ties_keep_row_order() {
        assert_eq!(run("SELECT Driver ORDER BY Result DESC"), Ok(Denotation::ValueList(vec![text("alice"), text("bob"), text("carol")])));
        assert_eq!(run("SELECT Driver ORDER BY Result ASC"), Ok(Denotation::ValueList(vec![text("carol"), text("alice"), text("bob")])));
    }

    #[test]
    fn rendering() {
        assert_eq!(render_denotation(&Denotation::ValueList(vec![text("bob")]), ", "), "bob");
        assert_eq!(render_denotation(&Denotation::Boolean(true), ", "), "1");
        assert_eq!(render_denotation(&Denotation::Boolean(false), ", "), "0");
        assert_eq!(render_denotation(&Denotation::ValueList(vec![num(2), text("won")]), ", "), "2, won");
        assert_eq!(render_denotation(&Denotation::ValueList(vec![num(2), text("won")]), "|"), "2|won");
    }

    #[test]
    fn empty_cells_never_match() {
        let t = Table::from_raw("e", &["a", "b"], &[vec!["x", ""], vec!["y", "3"]]).unwrap();
        let run = |sql: &str| execute(&parse(sql, Some(t.schema())).unwrap(), &t).unwrap();
        assert_eq!(run("SELECT a WHERE b != 3"), Denotation::ValueList(vec![]));
        assert_eq!(run("SELECT a WHERE NOT b = 3"), Denotation::ValueList(vec![text("x")]));
        assert_eq!(run("SELECT a ORDER BY b ASC"), Denotation::ValueList(vec![text("x"), text("y")]));
        assert_eq!(run("SELECT a ORDER BY b DESC"), Denotation::ValueList(vec![text("y"), text("x")]));
    }
}
