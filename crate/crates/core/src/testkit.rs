//! Random tables and queries for property tests and differential checks.
//! Compiled only with the `testkit` feature.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;
use rust_decimal::Decimal;

use crate::sql::*;
use crate::table::{CellValue, ColumnType, Table};

const HEADERS: &[&str] = &[
    "Year", "Name", "Team", "Pos", "Points", "Result", "Release date", "pick #", "No.", "Score (pts)", "College",
    "Chart Position", "Area", "Nation", "Gold", "Silver", "Venue", "Notes", "order", "Total", "Date", "Player",
];

const WORDS: &[&str] = &[
    "won", "Won", "lost", "draw", "alice", "Bob", "carol", "x-ray", "New York", "  padded ", "o'brien", "say \"hi\"",
    "a|b", "[ROW] r", "Pairs", "pairs", "N/A", "2k", "1e3", "tie", "ünïcode", "x", "Y",
];

fn random_number<R: Rng + ?Sized>(rng: &mut R, binary_exact: bool) -> String {
    let mut pick = rng.random_range(0..6);
    if binary_exact && pick == 2 {
        pick = 5;
    }
    match pick {
        0 => format!("{}", rng.random_range(1900..2030)),
        1 => format!("{}", rng.random_range(-5..20)),
        2 => format!("{}.{}", rng.random_range(0..100), rng.random_range(0..100)),
        3 => format!("{},{:03}", rng.random_range(1..50), rng.random_range(0..1000)),
        4 => format!("{}", rng.random_range(0..4)),
        _ => format!("{}.5", rng.random_range(0..10)),
    }
}

/// A table with 1..=max_cols columns and 0..=max_rows rows. Roughly half
/// the columns are numeric; cells are empty one time in ten.
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, id: &str, max_rows: usize, max_cols: usize) -> Table {
    random_table_with(rng, id, max_rows, max_cols, false)
}

/// As [`random_table`]; with `binary_exact` every number is a multiple of
/// one half, so binary floating point holds it and its sums exactly.
pub fn random_table_with<R: Rng + ?Sized>(
    rng: &mut R,
    id: &str,
    max_rows: usize,
    max_cols: usize,
    binary_exact: bool,
) -> Table {
    let width = rng.random_range(1..=max_cols.max(1));
    let headers: Vec<&str> = HEADERS.choose_multiple(rng, width).copied().collect();
    let numeric: Vec<bool> = (0..width).map(|_| rng.random_bool(0.5)).collect();
    let n = rng.random_range(0..=max_rows);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<String> = numeric
            .iter()
            .map(|&num| {
                if rng.random_ratio(1, 10) {
                    String::new()
                } else if num {
                    random_number(rng, binary_exact)
                } else {
                    WORDS.choose(rng).unwrap().to_string()
                }
            })
            .collect();
        rows.push(row);
    }
    Table::from_raw(id, &headers, &rows).expect("generated table is well formed")
}

struct Gen<'a, R: ?Sized> {
    rng: &'a mut R,
    table: &'a Table,
}

impl<R: Rng + ?Sized> Gen<'_, R> {
    fn columns_of(&self, ty: Option<ColumnType>) -> Vec<usize> {
        (0..self.table.width()).filter(|&j| ty.is_none_or(|t| self.table.column_types()[j] == t)).collect()
    }

    fn any_column(&mut self) -> usize {
        self.rng.random_range(0..self.table.width())
    }

    fn num_column(&mut self) -> Option<usize> {
        self.columns_of(Some(ColumnType::NumberCol)).choose(self.rng).copied()
    }

    fn name(&self, j: usize) -> String {
        self.table.headers()[j].clone()
    }

    fn literal_for(&mut self, j: usize) -> Literal {
        let cells: Vec<&CellValue> = self.table.column(j).filter(|c| !c.is_empty()).collect();
        let numeric = self.table.column_types()[j] == ColumnType::NumberCol;
        if !cells.is_empty() && self.rng.random_bool(0.8) {
            return match cells.choose(self.rng).unwrap() {
                CellValue::Number(d) => Literal::Number(*d),
                other => Literal::Text(other.display()),
            };
        }
        if numeric {
            Literal::Number(Decimal::from(self.rng.random_range(-3..2000)))
        } else {
            Literal::Text(WORDS.choose(self.rng).unwrap().to_string())
        }
    }

    fn aggregate(&mut self) -> Aggregate {
        match (self.rng.random_range(0..4), self.num_column()) {
            (0, _) => Aggregate { func: AggFunc::Count, target: AggTarget::Star, distinct: false },
            (1, _) | (_, None) => {
                let j = self.any_column();
                Aggregate { func: AggFunc::Count, target: AggTarget::Column(self.name(j)), distinct: self.rng.random_bool(0.5) }
            }
            (_, Some(j)) => {
                let func = *[AggFunc::Sum, AggFunc::Avg, AggFunc::Min, AggFunc::Max].choose(self.rng).unwrap();
                Aggregate { func, target: AggTarget::Column(self.name(j)), distinct: false }
            }
        }
    }

    fn scalar(&mut self, depth: u32) -> ScalarExpr {
        match self.rng.random_range(0..10) {
            0..=5 => ScalarExpr::Aggregate(self.aggregate()),
            6 | 7 if depth > 0 => {
                let op = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div].choose(self.rng).unwrap();
                ScalarExpr::Arith(Box::new(self.scalar(depth - 1)), op, Box::new(self.scalar(depth - 1)))
            }
            8 if depth > 0 => {
                // a subquery with a WHERE clause, so the parser keeps it
                let mut q = SqlQuery {
                    projection: alloc::vec![SelectExpr::Scalar(ScalarExpr::Aggregate(self.aggregate()))],
                    where_clause: None,
                    group_by: None,
                    order_by: None,
                    limit: None,
                };
                q.where_clause = Some(self.condition(0));
                ScalarExpr::Subquery(Box::new(q))
            }
            _ => ScalarExpr::Literal(Literal::Number(Decimal::from(self.rng.random_range(0..100)))),
        }
    }

    fn condition(&mut self, depth: u32) -> Condition {
        let roll = self.rng.random_range(0..10);
        if depth > 0 && roll >= 7 {
            let a = Box::new(self.condition(depth - 1));
            return match roll {
                7 => Condition::And(a, Box::new(self.condition(depth - 1))),
                8 => Condition::Or(a, Box::new(self.condition(depth - 1))),
                _ => Condition::Not(a),
            };
        }
        let j = self.any_column();
        let column = self.name(j);
        let numeric = self.table.column_types()[j] == ColumnType::NumberCol;
        if roll == 6 {
            let n = self.rng.random_range(1..4);
            let values = (0..n).map(|_| self.literal_for(j)).collect();
            return Condition::InList { column, values };
        }
        let op = if numeric {
            *[CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le].choose(self.rng).unwrap()
        } else {
            *[CmpOp::Eq, CmpOp::Ne].choose(self.rng).unwrap()
        };
        let rhs = if numeric && depth > 0 && roll == 5 {
            let func = *[AggFunc::Max, AggFunc::Min, AggFunc::Avg].choose(self.rng).unwrap();
            let mut sub = SqlQuery {
                projection: alloc::vec![SelectExpr::Scalar(ScalarExpr::Aggregate(Aggregate {
                    func,
                    target: AggTarget::Column(column.clone()),
                    distinct: false,
                }))],
                where_clause: None,
                group_by: None,
                order_by: None,
                limit: None,
            };
            if self.rng.random_bool(0.5) {
                sub.where_clause = Some(self.condition(0));
            }
            CompareRhs::Subquery(Box::new(sub))
        } else {
            CompareRhs::Literal(self.literal_for(j))
        };
        Condition::Compare { column, op, rhs }
    }

    fn direction(&mut self) -> Direction {
        if self.rng.random_bool(0.5) { Direction::Asc } else { Direction::Desc }
    }

    fn limit(&mut self, p: f64) -> Option<u64> {
        self.rng.random_bool(p).then(|| self.rng.random_range(1..=4))
    }

    fn query(&mut self) -> SqlQuery {
        let where_clause = self.rng.random_bool(0.6).then(|| self.condition(2));
        match self.rng.random_range(0..10) {
            0..=3 => {
                let n = self.rng.random_range(1..=2.min(self.table.width()));
                let cols = rand::seq::index::sample(self.rng, self.table.width(), n);
                let projection = cols.iter().map(|j| SelectExpr::Column(self.name(j))).collect();
                let order_by = self.rng.random_bool(0.5).then(|| {
                    let j = self.any_column();
                    OrderBy { key: OrderKey::Column(self.name(j)), direction: self.direction() }
                });
                let limit = self.limit(if order_by.is_some() { 0.7 } else { 0.2 });
                SqlQuery { projection, where_clause, group_by: None, order_by, limit }
            }
            4..=6 => {
                let n = self.rng.random_range(1..=2);
                let projection = (0..n).map(|_| SelectExpr::Scalar(self.scalar(2))).collect();
                SqlQuery { projection, where_clause, group_by: None, order_by: None, limit: None }
            }
            7 => {
                let l = ScalarExpr::Aggregate(self.aggregate());
                let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le].choose(self.rng).unwrap();
                let r = ScalarExpr::Literal(Literal::Number(Decimal::from(self.rng.random_range(0..6))));
                SqlQuery {
                    projection: alloc::vec![SelectExpr::Compare(l, op, r)],
                    where_clause,
                    group_by: None,
                    order_by: None,
                    limit: None,
                }
            }
            _ => {
                let g = self.any_column();
                let group = self.name(g);
                let mut projection = alloc::vec![SelectExpr::Column(group.clone())];
                if self.rng.random_bool(0.5) {
                    projection.push(SelectExpr::Scalar(ScalarExpr::Aggregate(self.aggregate())));
                }
                let order_by = self.rng.random_bool(0.6).then(|| {
                    let key = if self.rng.random_bool(0.7) {
                        OrderKey::Aggregate(Aggregate { func: AggFunc::Count, target: AggTarget::Star, distinct: false })
                    } else {
                        OrderKey::Column(group.clone())
                    };
                    OrderBy { key, direction: self.direction() }
                });
                let limit = self.limit(if order_by.is_some() { 0.7 } else { 0.1 });
                SqlQuery { projection, where_clause, group_by: Some(group), order_by, limit }
            }
        }
    }
}

/// A query that parses and binds against `table`, printed canonically.
/// Draws until the printed form binds; the generator only rarely produces
/// queries that fail to.
pub fn random_query<R: Rng + ?Sized>(rng: &mut R, table: &Table) -> SqlQuery {
    loop {
        let q = Gen { rng: &mut *rng, table }.query();
        if let Ok(parsed) = parse(&print_canonical(&q), Some(table.schema())) {
            return parsed;
        }
    }
}

/// The unparsed generator output, for checking that parse inverts print.
pub fn random_query_raw<R: Rng + ?Sized>(rng: &mut R, table: &Table) -> SqlQuery {
    Gen { rng, table }.query()
}
