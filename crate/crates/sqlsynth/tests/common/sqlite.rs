//! SQLite as a reference executor. Queries are translated from the AST;
//! the translation spells out the dialect's semantics in SQL:
//!
//! * numeric columns get NUMERIC affinity, empty cells are NULL;
//! * text columns use a collation that trims and lower-cases (equality,
//!   IN, DISTINCT, GROUP BY) and ORDER BY uses a lower-casing collation;
//! * every atomic predicate is `COALESCE(p, 0)`, so NULL never matches
//!   but NOT still flips;
//! * ties keep table order (`rowid`), groups appear in order of first
//!   member and display that member's cell;
//! * scalar projections with no aggregate ignore the rows entirely.

use rusqlite::types::Value;
use rusqlite::{params_from_iter, Connection};
use sqlsynth_core::exec::Denotation;
use sqlsynth_core::sql::*;
use sqlsynth_core::table::{CellValue, ColumnType, Table};

fn fold_eq(s: &str) -> impl Iterator<Item = char> + '_ {
    s.trim().chars().flat_map(char::to_lowercase)
}

pub struct Oracle {
    conn: Connection,
}

impl Oracle {
    pub fn new() -> Oracle {
        let conn = Connection::open_in_memory().unwrap();
        conn.create_collation("FOLDEQ", |a: &str, b: &str| fold_eq(a).cmp(fold_eq(b))).unwrap();
        conn.create_collation("FOLDSORT", |a: &str, b: &str| {
            a.chars().flat_map(char::to_lowercase).cmp(b.chars().flat_map(char::to_lowercase))
        })
        .unwrap();
        Oracle { conn }
    }

    pub fn load(&self, table: &Table) {
        self.conn.execute("DROP TABLE IF EXISTS t", []).unwrap();
        let cols: Vec<String> = table
            .column_types()
            .iter()
            .enumerate()
            .map(|(j, ty)| match ty {
                ColumnType::NumberCol => format!("c{j} NUMERIC"),
                ColumnType::TextCol => format!("c{j} TEXT COLLATE FOLDEQ"),
            })
            .collect();
        self.conn.execute(&format!("CREATE TABLE t ({})", cols.join(", ")), []).unwrap();
        let marks = vec!["?"; table.width()].join(", ");
        let mut stmt = self.conn.prepare(&format!("INSERT INTO t VALUES ({marks})")).unwrap();
        for row in table.rows() {
            let vals = row.iter().map(|c| match c {
                CellValue::Empty => Value::Null,
                other => Value::Text(other.display()),
            });
            stmt.execute(params_from_iter(vals)).unwrap();
        }
    }

    /// Row-major result values.
    pub fn run(&self, sql: &str) -> Result<Vec<Value>, rusqlite::Error> {
        let mut stmt = self.conn.prepare(sql)?;
        let n = stmt.column_count();
        let mut rows = stmt.query([])?;
        let mut out = Vec::new();
        while let Some(r) = rows.next()? {
            for j in 0..n {
                out.push(r.get::<_, Value>(j)?);
            }
        }
        Ok(out)
    }
}

struct Tr<'a> {
    table: &'a Table,
}

impl Tr<'_> {
    fn col(&self, name: &str) -> String {
        format!("c{}", self.table.column_index(name).expect("bound column"))
    }

    fn lit(&self, l: &Literal) -> String {
        match l {
            Literal::Number(d) => format!("({d})"),
            Literal::Text(t) => format!("'{}'", t.replace('\'', "''")),
        }
    }

    fn agg(&self, a: &Aggregate) -> String {
        let target = match &a.target {
            AggTarget::Star => "*".to_string(),
            AggTarget::Column(c) => self.col(c),
        };
        let distinct = if a.distinct { "DISTINCT " } else { "" };
        format!("{}({distinct}{target})", a.func.keyword())
    }

    fn scalar(&self, s: &ScalarExpr) -> String {
        match s {
            ScalarExpr::Literal(l) => self.lit(l),
            ScalarExpr::Aggregate(a) => self.agg(a),
            ScalarExpr::Arith(l, ArithOp::Div, r) => format!("(CAST({} AS REAL) / {})", self.scalar(l), self.scalar(r)),
            ScalarExpr::Arith(l, op, r) => format!("({} {} {})", self.scalar(l), op.symbol(), self.scalar(r)),
            ScalarExpr::Subquery(q) => format!("({})", self.query(q)),
        }
    }

    fn cond(&self, c: &Condition) -> String {
        match c {
            Condition::Compare { column, op, rhs } => {
                let rhs = match rhs {
                    CompareRhs::Literal(l) => self.lit(l),
                    CompareRhs::Subquery(q) => format!("({})", self.query(q)),
                };
                format!("COALESCE({} {} {rhs}, 0)", self.col(column), op.symbol())
            }
            Condition::InList { column, values } => {
                let vals: Vec<String> = values.iter().map(|v| self.lit(v)).collect();
                format!("COALESCE({} IN ({}), 0)", self.col(column), vals.join(", "))
            }
            Condition::And(a, b) => format!("({} AND {})", self.cond(a), self.cond(b)),
            Condition::Or(a, b) => format!("({} OR {})", self.cond(a), self.cond(b)),
            Condition::Not(a) => format!("(NOT {})", self.cond(a)),
        }
    }

    fn where_sql(&self, q: &SqlQuery) -> String {
        q.where_clause.as_ref().map(|w| format!(" WHERE {}", self.cond(w))).unwrap_or_default()
    }

    fn limit_sql(&self, q: &SqlQuery) -> String {
        q.limit.map(|n| format!(" LIMIT {n}")).unwrap_or_default()
    }

    fn dir(d: Direction) -> &'static str {
        match d {
            Direction::Asc => "ASC",
            Direction::Desc => "DESC",
        }
    }

    fn query(&self, q: &SqlQuery) -> String {
        if let Some(g) = &q.group_by {
            return self.grouped(q, g);
        }
        let has_agg = |s: &ScalarExpr| {
            fn walk(s: &ScalarExpr) -> bool {
                match s {
                    ScalarExpr::Aggregate(_) => true,
                    ScalarExpr::Arith(l, _, r) => walk(l) || walk(r),
                    _ => false,
                }
            }
            walk(s)
        };
        let from = |aggregated: bool| if aggregated { format!(" FROM t{}", self.where_sql(q)) } else { String::new() };
        if let [SelectExpr::Compare(l, op, r)] = q.projection.as_slice() {
            return format!(
                "SELECT COALESCE({} {} {}, 0){}",
                self.scalar(l),
                op.symbol(),
                self.scalar(r),
                from(has_agg(l) || has_agg(r))
            );
        }
        if q.projection.iter().all(|p| matches!(p, SelectExpr::Column(_))) {
            let cols: Vec<String> = q
                .projection
                .iter()
                .map(|p| match p {
                    SelectExpr::Column(c) => self.col(c),
                    _ => unreachable!(),
                })
                .collect();
            let order = match &q.order_by {
                Some(OrderBy { key: OrderKey::Column(c), direction }) => {
                    format!("{} COLLATE FOLDSORT {}, rowid", self.col(c), Self::dir(*direction))
                }
                _ => "rowid".into(),
            };
            return format!("SELECT {} FROM t{} ORDER BY {order}{}", cols.join(", "), self.where_sql(q), self.limit_sql(q));
        }
        let scalars: Vec<&ScalarExpr> = q
            .projection
            .iter()
            .map(|p| match p {
                SelectExpr::Scalar(s) => s,
                _ => panic!("mixed projection"),
            })
            .collect();
        let agg = scalars.iter().any(|s| has_agg(s));
        let exprs: Vec<String> = scalars.iter().map(|s| self.scalar(s)).collect();
        format!("SELECT {}{}", exprs.join(", "), from(agg))
    }

    fn grouped(&self, q: &SqlQuery, g: &str) -> String {
        let gc = self.col(g);
        let mut inner = vec!["MIN(rowid) AS r".to_string()];
        let mut outer = Vec::new();
        for (i, p) in q.projection.iter().enumerate() {
            match p {
                SelectExpr::Column(_) => outer.push(format!("t.{gc}")),
                SelectExpr::Scalar(s) => {
                    inner.push(format!("{} AS a{i}", self.scalar(s)));
                    outer.push(format!("g.a{i}"));
                }
                SelectExpr::Compare(..) => panic!("compare in grouped query"),
            }
        }
        let order = match &q.order_by {
            Some(OrderBy { key: OrderKey::Aggregate(a), direction }) => {
                inner.push(format!("{} AS o", self.agg(a)));
                format!("g.o {}, g.r", Self::dir(*direction))
            }
            Some(OrderBy { key: OrderKey::Column(_), direction }) => {
                format!("t.{gc} COLLATE FOLDSORT {}, g.r", Self::dir(*direction))
            }
            None => "g.r".into(),
        };
        format!(
            "WITH g AS (SELECT {} FROM t{} GROUP BY {gc}) SELECT {} FROM g JOIN t ON t.rowid = g.r ORDER BY {order}{}",
            inner.join(", "),
            self.where_sql(q),
            outer.join(", "),
            self.limit_sql(q)
        )
    }
}

pub fn translate(q: &SqlQuery, table: &Table) -> String {
    Tr { table }.query(q)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Null,
    Num(f64),
    Text(String),
}

pub fn ours(d: &Denotation) -> Vec<Atom> {
    let cell = |c: &CellValue| match c {
        CellValue::Empty => Atom::Null,
        CellValue::Number(d) => Atom::Num(d.to_string().parse().unwrap()),
        CellValue::Text(t) => Atom::Text(t.clone()),
    };
    match d {
        Denotation::ValueList(v) => v.iter().map(cell).collect(),
        Denotation::Scalar(c) => vec![cell(c)],
        Denotation::Boolean(b) => vec![Atom::Num(*b as u8 as f64)],
    }
}

pub fn theirs(v: &[Value]) -> Vec<Atom> {
    v.iter()
        .map(|x| match x {
            Value::Null => Atom::Null,
            Value::Integer(i) => Atom::Num(*i as f64),
            Value::Real(f) => Atom::Num(*f),
            Value::Text(t) => Atom::Text(t.clone()),
            Value::Blob(_) => panic!("blob result"),
        })
        .collect()
}

/// Element-wise agreement; numbers within a relative 1e-9.
pub fn agree(a: &[Atom], b: &[Atom]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Atom::Num(p), Atom::Num(q)) => (p - q).abs() <= 1e-9 * p.abs().max(q.abs()).max(1.0),
            _ => x == y,
        })
}
