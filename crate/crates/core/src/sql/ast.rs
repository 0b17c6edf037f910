use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use rust_decimal::Decimal;

/// One single-table query. There is no FROM clause: every query runs
/// against the one table it is paired with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SqlQuery {
    pub projection: Vec<SelectExpr>,
    pub where_clause: Option<Condition>,
    pub group_by: Option<String>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelectExpr {
    Column(String),
    Scalar(ScalarExpr),
    /// Boolean-valued projection, e.g. `SELECT COUNT(DISTINCT Area) >= 5`.
    Compare(ScalarExpr, CmpOp, ScalarExpr),
}

/// Expressions producing one value per row group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScalarExpr {
    Literal(Literal),
    Aggregate(Aggregate),
    Arith(Box<ScalarExpr>, ArithOp, Box<ScalarExpr>),
    Subquery(Box<SqlQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aggregate {
    pub func: AggFunc,
    pub target: AggTarget,
    pub distinct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AggTarget {
    Column(String),
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn keyword(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub fn from_keyword(k: &str) -> Option<AggFunc> {
        Some(match k {
            "COUNT" => AggFunc::Count,
            "SUM" => AggFunc::Sum,
            "AVG" => AggFunc::Avg,
            "MIN" => AggFunc::Min,
            "MAX" => AggFunc::Max,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            _ => return None,
        })
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn holds(self, ord: core::cmp::Ordering) -> bool {
        use core::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Number(Decimal),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Condition {
    Compare { column: String, op: CmpOp, rhs: CompareRhs },
    InList { column: String, values: Vec<Literal> },
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CompareRhs {
    Literal(Literal),
    Subquery(Box<SqlQuery>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderBy {
    pub key: OrderKey,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrderKey {
    Column(String),
    /// Only legal together with GROUP BY.
    Aggregate(Aggregate),
}

impl SqlQuery {
    /// `SELECT <column>` with no clauses.
    pub fn select_column(column: impl Into<String>) -> SqlQuery {
        SqlQuery {
            projection: alloc::vec![SelectExpr::Column(column.into())],
            where_clause: None,
            group_by: None,
            order_by: None,
            limit: None,
        }
    }

    /// Adds `cond` as an extra AND conjunct.
    pub fn and_where(mut self, cond: Condition) -> SqlQuery {
        self.where_clause = Some(match self.where_clause.take() {
            Some(w) => Condition::And(Box::new(w), Box::new(cond)),
            None => cond,
        });
        self
    }
}
