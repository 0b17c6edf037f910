//! SQL templates with typed slots and their uniform instantiation.
//!
//! Slot syntax inside dialect SQL:
//!
//! | slot            | filled with                                        |
//! |-----------------|----------------------------------------------------|
//! | `{num1}`        | a numeric column                                   |
//! | `{text1}`       | a text column                                      |
//! | `{col1}`        | any column                                         |
//! | `{val1:text1}`  | a non-empty cell of the column bound to `{text1}`  |
//! | `{int1}`        | an integer in `1..=rows`                           |
//!
//! Distinct column slots always receive distinct columns.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::sql::{literal_text, parse, quote_identifier, Literal, SqlQuery};
use crate::table::{CellValue, ColumnType, Table};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("TemplateError: {0}")]
    Invalid(String),
    #[error("IncompatibleError: template {template:?} cannot be filled from table {table:?}")]
    Incompatible { template: String, table: String },
    /// A filled template failed to parse or bind; indicates a template the
    /// skeleton check could not rule out.
    #[error("TemplateError: instantiation of {template:?} produced invalid SQL: {message}")]
    Instantiation { template: String, message: String },
}

impl TemplateError {
    pub fn kind(&self) -> &'static str {
        match self {
            TemplateError::Incompatible { .. } => "IncompatibleError",
            _ => "TemplateError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColumnFamily {
    Num,
    Text,
    Any,
}

impl ColumnFamily {
    fn prefix(self) -> &'static str {
        match self {
            ColumnFamily::Num => "num",
            ColumnFamily::Text => "text",
            ColumnFamily::Any => "col",
        }
    }

    fn admits(self, ty: ColumnType) -> bool {
        match self {
            ColumnFamily::Num => ty == ColumnType::NumberCol,
            ColumnFamily::Text => ty == ColumnType::TextCol,
            ColumnFamily::Any => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnSlot {
    pub family: ColumnFamily,
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Column(ColumnSlot),
    Val { index: u32, column: ColumnSlot },
    IntLit(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(Slot),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTemplate {
    pub id: String,
    source: String,
    pieces: Vec<Piece>,
    slots: Vec<Slot>,
}

impl QueryTemplate {
    /// Distinct slots in order of first appearance.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn column_slots(&self) -> impl Iterator<Item = ColumnSlot> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Column(c) => Some(*c),
            _ => None,
        })
    }

    fn is_val_bound(&self, c: ColumnSlot) -> bool {
        self.slots.iter().any(|s| matches!(s, Slot::Val { column, .. } if *column == c))
    }

    fn needs_rows(&self) -> bool {
        self.slots.iter().any(|s| !matches!(s, Slot::Column(_)))
    }

    /// The skeleton filled with placeholder columns and literals.
    pub fn placeholder_sql(&self) -> String {
        self.render(&|slot| match slot {
            Slot::Column(c) => format!("{}_{}", c.family.prefix(), c.index),
            Slot::Val { column, .. } if column.family == ColumnFamily::Num => "1".into(),
            Slot::Val { .. } => "\"v\"".into(),
            Slot::IntLit(_) => "1".into(),
        })
    }

    fn render(&self, fill: &dyn Fn(&Slot) -> String) -> String {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => out.push_str(&fill(s)),
            }
        }
        out
    }
}

/// Parses one template line.
pub fn parse_template(id: impl Into<String>, text: &str) -> Result<QueryTemplate, TemplateError> {
    let id = id.into();
    let invalid = |m: String| TemplateError::Invalid(format!("{id}: {m}"));
    let mut pieces = Vec::new();
    let mut rest = text.trim();
    while let Some(open) = rest.find('{') {
        if open > 0 {
            pieces.push(Piece::Text(rest[..open].into()));
        }
        let close = rest[open..].find('}').ok_or_else(|| invalid("unclosed '{'".into()))? + open;
        let slot = parse_slot(&rest[open + 1..close]).ok_or_else(|| invalid(format!("unknown slot {:?}", &rest[open..=close])))?;
        pieces.push(Piece::Slot(slot));
        rest = &rest[close + 1..];
    }
    if rest.contains('}') {
        return Err(invalid("stray '}'".into()));
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest.into()));
    }

    let mut slots: Vec<Slot> = Vec::new();
    for p in &pieces {
        if let Piece::Slot(s) = p {
            if let Slot::Val { index, column } = s {
                if let Some(Slot::Val { column: other, .. }) =
                    slots.iter().find(|o| matches!(o, Slot::Val { index: i, .. } if i == index))
                {
                    if other != column {
                        return Err(invalid(format!("val{index} bound to two different columns")));
                    }
                }
            }
            if !slots.contains(s) {
                slots.push(*s);
            }
        }
    }
    for s in &slots {
        if let Slot::Val { index, column } = s {
            if !slots.contains(&Slot::Column(*column)) {
                return Err(invalid(format!(
                    "val{index} references {}{} which the template never uses",
                    column.family.prefix(),
                    column.index
                )));
            }
        }
    }
    let mut families: [(&str, Vec<u32>); 5] =
        [("num", Vec::new()), ("text", Vec::new()), ("col", Vec::new()), ("val", Vec::new()), ("int", Vec::new())];
    for s in &slots {
        let (fam, idx) = match s {
            Slot::Column(c) => (c.family as usize, c.index),
            Slot::Val { index, .. } => (3, *index),
            Slot::IntLit(i) => (4, *i),
        };
        families[fam].1.push(idx);
    }
    for (name, mut idx) in families {
        idx.sort_unstable();
        idx.dedup();
        if idx.iter().enumerate().any(|(i, v)| *v as usize != i + 1) {
            return Err(invalid(format!("{name} slots must be numbered 1, 2, ... without gaps")));
        }
    }
    let template = QueryTemplate { id: id.clone(), source: text.trim().into(), pieces, slots };
    parse(&template.placeholder_sql(), None)
        .map_err(|e| invalid(format!("skeleton does not parse: {e}")))?;
    Ok(template)
}

fn parse_slot(body: &str) -> Option<Slot> {
    fn split_index(s: &str) -> Option<(&str, u32)> {
        let digits = s.find(|c: char| c.is_ascii_digit())?;
        let index: u32 = s[digits..].parse().ok()?;
        (index >= 1).then_some((&s[..digits], index))
    }
    fn column(s: &str) -> Option<ColumnSlot> {
        let (prefix, index) = split_index(s)?;
        let family = match prefix {
            "num" => ColumnFamily::Num,
            "text" => ColumnFamily::Text,
            "col" => ColumnFamily::Any,
            _ => return None,
        };
        Some(ColumnSlot { family, index })
    }
    let body = body.trim();
    if let Some((val, target)) = body.split_once(':') {
        let (prefix, index) = split_index(val.trim())?;
        return (prefix == "val").then_some(Slot::Val { index, column: column(target.trim())? });
    }
    if let Some(c) = column(body) {
        return Some(Slot::Column(c));
    }
    match split_index(body)? {
        ("int", i) => Some(Slot::IntLit(i)),
        _ => None,
    }
}

/// Parses a template file: one template per line, blank lines and lines
/// starting with `#` ignored. A line may carry an explicit id as
/// `id<TAB>template`; otherwise the id is `L<line number>`.
pub fn parse_template_file(text: &str) -> Result<Vec<QueryTemplate>, TemplateError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, body) = match line.split_once('\t') {
            Some((id, body)) if !id.trim().is_empty() => (id.trim().to_string(), body),
            _ => (format!("L{}", i + 1), trimmed),
        };
        out.push(parse_template(id, body)?);
    }
    Ok(out)
}

fn has_values(table: &Table, column: usize) -> bool {
    table.column(column).any(|c| !c.is_empty())
}

/// True when the table has enough columns of each kind for the template's
/// distinct column slots, and rows to draw values and integers from.
pub fn compatible(template: &QueryTemplate, table: &Table) -> bool {
    if template.needs_rows() && table.is_empty() {
        return false;
    }
    let types = table.column_types();
    let mut total = 0;
    for family in [ColumnFamily::Num, ColumnFamily::Text, ColumnFamily::Any] {
        let slots: Vec<ColumnSlot> = template.column_slots().filter(|c| c.family == family).collect();
        let bound = slots.iter().filter(|c| template.is_val_bound(**c)).count();
        let eligible = (0..types.len()).filter(|&j| family.admits(types[j]));
        let filled = eligible.clone().filter(|&j| has_values(table, j)).count();
        if slots.len() > eligible.count() || bound > filled {
            return false;
        }
        total += slots.len();
    }
    total <= table.width()
}

/// Fills every slot by uniform sampling. Column slots draw distinct columns
/// without replacement; value slots draw a non-empty cell of their column.
pub fn instantiate<R: Rng + ?Sized>(
    template: &QueryTemplate,
    table: &Table,
    rng: &mut R,
) -> Result<SqlQuery, TemplateError> {
    let incompatible = || TemplateError::Incompatible { template: template.id.clone(), table: table.id().into() };
    if !compatible(template, table) {
        return Err(incompatible());
    }
    let types = table.column_types();
    let mut used = alloc::vec![false; table.width()];
    let mut bound: Vec<(ColumnSlot, usize)> = Vec::new();
    for family in [ColumnFamily::Num, ColumnFamily::Text, ColumnFamily::Any] {
        let mut slots: Vec<ColumnSlot> = template.column_slots().filter(|c| c.family == family).collect();
        // value-bound slots first: their eligible set is the narrower one
        slots.sort_by_key(|c| (!template.is_val_bound(*c), c.index));
        for slot in slots {
            let needs_values = template.is_val_bound(slot);
            let eligible: Vec<usize> = (0..types.len())
                .filter(|&j| !used[j] && slot.family.admits(types[j]) && (!needs_values || has_values(table, j)))
                .collect();
            if eligible.is_empty() {
                return Err(incompatible());
            }
            let pick = eligible[rng.random_range(0..eligible.len())];
            used[pick] = true;
            bound.push((slot, pick));
        }
    }
    let column_of = |c: &ColumnSlot| bound.iter().find(|(s, _)| s == c).map(|(_, j)| *j).unwrap();

    let mut values: Vec<(Slot, String)> = Vec::new();
    for slot in template.slots() {
        let text = match slot {
            Slot::Column(c) => quote_identifier(&table.headers()[column_of(c)]),
            Slot::Val { column, .. } => {
                let j = column_of(column);
                let cells: Vec<&CellValue> = table.column(j).filter(|c| !c.is_empty()).collect();
                let cell = cells[rng.random_range(0..cells.len())];
                let lit = match cell {
                    CellValue::Number(d) => Literal::Number(*d),
                    other => Literal::Text(other.display()),
                };
                literal_text(&lit)
            }
            Slot::IntLit(_) => rng.random_range(1..=table.len()).to_string(),
        };
        values.push((*slot, text));
    }
    let sql = template.render(&|s| values.iter().find(|(v, _)| v == s).map(|(_, t)| t.clone()).unwrap());
    parse(&sql, Some(table.schema()))
        .map_err(|e| TemplateError::Instantiation { template: template.id.clone(), message: format!("{sql}: {e}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::tests::t_demo;
    use crate::sql::print_canonical;
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FILTER_TEMPLATE: &str = "SELECT {num1} WHERE {text1} = {val1:text1}";

    #[test]
    fn parses_slots() {
        assert_eq!(parse_template("a", FILTER_TEMPLATE).unwrap().slots().len(), 3);
        assert_eq!(parse_template("b", "SELECT {col1} ORDER BY {num1} DESC LIMIT 1").unwrap().slots().len(), 2);
    }

    #[test]
    fn template_errors() {
        for bad in [
            "SELECT {val1:text9}",
            "SELECT {val1:text1}",
            "SELECT {foo1}",
            "SELECT {num2}",
            "SELECT {num1",
            "SELECT num1}",
            "SELECT {num0}",
            "SELECT {num1} WHERE",
            "SELECT {text1} WHERE {text1} = {val1:text1} OR {num1} = {val1:num1}",
        ] {
            assert!(matches!(parse_template("x", bad), Err(TemplateError::Invalid(_))), "{bad}");
        }
    }

    #[test]
    fn template_file() {
        let ts = parse_template_file("# comment\n\nSELECT {num1}\nsup\tSELECT MAX({num1})\n").unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].id, "L3");
        assert_eq!(ts[1].id, "sup");
    }

    #[test]
    fn compatibility() {
        let demo = t_demo();
        let t = parse_template("a", FILTER_TEMPLATE).unwrap();
        assert!(compatible(&t, &demo));
        let text_only = Table::from_raw("t", &["a"], &[vec!["x"]]).unwrap();
        assert!(!compatible(&parse_template("n", "SELECT {num1}").unwrap(), &text_only));
        let no_rows = Table::from_raw::<&str, &str>("t", &["a", "b"], &[]).unwrap();
        assert!(!compatible(&parse_template("v", "SELECT {col1} WHERE {col2} = {val1:col2}").unwrap(), &no_rows));
        assert!(compatible(&parse_template("c", "SELECT {col1}").unwrap(), &no_rows));
        assert!(!compatible(&parse_template("c", "SELECT {num1}, {num2}, {num3}").unwrap(), &demo));
    }

    #[test]
    fn instantiation_is_deterministic_and_in_space() {
        let demo = t_demo();
        let t = parse_template("a", FILTER_TEMPLATE).unwrap();
        // every filler combination, enumerated by hand from the table
        let mut space = BTreeSet::new();
        for num in ["Year", "Pos"] {
            for (text, vals) in [("Result", ["won", "won", "lost"]), ("Driver", ["alice", "bob", "carol"])] {
                for v in vals {
                    space.insert(alloc::format!("SELECT {num} WHERE {text} = \"{v}\""));
                }
            }
        }
        for seed in 0..200 {
            let a = instantiate(&t, &demo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = instantiate(&t, &demo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(a, b);
            assert!(space.contains(&print_canonical(&a)), "{}", print_canonical(&a));
        }
    }

    #[test]
    fn distinct_slots_get_distinct_columns() {
        let demo = t_demo();
        let t = parse_template("two", "SELECT {num1} - {num2}").unwrap_err();
        assert!(matches!(t, TemplateError::Invalid(_)));
        let t = parse_template("two", "SELECT {num1} WHERE {num2} > {val1:num2}").unwrap();
        for seed in 0..100 {
            let q = instantiate(&t, &demo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let s = print_canonical(&q);
            assert!(s.starts_with("SELECT Year WHERE Pos") || s.starts_with("SELECT Pos WHERE Year"), "{s}");
        }
    }

    #[test]
    fn int_slots_stay_in_range() {
        let demo = t_demo();
        let t = parse_template("lim", "SELECT {col1} LIMIT {int1}").unwrap();
        for seed in 0..100 {
            let q = instantiate(&t, &demo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!((1..=3).contains(&q.limit.unwrap()));
        }
    }

    #[test]
    fn quoted_headers_and_literals() {
        let t = Table::from_raw("q", &["pick #", "CFL team"], &[vec!["27", "say \"hi\""]]).unwrap();
        let tpl = parse_template("x", "SELECT {num1} WHERE {text1} = {val1:text1}").unwrap();
        let q = instantiate(&tpl, &t, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(print_canonical(&q), "SELECT `pick #` WHERE `CFL team` = \"say \"\"hi\"\"\"");
    }
}
