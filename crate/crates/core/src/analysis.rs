//! Difficulty bands and operator tags for queries, and corpus statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::sql::*;
use crate::synth::CorpusRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DifficultyLevel {
    Easy,
    Medium,
    Hard,
    ExtraHard,
}

impl DifficultyLevel {
    pub const ALL: [DifficultyLevel; 4] =
        [DifficultyLevel::Easy, DifficultyLevel::Medium, DifficultyLevel::Hard, DifficultyLevel::ExtraHard];

    /// Band for a query with `elements` elements.
    pub fn from_element_count(elements: usize) -> DifficultyLevel {
        match elements {
            0..=6 => DifficultyLevel::Easy,
            7..=14 => DifficultyLevel::Medium,
            15..=20 => DifficultyLevel::Hard,
            _ => DifficultyLevel::ExtraHard,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DifficultyLevel::Easy => "Easy",
            DifficultyLevel::Medium => "Medium",
            DifficultyLevel::Hard => "Hard",
            DifficultyLevel::ExtraHard => "ExtraHard",
        }
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DifficultyLevel {
    type Err = String;

    /// Accepts the display names and lower-case or hyphenated spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        match key.as_str() {
            "easy" => Ok(DifficultyLevel::Easy),
            "medium" => Ok(DifficultyLevel::Medium),
            "hard" => Ok(DifficultyLevel::Hard),
            "extrahard" => Ok(DifficultyLevel::ExtraHard),
            _ => Err(alloc::format!("unknown difficulty level {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OperatorTag {
    Select,
    Filter,
    Aggregate,
    Superlative,
    Arithmetic,
    Comparative,
    Group,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 7] = [
        OperatorTag::Select,
        OperatorTag::Filter,
        OperatorTag::Aggregate,
        OperatorTag::Superlative,
        OperatorTag::Arithmetic,
        OperatorTag::Comparative,
        OperatorTag::Group,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorTag::Select => "Select",
            OperatorTag::Filter => "Filter",
            OperatorTag::Aggregate => "Aggregate",
            OperatorTag::Superlative => "Superlative",
            OperatorTag::Arithmetic => "Arithmetic",
            OperatorTag::Comparative => "Comparative",
            OperatorTag::Group => "Group",
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_difficulty(query: &SqlQuery) -> DifficultyLevel {
    DifficultyLevel::from_element_count(element_stream(query).len())
}

pub fn tag_operators(query: &SqlQuery) -> BTreeSet<OperatorTag> {
    let mut tags = BTreeSet::new();
    tags.insert(OperatorTag::Select);
    if query.where_clause.is_some() {
        tags.insert(OperatorTag::Filter);
    }
    if query.group_by.is_some() {
        tags.insert(OperatorTag::Group);
    }
    if query.order_by.is_some() && query.limit == Some(1) {
        tags.insert(OperatorTag::Superlative);
    }
    // top-level MIN/MAX projections count as superlatives
    visit_aggregates(query, &mut |a| {
        if matches!(a.func, AggFunc::Min | AggFunc::Max) && !is_order_key(query, a) {
            tags.insert(OperatorTag::Superlative);
        }
    });
    deep_tags(query, &mut tags);
    tags
}

fn is_order_key(q: &SqlQuery, a: &Aggregate) -> bool {
    matches!(&q.order_by, Some(OrderBy { key: OrderKey::Aggregate(k), .. }) if core::ptr::eq(k, a))
}

/// Tags that any nested query level contributes.
fn deep_tags(q: &SqlQuery, tags: &mut BTreeSet<OperatorTag>) {
    visit_aggregates(q, &mut |_| {
        tags.insert(OperatorTag::Aggregate);
    });
    let scalar_arith = |s: &ScalarExpr| matches!(s, ScalarExpr::Arith(..));
    for p in &q.projection {
        let arith = match p {
            SelectExpr::Scalar(s) => scalar_arith(s),
            SelectExpr::Compare(l, _, r) => scalar_arith(l) || scalar_arith(r),
            SelectExpr::Column(_) => false,
        };
        if arith {
            tags.insert(OperatorTag::Arithmetic);
        }
    }
    fn comparative(c: &Condition) -> bool {
        match c {
            Condition::Compare { op, .. } => *op != CmpOp::Eq,
            Condition::InList { .. } => true,
            Condition::And(a, b) | Condition::Or(a, b) => comparative(a) || comparative(b),
            Condition::Not(a) => comparative(a),
        }
    }
    if q.where_clause.as_ref().is_some_and(comparative) {
        tags.insert(OperatorTag::Comparative);
    }
    let _ = for_each_subquery::<()>(q, &mut |sub| {
        deep_tags(sub, tags);
        Ok(())
    });
}

/// Counts over a corpus. Merging two reports is associative and
/// commutative, so shards may be tallied independently.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatsReport {
    pub records: u64,
    pub by_difficulty: BTreeMap<DifficultyLevel, u64>,
    pub by_operator: BTreeMap<OperatorTag, u64>,
    pub by_template: BTreeMap<String, u64>,
    pub by_table: BTreeMap<String, u64>,
    /// Target length in characters, bucketed by powers of two: key `k`
    /// counts lengths in `[2^k, 2^(k+1))`, key 0 also holds length 0.
    pub target_length_log2: BTreeMap<u32, u64>,
}

fn bump<K: Ord>(map: &mut BTreeMap<K, u64>, key: K, by: u64) {
    *map.entry(key).or_insert(0) += by;
}

impl StatsReport {
    pub fn add(&mut self, record: &CorpusRecord) {
        self.records += 1;
        bump(&mut self.by_difficulty, record.difficulty, 1);
        for tag in &record.operators {
            bump(&mut self.by_operator, *tag, 1);
        }
        bump(&mut self.by_template, record.template_id.clone(), 1);
        bump(&mut self.by_table, record.table_id.clone(), 1);
        let len = record.target.chars().count().max(1);
        bump(&mut self.target_length_log2, len.ilog2(), 1);
    }

    pub fn merge(mut self, other: StatsReport) -> StatsReport {
        self.records += other.records;
        for (k, v) in other.by_difficulty {
            bump(&mut self.by_difficulty, k, v);
        }
        for (k, v) in other.by_operator {
            bump(&mut self.by_operator, k, v);
        }
        for (k, v) in other.by_template {
            bump(&mut self.by_template, k, v);
        }
        for (k, v) in other.by_table {
            bump(&mut self.by_table, k, v);
        }
        for (k, v) in other.target_length_log2 {
            bump(&mut self.target_length_log2, k, v);
        }
        self
    }
}

pub fn corpus_stats<'a>(records: impl IntoIterator<Item = &'a CorpusRecord>) -> StatsReport {
    let mut report = StatsReport::default();
    for r in records {
        report.add(r);
    }
    report
}
