//! Denotation accuracy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rust_decimal::Decimal;

use crate::analysis::{DifficultyLevel, OperatorTag};
use crate::synth::CorpusRecord;
use crate::table::parse_number;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub text: String,
    pub number: Option<Decimal>,
}

/// Normalised answers; a multiset, so order is irrelevant but repeats count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnswerSet {
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum AtomKey<'a> {
    Number(Decimal),
    Text(&'a str),
}

impl Atom {
    fn key(&self) -> AtomKey<'_> {
        match self.number {
            Some(n) => AtomKey::Number(n),
            None => AtomKey::Text(&self.text),
        }
    }
}

const QUOTE_PAIRS: [(char, char); 4] = [('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}'), ('\u{2018}', '\u{2019}')];

/// Trim, strip surrounding quotes, collapse internal whitespace, case-fold.
pub fn normalize_atom(raw: &str) -> Atom {
    let mut s = raw.trim();
    loop {
        let mut chars = s.chars();
        let (Some(first), Some(last)) = (chars.next(), chars.next_back()) else { break };
        if !QUOTE_PAIRS.contains(&(first, last)) {
            break;
        }
        s = s[first.len_utf8()..s.len() - last.len_utf8()].trim();
    }
    let mut text = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !text.is_empty() {
            text.push(' ');
        }
        text.extend(word.chars().flat_map(char::to_lowercase));
    }
    let number = parse_number(&text);
    Atom { text, number }
}

pub fn normalize_answer(raw: &str, separator: &str) -> AnswerSet {
    if raw.trim().is_empty() {
        return AnswerSet::default();
    }
    let atoms = if separator.is_empty() {
        alloc::vec![normalize_atom(raw)]
    } else {
        raw.split(separator).map(normalize_atom).collect()
    };
    AnswerSet { atoms }
}

/// Multiset equality where atoms carrying numbers compare numerically.
/// Atom equality is an equivalence (equal text implies equal numeric
/// status), so a perfect matching exists iff the sorted keys agree.
pub fn denotation_match(pred: &AnswerSet, gold: &AnswerSet) -> bool {
    if pred.atoms.len() != gold.atoms.len() {
        return false;
    }
    let mut a: Vec<AtomKey<'_>> = pred.atoms.iter().map(Atom::key).collect();
    let mut b: Vec<AtomKey<'_>> = gold.atoms.iter().map(Atom::key).collect();
    a.sort();
    b.sort();
    a == b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Breakdown {
    Difficulty,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    #[default]
    Normalized,
    /// Exact string equality of the raw rendered answers.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bucket {
    pub total: u64,
    pub correct: u64,
    pub accuracy: f64,
}

impl Bucket {
    fn record(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as u64;
    }

    fn finish(&mut self) {
        self.accuracy = if self.total == 0 { 0.0 } else { self.correct as f64 / self.total as f64 };
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub overall: Bucket,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub by_difficulty: Option<BTreeMap<DifficultyLevel, Bucket>>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub by_operator: Option<BTreeMap<OperatorTag, Bucket>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("LengthMismatchError: {predictions} predictions for {gold} gold records")]
    LengthMismatch { predictions: usize, gold: usize },
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        "LengthMismatchError"
    }
}

/// Scores line-aligned predictions against gold records.
pub fn score<S: AsRef<str>>(
    predictions: &[S],
    gold: &[CorpusRecord],
    breakdowns: &BTreeSet<Breakdown>,
    mode: MatchMode,
    separator: &str,
) -> Result<EvalReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), gold: gold.len() });
    }
    let mut report = EvalReport {
        by_difficulty: breakdowns.contains(&Breakdown::Difficulty).then(BTreeMap::new),
        by_operator: breakdowns.contains(&Breakdown::Operator).then(BTreeMap::new),
        ..Default::default()
    };
    for (pred, record) in predictions.iter().zip(gold) {
        let pred = pred.as_ref();
        let ok = match mode {
            MatchMode::Strict => pred == record.target,
            MatchMode::Normalized => denotation_match(
                &normalize_answer(pred, separator),
                &normalize_answer(&record.target, separator),
            ),
        };
        report.overall.record(ok);
        if let Some(m) = &mut report.by_difficulty {
            m.entry(record.difficulty).or_default().record(ok);
        }
        if let Some(m) = &mut report.by_operator {
            for tag in &record.operators {
                m.entry(*tag).or_default().record(ok);
            }
        }
    }
    report.overall.finish();
    for b in report.by_difficulty.iter_mut().flat_map(|m| m.values_mut()) {
        b.finish();
    }
    for b in report.by_operator.iter_mut().flat_map(|m| m.values_mut()) {
        b.finish();
    }
    Ok(report)
}
