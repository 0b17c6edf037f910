//! Aligned-column text renderings of reports.

use std::fmt::Write;

use sqlsynth_core::analysis::StatsReport;
use sqlsynth_core::eval::{Bucket, EvalReport};

/// First column left-aligned, the rest right-aligned, two spaces apart.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (j, cell) in r.iter().enumerate() {
            if j == 0 {
                write!(line, "{cell:<w$}", w = widths[0]).unwrap();
            } else {
                write!(line, "  {cell:>w$}", w = widths[j]).unwrap();
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn share(n: u64, total: u64) -> String {
    if total == 0 {
        "0.0000".into()
    } else {
        format!("{:.4}", n as f64 / total as f64)
    }
}

fn section<K: ToString>(out: &mut String, title: &str, entries: impl Iterator<Item = (K, u64)>, total: u64) {
    let mut rows = vec![vec![title.to_string(), "count".into(), "share".into()]];
    rows.extend(entries.map(|(k, n)| vec![k.to_string(), n.to_string(), share(n, total)]));
    out.push('\n');
    out.push_str(&aligned(&rows));
}

pub fn stats_text(r: &StatsReport) -> String {
    let mut out = format!("records  {}\n", r.records);
    section(&mut out, "difficulty", r.by_difficulty.iter().map(|(k, v)| (k, *v)), r.records);
    section(&mut out, "operator", r.by_operator.iter().map(|(k, v)| (k, *v)), r.records);
    section(&mut out, "template", r.by_template.iter().map(|(k, v)| (k, *v)), r.records);
    section(&mut out, "table", r.by_table.iter().map(|(k, v)| (k, *v)), r.records);
    let lengths = r.target_length_log2.iter().map(|(k, v)| {
        let lo = if *k == 0 { 0 } else { 1u64 << k };
        (format!("{lo}-{}", (1u64 << (k + 1)) - 1), *v)
    });
    section(&mut out, "target chars", lengths, r.records);
    out
}

fn bucket_row(name: String, b: &Bucket) -> Vec<String> {
    vec![name, b.total.to_string(), b.correct.to_string(), format!("{:.4}", b.accuracy)]
}

pub fn eval_text(r: &EvalReport) -> String {
    let header = || vec!["bucket".to_string(), "total".into(), "correct".into(), "accuracy".into()];
    let mut rows = vec![header(), bucket_row("overall".into(), &r.overall)];
    if let Some(m) = &r.by_difficulty {
        rows.extend(m.iter().map(|(k, b)| bucket_row(k.to_string(), b)));
    }
    if let Some(m) = &r.by_operator {
        rows.extend(m.iter().map(|(k, b)| bucket_row(k.to_string(), b)));
    }
    aligned(&rows)
}
