//! Corpus synthesis: sample a table and a compatible template, instantiate,
//! execute, keep non-empty results.
//!
//! Record slot `i` draws from its own ChaCha8 stream (`global_seed`,
//! stream `i`), so slots can be computed in any order or in parallel. Only
//! deduplication is sequential: [`Synthesizer::resolve`] walks slots in
//! order and asks a slot for further candidates when its first one is a
//! duplicate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{classify_difficulty, tag_operators, DifficultyLevel, OperatorTag};
use crate::exec::{execute, render_denotation, DEFAULT_SEPARATOR};
use crate::linearize::{flatten_table, truncate_rows};
use crate::sql::{parse, print_canonical};
use crate::table::Table;
use crate::template::{compatible, instantiate, QueryTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SeedPath {
    pub global_seed: u64,
    /// Record slot whose stream produced the record.
    pub shard: u64,
    /// 1-based attempt within the slot.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CorpusRecord {
    pub source: String,
    pub target: String,
    pub sql: String,
    pub table_id: String,
    pub difficulty: DifficultyLevel,
    pub operators: BTreeSet<OperatorTag>,
    pub template_id: String,
    pub seed_path: SeedPath,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthesisConfig {
    pub target_count: u64,
    pub max_attempts_per_record: u32,
    /// Rows are dropped from the end of a table until the source fits.
    /// `None` keeps whole tables.
    pub max_source_chars: Option<usize>,
    pub dedup: bool,
    pub difficulty_mix: Option<BTreeMap<DifficultyLevel, f64>>,
    pub separator: String,
    pub global_seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            target_count: 1000,
            max_attempts_per_record: 50,
            max_source_chars: None,
            dedup: true,
            difficulty_mix: None,
            separator: DEFAULT_SEPARATOR.into(),
            global_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("NoCompatiblePairError: {0}")]
    NoCompatiblePair(String),
    #[error("ExhaustionError: produced {produced} of {target} records; shortfall {}", fmt_shortfall(.shortfall))]
    Exhaustion { produced: u64, target: u64, shortfall: BTreeMap<String, u64> },
    #[error("DegenerateError: {0}")]
    Degenerate(String),
}

fn fmt_shortfall(s: &BTreeMap<String, u64>) -> String {
    let parts: Vec<String> = s.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(", ")
}

impl SynthError {
    pub fn kind(&self) -> &'static str {
        match self {
            SynthError::Config(_) => "ConfigError",
            SynthError::NoCompatiblePair(_) => "NoCompatiblePairError",
            SynthError::Exhaustion { .. } => "ExhaustionError",
            SynthError::Degenerate(_) => "DegenerateError",
        }
    }
}

/// Splits `total` by `fractions` with the largest-remainder method.
pub fn level_quotas(mix: &BTreeMap<DifficultyLevel, f64>, total: u64) -> BTreeMap<DifficultyLevel, u64> {
    let mut quotas: BTreeMap<DifficultyLevel, u64> = BTreeMap::new();
    let mut rema: Vec<(f64, DifficultyLevel)> = Vec::new();
    let mut assigned = 0;
    for (&level, &f) in mix {
        let exact = f * total as f64;
        let floor = exact as u64;
        quotas.insert(level, floor);
        assigned += floor;
        rema.push((exact - floor as f64, level));
    }
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, level) in rema.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        *quotas.get_mut(level).unwrap() += 1;
    }
    quotas
}

/// Per-slot level sequence hitting `quotas` exactly, interleaved so every
/// prefix stays close to the requested proportions.
fn interleave_levels(quotas: &BTreeMap<DifficultyLevel, u64>, total: u64) -> Vec<DifficultyLevel> {
    let mut given: BTreeMap<DifficultyLevel, u64> = quotas.keys().map(|k| (*k, 0)).collect();
    let mut out = Vec::with_capacity(total as usize);
    for i in 1..=total as i128 {
        // largest lag behind the ideal count (q * i / total) goes next
        let lag = |l: &DifficultyLevel, q: u64| q as i128 * i * 2 - (given[l] as i128 * 2 + 1) * total as i128;
        let level = quotas
            .iter()
            .filter(|(l, q)| given[*l] < **q)
            .max_by(|(la, qa), (lb, qb)| lag(la, **qa).cmp(&lag(lb, **qb)).then(lb.cmp(la)))
            .map(|(l, _)| *l)
            .unwrap();
        *given.get_mut(&level).unwrap() += 1;
        out.push(level);
    }
    out
}

struct Pool {
    /// Tables with at least one usable template, and those templates.
    tables: Vec<(usize, Vec<usize>)>,
}

/// Shared, immutable synthesis state.
pub struct Synthesizer<'a> {
    tables: &'a [Table],
    templates: &'a [QueryTemplate],
    config: SynthesisConfig,
    flat: Vec<String>,
    /// Keyed by level when a mix is set, otherwise a single `None` pool.
    pools: BTreeMap<Option<DifficultyLevel>, Pool>,
    slot_levels: Option<Vec<DifficultyLevel>>,
}

/// Candidate stream of one record slot.
pub struct SlotStream {
    slot: u64,
    rng: ChaCha8Rng,
    attempt: u32,
}

impl SlotStream {
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn attempts(&self) -> u32 {
        self.attempt
    }
}

impl<'a> Synthesizer<'a> {
    pub fn new(tables: &'a [Table], templates: &'a [QueryTemplate], config: SynthesisConfig) -> Result<Self, SynthError> {
        if config.target_count == 0 || config.max_attempts_per_record == 0 {
            return Err(SynthError::Config("target_count and max_attempts_per_record must be positive".into()));
        }
        if config.max_source_chars == Some(0) {
            return Err(SynthError::Config("max_source_chars must be positive".into()));
        }
        if tables.is_empty() || templates.is_empty() {
            return Err(SynthError::NoCompatiblePair("no tables or no templates".into()));
        }
        let mut levels = Vec::with_capacity(templates.len());
        for t in templates {
            let q = parse(&t.placeholder_sql(), None)
                .map_err(|e| SynthError::Config(format!("template {}: {e}", t.id)))?;
            levels.push(classify_difficulty(&q));
        }
        let mut flat = Vec::with_capacity(tables.len());
        for t in tables {
            flat.push(flatten_table(t).map_err(|e| SynthError::Config(format!("table {}: {e}", t.id())))?);
        }

        let mut pools = BTreeMap::new();
        let mut slot_levels = None;
        match &config.difficulty_mix {
            None => {
                pools.insert(None, build_pool(tables, templates, |_| true));
            }
            Some(mix) => {
                let sum: f64 = mix.values().sum();
                if mix.values().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(SynthError::Config(format!("difficulty_mix fractions must lie in [0, 1] and sum to 1, got {sum}")));
                }
                let quotas = level_quotas(mix, config.target_count);
                for (&level, &q) in &quotas {
                    if q > 0 {
                        pools.insert(Some(level), build_pool(tables, templates, |i| levels[i] == level));
                    }
                }
                slot_levels = Some(interleave_levels(&quotas, config.target_count));
            }
        }
        for (level, pool) in &pools {
            if pool.tables.is_empty() {
                return Err(SynthError::NoCompatiblePair(match level {
                    Some(l) => format!("no compatible (template, table) pair at level {l}"),
                    None => "no template is compatible with any table".into(),
                }));
            }
        }
        Ok(Synthesizer { tables, templates, config, flat, pools, slot_levels })
    }

    pub fn config(&self) -> &SynthesisConfig {
        &self.config
    }

    pub fn slot_level(&self, slot: u64) -> Option<DifficultyLevel> {
        self.slot_levels.as_ref().map(|l| l[slot as usize])
    }

    pub fn stream(&self, slot: u64) -> SlotStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.global_seed);
        rng.set_stream(slot);
        SlotStream { slot, rng, attempt: 0 }
    }

    /// Next kept record of the slot, ignoring duplicates; `None` once the
    /// attempt budget is spent.
    pub fn next_candidate(&self, s: &mut SlotStream) -> Option<CorpusRecord> {
        let pool = &self.pools[&self.slot_level(s.slot)];
        while s.attempt < self.config.max_attempts_per_record {
            s.attempt += 1;
            let (ti, usable) = &pool.tables[s.rng.random_range(0..pool.tables.len())];
            let template = &self.templates[usable[s.rng.random_range(0..usable.len())]];
            if let Some(r) = self.attempt(&self.tables[*ti], *ti, template, s) {
                return Some(r);
            }
        }
        None
    }

    fn attempt(&self, table: &Table, ti: usize, template: &QueryTemplate, s: &mut SlotStream) -> Option<CorpusRecord> {
        let query = instantiate(template, table, &mut s.rng).ok()?;
        let sql = print_canonical(&query);
        let (denotation, source) = match self.config.max_source_chars {
            Some(budget) => {
                let cut = truncate_rows(table, budget, &sql).ok()?;
                let d = execute(&query, &cut).ok()?;
                (d, format!("{sql} {}", flatten_table(&cut).ok()?))
            }
            None => (execute(&query, table).ok()?, format!("{sql} {}", self.flat[ti])),
        };
        if denotation.is_empty() {
            return None;
        }
        let target = render_denotation(&denotation, &self.config.separator);
        if target.is_empty() {
            return None;
        }
        Some(CorpusRecord {
            source,
            target,
            sql,
            table_id: table.id().into(),
            difficulty: classify_difficulty(&query),
            operators: tag_operators(&query),
            template_id: template.id.clone(),
            seed_path: SeedPath { global_seed: self.config.global_seed, shard: s.slot, attempt: s.attempt },
        })
    }

    /// Settles one slot in order: `first` is the slot's first candidate,
    /// and further candidates are drawn while it collides with `seen`.
    pub fn resolve(
        &self,
        stream: &mut SlotStream,
        first: Option<CorpusRecord>,
        seen: &mut BTreeSet<(String, String)>,
    ) -> Option<CorpusRecord> {
        let mut cand = first;
        loop {
            let r = cand?;
            if !self.config.dedup || seen.insert((r.table_id.clone(), r.sql.clone())) {
                return Some(r);
            }
            cand = self.next_candidate(stream);
        }
    }

    /// Shortfall error for the slots that came up empty.
    pub fn exhaustion(&self, failed: &[u64], produced: u64) -> SynthError {
        let mut shortfall = BTreeMap::new();
        for &slot in failed {
            let key = match self.slot_level(slot) {
                Some(l) => String::from(l.name()),
                None => String::from("all"),
            };
            *shortfall.entry(key).or_insert(0) += 1;
        }
        SynthError::Exhaustion { produced, target: self.config.target_count, shortfall }
    }
}

fn build_pool(tables: &[Table], templates: &[QueryTemplate], admit: impl Fn(usize) -> bool) -> Pool {
    let mut out = Vec::new();
    for (ti, t) in tables.iter().enumerate() {
        let usable: Vec<usize> = (0..templates.len()).filter(|&i| admit(i) && compatible(&templates[i], t)).collect();
        if !usable.is_empty() {
            out.push((ti, usable));
        }
    }
    Pool { tables: out }
}

/// Sequential synthesis; `sink` receives records in slot order.
pub fn synthesize_with(
    tables: &[Table],
    templates: &[QueryTemplate],
    config: SynthesisConfig,
    mut sink: impl FnMut(CorpusRecord),
) -> Result<u64, SynthError> {
    let syn = Synthesizer::new(tables, templates, config)?;
    let mut seen = BTreeSet::new();
    let mut failed = Vec::new();
    let mut produced = 0;
    for slot in 0..syn.config.target_count {
        let mut s = syn.stream(slot);
        let first = syn.next_candidate(&mut s);
        match syn.resolve(&mut s, first, &mut seen) {
            Some(r) if failed.is_empty() => {
                produced += 1;
                sink(r);
            }
            Some(_) => produced += 1,
            None => failed.push(slot),
        }
    }
    if failed.is_empty() {
        Ok(produced)
    } else {
        Err(syn.exhaustion(&failed, produced))
    }
}

pub fn synthesize(
    tables: &[Table],
    templates: &[QueryTemplate],
    config: SynthesisConfig,
) -> Result<Vec<CorpusRecord>, SynthError> {
    let mut out = Vec::new();
    synthesize_with(tables, templates, config, |r| out.push(r))?;
    Ok(out)
}

/// Partitions records by table: whole tables go to the holdout side until
/// its record count is as close as possible to `fraction` of the total.
/// Relative record order is kept on both sides.
pub fn split_holdout(
    records: Vec<CorpusRecord>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<CorpusRecord>, Vec<CorpusRecord>), SynthError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SynthError::Config(format!("fraction must lie strictly between 0 and 1, got {fraction}")));
    }
    let mut sizes: BTreeMap<&str, u64> = BTreeMap::new();
    for r in &records {
        *sizes.entry(r.table_id.as_str()).or_insert(0) += 1;
    }
    if sizes.len() < 2 {
        return Err(SynthError::Degenerate(format!("{} distinct table ids, need at least 2", sizes.len())));
    }
    let mut ids: Vec<(&str, u64)> = sizes.into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let target = fraction * records.len() as f64;
    let mut held = 0.0;
    let mut chosen: Vec<&str> = Vec::new();
    for &(id, n) in &ids {
        let n = n as f64;
        if (held + n - target).abs() < (held - target).abs() {
            held += n;
            chosen.push(id);
        }
    }
    if chosen.is_empty() {
        chosen.push(ids[0].0);
    } else if chosen.len() == ids.len() {
        chosen.pop();
    }
    let chosen: BTreeSet<String> = chosen.into_iter().map(String::from).collect();
    let (holdout, train): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| chosen.contains(&r.table_id));
    Ok((train, holdout))
}
