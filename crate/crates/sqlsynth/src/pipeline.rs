//! Multi-threaded synthesis with output identical to the sequential path.
//!
//! Slots are processed in chunks: worker threads compute each slot's first
//! candidate, then one thread settles the chunk in slot order, drawing
//! more candidates from a slot only when dedup rejects its first one.

use std::collections::BTreeSet;

use rayon::prelude::*;
use sqlsynth_core::synth::{CorpusRecord, SynthError, SynthesisConfig, Synthesizer};
use sqlsynth_core::table::Table;
use sqlsynth_core::template::QueryTemplate;

const SLOTS_PER_THREAD: u64 = 2048;

/// Default worker count: `SQLSYNTH_JOBS`, else the available parallelism.
pub fn default_jobs() -> usize {
    std::env::var("SQLSYNTH_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs synthesis on `jobs` threads, passing records to `sink` in slot
/// order. Returns the record count.
pub fn synthesize_parallel<E: From<SynthError>>(
    tables: &[Table],
    templates: &[QueryTemplate],
    config: SynthesisConfig,
    jobs: usize,
    mut sink: impl FnMut(CorpusRecord) -> Result<(), E>,
) -> Result<u64, E> {
    let syn = Synthesizer::new(tables, templates, config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SynthError::Config(format!("thread pool: {e}")))?;
    let total = syn.config().target_count;
    let chunk = SLOTS_PER_THREAD * jobs.max(1) as u64;
    let mut seen = BTreeSet::new();
    let mut failed = Vec::new();
    let mut produced = 0;
    let mut start = 0;
    while start < total {
        let end = (start + chunk).min(total);
        let firsts: Vec<_> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|slot| {
                    let mut s = syn.stream(slot);
                    let first = syn.next_candidate(&mut s);
                    (s, first)
                })
                .collect()
        });
        for (mut s, first) in firsts {
            match syn.resolve(&mut s, first, &mut seen) {
                Some(r) => {
                    produced += 1;
                    if failed.is_empty() {
                        sink(r)?;
                    }
                }
                None => failed.push(s.slot()),
            }
        }
        start = end;
    }
    if failed.is_empty() {
        Ok(produced)
    } else {
        Err(syn.exhaustion(&failed, produced).into())
    }
}
