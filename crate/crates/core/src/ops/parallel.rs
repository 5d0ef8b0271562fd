//! Multithreaded scalar implementations.
//!
//! Conjunction/disjunction split the individuals axis into one
//! contiguous chunk per worker, so output chunks are disjoint and
//! written directly. Restrictions split the assertion segment instead;
//! chunk boundaries may cut a subject run, which is safe because the
//! skip-ahead is an optimization, not a correctness requirement.
//! Workers share the output row through relaxed atomics and only ever
//! race to write identical values.

use std::sync::atomic::Ordering::Relaxed;

use rayon::prelude::*;

use crate::kb::{NumericAssertion, RoleAssertion, StringAssertion, StringValueMap};

use super::atomic::{as_atomic_u32, as_atomic_u8};
use super::{endpoints, scalar, worker_chunk_len, BoolOp, CardinalityKind, NumericComparator, OpMetrics};

pub(super) fn boolean(rows: &[&[u8]], negated: &[bool], op: BoolOp, out: &mut [u8]) {
    if out.is_empty() {
        return;
    }
    let chunk = worker_chunk_len(out.len());
    out.par_chunks_mut(chunk).enumerate().for_each(|(ci, out_chunk)| {
        scalar::boolean_range(rows, negated, op, ci * chunk, out_chunk);
    });
}

pub(super) fn exists_role(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    skip_ahead: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        let mut scanned = 0u64;
        let mut i = 0;
        while i < chunk.len() {
            let (subj, obj) = endpoints(chunk[i], inverse);
            if skip_ahead && cells[subj].load(Relaxed) == 1 {
                while i < chunk.len() && endpoints(chunk[i], inverse).0 == subj {
                    i += 1;
                }
                continue;
            }
            scanned += 1;
            if filler[obj] == 1 && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
            i += 1;
        }
        metrics.add_scans(scanned);
    });
}

pub(super) fn forall_role(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    skip_ahead: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(1);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        let mut scanned = 0u64;
        let mut i = 0;
        while i < chunk.len() {
            let (subj, obj) = endpoints(chunk[i], inverse);
            if skip_ahead && cells[subj].load(Relaxed) == 0 {
                while i < chunk.len() && endpoints(chunk[i], inverse).0 == subj {
                    i += 1;
                }
                continue;
            }
            scanned += 1;
            if filler[obj] == 0 && cells[subj].load(Relaxed) == 1 {
                cells[subj].store(0, Relaxed);
            }
            i += 1;
        }
        metrics.add_scans(scanned);
    });
}

/// Per-worker subject-run local counts, flushed with one atomic add per
/// run (runs split by a chunk boundary flush once per side).
pub(super) fn count_matches(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    counters: &mut [u32],
    metrics: &OpMetrics,
) {
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u32(counters);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        let mut scanned = 0u64;
        let mut i = 0;
        while i < chunk.len() {
            let (subj, _) = endpoints(chunk[i], inverse);
            let mut count = 0u32;
            while i < chunk.len() {
                let (s, obj) = endpoints(chunk[i], inverse);
                if s != subj {
                    break;
                }
                count += filler[obj] as u32;
                i += 1;
                scanned += 1;
            }
            if count > 0 {
                cells[subj].fetch_add(count, Relaxed);
            }
        }
        metrics.add_scans(scanned);
    });
}

pub(super) fn apply_cardinality(counters: &[u32], kind: CardinalityKind, bound: u32, out: &mut [u8]) {
    if out.is_empty() {
        return;
    }
    let chunk = worker_chunk_len(out.len());
    out.par_chunks_mut(chunk)
        .zip(counters.par_chunks(chunk))
        .for_each(|(out_chunk, counter_chunk)| {
            scalar::apply_cardinality(counter_chunk, kind, bound, out_chunk);
        });
}

pub(super) fn exists_numeric(
    asserts: &[NumericAssertion],
    cmp: NumericComparator,
    threshold: f32,
    skip_ahead: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        let mut scanned = 0u64;
        let mut i = 0;
        while i < chunk.len() {
            let subj = chunk[i].subj as usize;
            if skip_ahead && cells[subj].load(Relaxed) == 1 {
                while i < chunk.len() && chunk[i].subj as usize == subj {
                    i += 1;
                }
                continue;
            }
            scanned += 1;
            if cmp.matches(chunk[i].val, threshold) && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
            i += 1;
        }
        metrics.add_scans(scanned);
    });
}

pub(super) fn string_equal(
    asserts: &[StringAssertion],
    target: u32,
    skip_ahead: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        let mut scanned = 0u64;
        let mut i = 0;
        while i < chunk.len() {
            let subj = chunk[i].subj as usize;
            if skip_ahead && cells[subj].load(Relaxed) == 1 {
                while i < chunk.len() && chunk[i].subj as usize == subj {
                    i += 1;
                }
                continue;
            }
            scanned += 1;
            if chunk[i].val_index == target && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
            i += 1;
        }
        metrics.add_scans(scanned);
    });
}

pub(super) fn string_contain(
    asserts: &[StringAssertion],
    values: &StringValueMap,
    pattern: &str,
    skip_ahead: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        let mut scanned = 0u64;
        let mut i = 0;
        while i < chunk.len() {
            let subj = chunk[i].subj as usize;
            if skip_ahead && cells[subj].load(Relaxed) == 1 {
                while i < chunk.len() && chunk[i].subj as usize == subj {
                    i += 1;
                }
                continue;
            }
            scanned += 1;
            let value = values.value(chunk[i].val_index).expect("dense value id");
            if value.contains(pattern) && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
            i += 1;
        }
        metrics.add_scans(scanned);
    });
}
