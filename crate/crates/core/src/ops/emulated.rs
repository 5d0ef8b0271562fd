//! Emulated device-parallel implementations.
//!
//! These reproduce the accelerator-kernel semantics on a worker pool:
//! a grid of independent per-assertion (or per-individual) work items
//! with no skip-ahead, idempotent result writes, and atomic adds for
//! cardinality counting. Workers process contiguous blocks of the grid
//! for efficiency; each item remains independent.

use std::sync::atomic::Ordering::Relaxed;

use rayon::prelude::*;

use crate::kb::{NumericAssertion, RoleAssertion, StringAssertion, StringValueMap};

use super::atomic::{as_atomic_u32, as_atomic_u8};
use super::{endpoints, worker_chunk_len, BoolOp, CardinalityKind, NumericComparator, OpMetrics};

/// Warp width: one kernel instruction drives this many lanes in
/// lockstep.
const WARP: usize = 32;

/// Per-individual kernel: every individual folds the operand
/// memberships independently. Serialized warp-style: 32 lanes advance
/// through the operand loop in lockstep, partial warps lane by lane.
pub(super) fn boolean(rows: &[&[u8]], negated: &[bool], op: BoolOp, out: &mut [u8]) {
    if out.is_empty() {
        return;
    }
    let chunk = worker_chunk_len(out.len()).div_ceil(WARP) * WARP;
    out.par_chunks_mut(chunk).enumerate().for_each(|(ci, out_chunk)| {
        let base = ci * chunk;
        let full = out_chunk.len() / WARP * WARP;
        let mut pos = 0;
        while pos < full {
            let mut warp = [op.init(); WARP];
            for (row, &neg) in rows.iter().zip(negated) {
                let lanes = &row[base + pos..base + pos + WARP];
                for (acc, &lane) in warp.iter_mut().zip(lanes) {
                    *acc = op.apply(*acc, lane ^ neg as u8);
                }
            }
            out_chunk[pos..pos + WARP].copy_from_slice(&warp);
            pos += WARP;
        }
        for (i, cell) in out_chunk[full..].iter_mut().enumerate() {
            let mut acc = op.init();
            for (row, &neg) in rows.iter().zip(negated) {
                acc = op.apply(acc, row[base + full + i] ^ neg as u8);
            }
            *cell = acc;
        }
    });
}

pub(super) fn exists_role(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        for a in chunk {
            let (subj, obj) = endpoints(*a, inverse);
            if filler[obj] == 1 && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
        }
        metrics.add_scans(chunk.len() as u64);
    });
}

pub(super) fn forall_role(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(1);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        for a in chunk {
            let (subj, obj) = endpoints(*a, inverse);
            if filler[obj] == 0 && cells[subj].load(Relaxed) == 1 {
                cells[subj].store(0, Relaxed);
            }
        }
        metrics.add_scans(chunk.len() as u64);
    });
}

/// Per-assertion kernel: one atomic add per matching assertion.
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
        for a in chunk {
            let (subj, obj) = endpoints(*a, inverse);
            if filler[obj] == 1 {
                cells[subj].fetch_add(1, Relaxed);
            }
        }
        metrics.add_scans(chunk.len() as u64);
    });
}

/// Per-individual cardinality filter kernel.
pub(super) fn apply_cardinality(counters: &[u32], kind: CardinalityKind, bound: u32, out: &mut [u8]) {
    if out.is_empty() {
        return;
    }
    let chunk = worker_chunk_len(out.len());
    out.par_chunks_mut(chunk)
        .zip(counters.par_chunks(chunk))
        .for_each(|(out_chunk, counter_chunk)| {
            for (cell, &count) in out_chunk.iter_mut().zip(counter_chunk) {
                *cell = kind.matches(count, bound) as u8;
            }
        });
}

pub(super) fn exists_numeric(
    asserts: &[NumericAssertion],
    cmp: NumericComparator,
    threshold: f32,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        for a in chunk {
            let subj = a.subj as usize;
            if cmp.matches(a.val, threshold) && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
        }
        metrics.add_scans(chunk.len() as u64);
    });
}

pub(super) fn string_equal(asserts: &[StringAssertion], target: u32, out: &mut [u8], metrics: &OpMetrics) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        for a in chunk {
            let subj = a.subj as usize;
            if a.val_index == target && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
        }
        metrics.add_scans(chunk.len() as u64);
    });
}

pub(super) fn string_contain(
    asserts: &[StringAssertion],
    values: &StringValueMap,
    pattern: &str,
    out: &mut [u8],
    metrics: &OpMetrics,
) {
    out.fill(0);
    if asserts.is_empty() {
        return;
    }
    let cells = as_atomic_u8(out);
    asserts.par_chunks(worker_chunk_len(asserts.len())).for_each(|chunk| {
        for a in chunk {
            let subj = a.subj as usize;
            let value = values.value(a.val_index).expect("dense value id");
            if value.contains(pattern) && cells[subj].load(Relaxed) == 0 {
                cells[subj].store(1, Relaxed);
            }
        }
        metrics.add_scans(chunk.len() as u64);
    });
}
