//! Single-threaded baseline implementations.
//!
//! Restriction scans return the number of assertion entries whose match
//! predicate was evaluated; entries consumed by the skip-ahead fast
//! path are not counted, which makes the fast path observable.

use crate::kb::{NumericAssertion, RoleAssertion, StringAssertion, StringValueMap};

use super::{endpoints, BoolOp, CardinalityKind, NumericComparator};

pub(super) fn boolean(rows: &[&[u8]], negated: &[bool], op: BoolOp, out: &mut [u8]) {
    boolean_range(rows, negated, op, 0, out);
}

/// Folds the operand rows into `out`, which covers individuals
/// `base..base + out.len()`.
pub(super) fn boolean_range(rows: &[&[u8]], negated: &[bool], op: BoolOp, base: usize, out: &mut [u8]) {
    for (i, cell) in out.iter_mut().enumerate() {
        let mut acc = op.init();
        for (row, &neg) in rows.iter().zip(negated) {
            acc = op.apply(acc, row[base + i] ^ neg as u8);
        }
        *cell = acc;
    }
}

pub(super) fn exists_role(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    skip_ahead: bool,
    out: &mut [u8],
) -> u64 {
    out.fill(0);
    let mut scanned = 0u64;
    let mut i = 0;
    while i < asserts.len() {
        let (subj, obj) = endpoints(asserts[i], inverse);
        // Result already found for this subject? Skip the rest of its
        // assertions instead of re-writing the same cell.
        if skip_ahead && out[subj] == 1 {
            while i < asserts.len() && endpoints(asserts[i], inverse).0 == subj {
                i += 1;
            }
            continue;
        }
        scanned += 1;
        if filler[obj] == 1 && out[subj] == 0 {
            out[subj] = 1;
        }
        i += 1;
    }
    scanned
}

pub(super) fn forall_role(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    skip_ahead: bool,
    out: &mut [u8],
) -> u64 {
    // Every individual is matched until a counterexample assertion is
    // found; individuals with no assertions stay matched.
    out.fill(1);
    let mut scanned = 0u64;
    let mut i = 0;
    while i < asserts.len() {
        let (subj, obj) = endpoints(asserts[i], inverse);
        if skip_ahead && out[subj] == 0 {
            while i < asserts.len() && endpoints(asserts[i], inverse).0 == subj {
                i += 1;
            }
            continue;
        }
        scanned += 1;
        if filler[obj] == 0 && out[subj] == 1 {
            out[subj] = 0;
        }
        i += 1;
    }
    scanned
}

/// Accumulates per-subject match counts into `counters`, one
/// subject-run at a time.
pub(super) fn count_matches(
    asserts: &[RoleAssertion],
    filler: &[u8],
    inverse: bool,
    counters: &mut [u32],
) -> u64 {
    let mut scanned = 0u64;
    let mut i = 0;
    while i < asserts.len() {
        let (subj, _) = endpoints(asserts[i], inverse);
        let mut count = 0u32;
        while i < asserts.len() {
            let (s, obj) = endpoints(asserts[i], inverse);
            if s != subj {
                break;
            }
            count += filler[obj] as u32;
            i += 1;
            scanned += 1;
        }
        if count > 0 {
            counters[subj] += count;
        }
    }
    scanned
}

pub(super) fn apply_cardinality(counters: &[u32], kind: CardinalityKind, bound: u32, out: &mut [u8]) {
    for (cell, &count) in out.iter_mut().zip(counters) {
        *cell = kind.matches(count, bound) as u8;
    }
}

pub(super) fn exists_numeric(
    asserts: &[NumericAssertion],
    cmp: NumericComparator,
    threshold: f32,
    skip_ahead: bool,
    out: &mut [u8],
) -> u64 {
    out.fill(0);
    let mut scanned = 0u64;
    let mut i = 0;
    while i < asserts.len() {
        let subj = asserts[i].subj as usize;
        if skip_ahead && out[subj] == 1 {
            while i < asserts.len() && asserts[i].subj as usize == subj {
                i += 1;
            }
            continue;
        }
        scanned += 1;
        if cmp.matches(asserts[i].val, threshold) && out[subj] == 0 {
            out[subj] = 1;
        }
        i += 1;
    }
    scanned
}

pub(super) fn string_equal(
    asserts: &[StringAssertion],
    target: u32,
    skip_ahead: bool,
    out: &mut [u8],
) -> u64 {
    out.fill(0);
    let mut scanned = 0u64;
    let mut i = 0;
    while i < asserts.len() {
        let subj = asserts[i].subj as usize;
        if skip_ahead && out[subj] == 1 {
            while i < asserts.len() && asserts[i].subj as usize == subj {
                i += 1;
            }
            continue;
        }
        scanned += 1;
        if asserts[i].val_index == target && out[subj] == 0 {
            out[subj] = 1;
        }
        i += 1;
    }
    scanned
}

pub(super) fn string_contain(
    asserts: &[StringAssertion],
    values: &StringValueMap,
    pattern: &str,
    skip_ahead: bool,
    out: &mut [u8],
) -> u64 {
    out.fill(0);
    let mut scanned = 0u64;
    let mut i = 0;
    while i < asserts.len() {
        let subj = asserts[i].subj as usize;
        if skip_ahead && out[subj] == 1 {
            while i < asserts.len() && asserts[i].subj as usize == subj {
                i += 1;
            }
            continue;
        }
        scanned += 1;
        let value = values.value(asserts[i].val_index).expect("dense value id");
        if value.contains(pattern) && out[subj] == 0 {
            out[subj] = 1;
        }
        i += 1;
    }
    scanned
}
