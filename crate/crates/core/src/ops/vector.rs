//! Vectorized conjunction/disjunction: multithreading combined with
//! 16-lane one-byte arithmetic.
//!
//! A `u128` stands in for a 128-bit vector register: AND, OR, and XOR
//! are bitwise, so on 0/1 bytes they act lane-wise on 16 memberships at
//! a time. Negation flags are broadcast to a per-lane 0x01 mask and
//! applied with XOR, exactly like the scalar path. Lengths not
//! divisible by 16 finish in a scalar tail loop.

use rayon::prelude::*;

use super::{scalar, worker_chunk_len, BoolOp};

const LANES: usize = 16;
const ONES: u128 = u128::from_ne_bytes([1u8; LANES]);

pub(super) fn boolean(rows: &[&[u8]], negated: &[bool], op: BoolOp, out: &mut [u8]) {
    if out.is_empty() {
        return;
    }
    // Chunk boundaries stay 16-aligned so only the final chunk has a tail.
    let chunk = worker_chunk_len(out.len()).div_ceil(LANES) * LANES;
    out.par_chunks_mut(chunk).enumerate().for_each(|(ci, out_chunk)| {
        fold_chunk(rows, negated, op, ci * chunk, out_chunk);
    });
}

fn fold_chunk(rows: &[&[u8]], negated: &[bool], op: BoolOp, base: usize, out: &mut [u8]) {
    let vector_len = out.len() / LANES * LANES;
    let init = match op {
        BoolOp::And => ONES,
        BoolOp::Or => 0,
    };
    let mut pos = 0;
    while pos < vector_len {
        let mut acc = init;
        for (row, &neg) in rows.iter().zip(negated) {
            let at = base + pos;
            let lanes = u128::from_ne_bytes(row[at..at + LANES].try_into().unwrap());
            let mask = if neg { ONES } else { 0 };
            acc = match op {
                BoolOp::And => acc & (lanes ^ mask),
                BoolOp::Or => acc | (lanes ^ mask),
            };
        }
        out[pos..pos + LANES].copy_from_slice(&acc.to_ne_bytes());
        pos += LANES;
    }
    scalar::boolean_range(rows, negated, op, base + vector_len, &mut out[vector_len..]);
}
