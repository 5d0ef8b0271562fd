//! Per-individual membership rows.

use std::ops::{Deref, DerefMut};

/// A dense 0/1 byte row with one cell per individual.
///
/// Rows are produced by every DL operation: either directly over the
/// concepts matrix or as intermediate results while evaluating a
/// nested hypothesis. Cells hold only the bytes 0 and 1.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MembershipRow {
    data: Vec<u8>,
}

impl MembershipRow {
    pub fn zeros(len: usize) -> Self {
        Self { data: vec![0; len] }
    }

    pub fn ones(len: usize) -> Self {
        Self { data: vec![1; len] }
    }

    pub fn from_vec(data: Vec<u8>) -> Self {
        debug_assert!(data.iter().all(|&b| b <= 1), "membership cells must be 0 or 1");
        Self { data }
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    /// Number of individuals set to 1.
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b == 1).count()
    }

    /// Flips every cell in place (closed-world complement).
    pub fn complement(&mut self) {
        for b in &mut self.data {
            *b ^= 1;
        }
    }
}

impl Deref for MembershipRow {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.data
    }
}

impl DerefMut for MembershipRow {
    fn deref_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }
}

impl From<Vec<u8>> for MembershipRow {
    fn from(data: Vec<u8>) -> Self {
        Self::from_vec(data)
    }
}
