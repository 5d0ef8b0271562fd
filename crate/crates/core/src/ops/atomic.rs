//! Shared atomic views over exclusively borrowed buffers.
//!
//! Parallel restriction operators let workers write to the same output
//! cell, but only ever with the same value, so relaxed atomics are
//! sufficient and the final contents are deterministic.

use std::sync::atomic::{AtomicU32, AtomicU8};

const _: () = {
    assert!(std::mem::size_of::<AtomicU8>() == std::mem::size_of::<u8>());
    assert!(std::mem::align_of::<AtomicU8>() == std::mem::align_of::<u8>());
    assert!(std::mem::size_of::<AtomicU32>() == std::mem::size_of::<u32>());
    assert!(std::mem::align_of::<AtomicU32>() == std::mem::align_of::<u32>());
};

/// Reinterprets an exclusively borrowed byte buffer as shared atomics.
///
/// Sound because `AtomicU8` has the same size, alignment, and bit
/// validity as `u8`, and the exclusive borrow is held for the returned
/// lifetime.
pub(crate) fn as_atomic_u8(buf: &mut [u8]) -> &[AtomicU8] {
    unsafe { &*(buf as *mut [u8] as *const [AtomicU8]) }
}

pub(crate) fn as_atomic_u32(buf: &mut [u32]) -> &[AtomicU32] {
    unsafe { &*(buf as *mut [u32] as *const [AtomicU32]) }
}
