//! DL operators over membership rows.
//!
//! Every operator has identical semantics under four execution
//! strategies:
//!
//! * [`ExecutionStrategy::SequentialScalar`] — single-threaded baseline
//!   with the subject skip-ahead fast path,
//! * [`ExecutionStrategy::ParallelScalar`] — the assertion segment (or
//!   the individuals axis) split into fixed contiguous chunks, one per
//!   worker,
//! * [`ExecutionStrategy::ParallelVector`] — multithreading combined
//!   with 16-lane one-byte vector arithmetic; only conjunction and
//!   disjunction accept it,
//! * [`ExecutionStrategy::EmulatedDeviceParallel`] — the per-assertion
//!   (or per-individual) device-kernel semantics run on a worker pool:
//!   no skip-ahead, idempotent writes, atomic cardinality counting.
//!
//! Operators are read-only with respect to the knowledge base and own
//! their output rows, so calls on distinct outputs may run
//! concurrently. Within one parallel call, workers only ever race to
//! write the same value to the same cell, which keeps results
//! deterministic.

mod atomic;
mod emulated;
mod parallel;
mod scalar;
mod vector;

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::kb::{KbError, KnowledgeBase, NumericRoleId, RoleAssertion, RoleId, StringRoleId};
use crate::row::MembershipRow;

/// How an operator call is executed.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExecutionStrategy {
    SequentialScalar,
    ParallelScalar,
    ParallelVector,
    EmulatedDeviceParallel,
}

impl ExecutionStrategy {
    pub const ALL: [ExecutionStrategy; 4] = [
        ExecutionStrategy::SequentialScalar,
        ExecutionStrategy::ParallelScalar,
        ExecutionStrategy::ParallelVector,
        ExecutionStrategy::EmulatedDeviceParallel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExecutionStrategy::SequentialScalar => "sequential",
            ExecutionStrategy::ParallelScalar => "scalar",
            ExecutionStrategy::ParallelVector => "vector",
            ExecutionStrategy::EmulatedDeviceParallel => "emulated",
        }
    }
}

impl std::str::FromStr for ExecutionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(ExecutionStrategy::SequentialScalar),
            "scalar" => Ok(ExecutionStrategy::ParallelScalar),
            "vector" => Ok(ExecutionStrategy::ParallelVector),
            "emulated" => Ok(ExecutionStrategy::EmulatedDeviceParallel),
            other => Err(format!(
                "unknown strategy `{other}` (expected sequential, scalar, vector, or emulated)"
            )),
        }
    }
}

/// Cardinality filter applied to per-subject match counts.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CardinalityKind {
    Min,
    Exactly,
    Max,
}

impl CardinalityKind {
    /// MIN: `count >= bound`; EXACTLY: `count == bound`;
    /// MAX: `count > 0 && count <= bound`.
    pub fn matches(self, count: u32, bound: u32) -> bool {
        match self {
            CardinalityKind::Min => count >= bound,
            CardinalityKind::Exactly => count == bound,
            CardinalityKind::Max => count > 0 && count <= bound,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CardinalityKind::Min => "MIN",
            CardinalityKind::Exactly => "EXACTLY",
            CardinalityKind::Max => "MAX",
        }
    }
}

/// Comparison applied to numeric assertion values against a threshold.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NumericComparator {
    /// `val >= threshold`
    Min,
    /// `val == threshold`
    Exact,
    /// `val <= threshold`
    Max,
}

impl NumericComparator {
    pub fn matches(self, val: f32, threshold: f32) -> bool {
        match self {
            NumericComparator::Min => val >= threshold,
            NumericComparator::Exact => val == threshold,
            NumericComparator::Max => val <= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            NumericComparator::Min => ">=",
            NumericComparator::Exact => "==",
            NumericComparator::Max => "<=",
        }
    }
}

#[derive(Debug, Error)]
pub enum OpError {
    #[error("{rows} operand rows but {flags} negation flags")]
    OperandFlagMismatch { rows: usize, flags: usize },
    #[error("row length {got} does not match the knowledge base ({expected} individuals)")]
    RowLength { expected: usize, got: usize },
    #[error("the vector strategy only applies to conjunction and disjunction")]
    VectorUnsupported,
    #[error("numeric threshold must not be NaN")]
    NanThreshold,
    #[error("CONTAIN pattern must not be empty")]
    EmptyPattern,
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Cheap operation counters, aggregated once per worker chunk.
#[derive(Debug, Default)]
pub struct OpMetrics {
    assertion_scans: AtomicU64,
}

impl OpMetrics {
    /// Number of assertion entries whose match predicate was evaluated
    /// by restriction scans. Entries consumed by the skip-ahead fast
    /// path are not counted.
    pub fn assertion_scans(&self) -> u64 {
        self.assertion_scans.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.assertion_scans.store(0, Ordering::Relaxed);
    }

    fn add_scans(&self, n: u64) {
        if n > 0 {
            self.assertion_scans.fetch_add(n, Ordering::Relaxed);
        }
    }
}

/// Boolean fold flavor shared by conjunction and disjunction.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum BoolOp {
    And,
    Or,
}

impl BoolOp {
    #[inline]
    pub(crate) fn init(self) -> u8 {
        match self {
            BoolOp::And => 1,
            BoolOp::Or => 0,
        }
    }

    #[inline]
    pub(crate) fn apply(self, acc: u8, operand: u8) -> u8 {
        match self {
            BoolOp::And => acc & operand,
            BoolOp::Or => acc | operand,
        }
    }
}

/// Swaps subject and object when the role is traversed inversely.
#[inline]
pub(crate) fn endpoints(a: RoleAssertion, inverse: bool) -> (usize, usize) {
    if inverse {
        (a.obj as usize, a.subj as usize)
    } else {
        (a.subj as usize, a.obj as usize)
    }
}

/// Operator executor bound to one knowledge base.
///
/// Parallel strategies run on the ambient rayon pool, so wrapping calls
/// in `pool.install(..)` pins the work to a dedicated pool.
pub struct DlOps<'kb> {
    kb: &'kb KnowledgeBase,
    skip_ahead: bool,
    metrics: OpMetrics,
}

impl<'kb> DlOps<'kb> {
    pub fn new(kb: &'kb KnowledgeBase) -> Self {
        Self { kb, skip_ahead: true, metrics: OpMetrics::default() }
    }

    /// Disables the "result already set? skip the subject's remaining
    /// assertions" fast path; output rows are unaffected, only the scan
    /// count changes.
    pub fn skip_ahead(mut self, enabled: bool) -> Self {
        self.skip_ahead = enabled;
        self
    }

    pub fn kb(&self) -> &'kb KnowledgeBase {
        self.kb
    }

    pub fn metrics(&self) -> &OpMetrics {
        &self.metrics
    }

    fn n(&self) -> usize {
        self.kb.num_individuals()
    }

    fn check_operands(&self, rows: &[&[u8]], negated: &[bool]) -> Result<(), OpError> {
        if rows.len() != negated.len() {
            return Err(OpError::OperandFlagMismatch { rows: rows.len(), flags: negated.len() });
        }
        for row in rows {
            self.check_row(row)?;
        }
        Ok(())
    }

    fn check_row(&self, row: &[u8]) -> Result<(), OpError> {
        if row.len() != self.n() {
            return Err(OpError::RowLength { expected: self.n(), got: row.len() });
        }
        Ok(())
    }

    pub fn conjunction(
        &self,
        rows: &[&[u8]],
        negated: &[bool],
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.boolean_into(rows, negated, strategy, BoolOp::And, &mut out)?;
        Ok(out)
    }

    pub fn disjunction(
        &self,
        rows: &[&[u8]],
        negated: &[bool],
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.boolean_into(rows, negated, strategy, BoolOp::Or, &mut out)?;
        Ok(out)
    }

    pub(crate) fn boolean_into(
        &self,
        rows: &[&[u8]],
        negated: &[bool],
        strategy: ExecutionStrategy,
        op: BoolOp,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        self.check_operands(rows, negated)?;
        let buf = resize(out, self.n());
        match strategy {
            ExecutionStrategy::SequentialScalar => scalar::boolean(rows, negated, op, buf),
            ExecutionStrategy::ParallelScalar => parallel::boolean(rows, negated, op, buf),
            ExecutionStrategy::ParallelVector => vector::boolean(rows, negated, op, buf),
            ExecutionStrategy::EmulatedDeviceParallel => emulated::boolean(rows, negated, op, buf),
        }
        debug_assert_binary(buf);
        Ok(())
    }

    pub fn exists_role(
        &self,
        role: RoleId,
        filler: &[u8],
        inverse: bool,
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.exists_role_into(role, filler, inverse, strategy, &mut out)?;
        Ok(out)
    }

    pub(crate) fn exists_role_into(
        &self,
        role: RoleId,
        filler: &[u8],
        inverse: bool,
        strategy: ExecutionStrategy,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        let asserts = self.kb.role_assertions(role)?;
        self.check_row(filler)?;
        let buf = resize(out, self.n());
        match strategy {
            ExecutionStrategy::SequentialScalar => {
                let scans = scalar::exists_role(asserts, filler, inverse, self.skip_ahead, buf);
                self.metrics.add_scans(scans);
            }
            ExecutionStrategy::ParallelScalar => {
                parallel::exists_role(asserts, filler, inverse, self.skip_ahead, buf, &self.metrics)
            }
            ExecutionStrategy::ParallelVector => return Err(OpError::VectorUnsupported),
            ExecutionStrategy::EmulatedDeviceParallel => {
                emulated::exists_role(asserts, filler, inverse, buf, &self.metrics)
            }
        }
        debug_assert_binary(buf);
        Ok(())
    }

    pub fn forall_role(
        &self,
        role: RoleId,
        filler: &[u8],
        inverse: bool,
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.forall_role_into(role, filler, inverse, strategy, &mut out)?;
        Ok(out)
    }

    pub(crate) fn forall_role_into(
        &self,
        role: RoleId,
        filler: &[u8],
        inverse: bool,
        strategy: ExecutionStrategy,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        let asserts = self.kb.role_assertions(role)?;
        self.check_row(filler)?;
        let buf = resize(out, self.n());
        match strategy {
            ExecutionStrategy::SequentialScalar => {
                let scans = scalar::forall_role(asserts, filler, inverse, self.skip_ahead, buf);
                self.metrics.add_scans(scans);
            }
            ExecutionStrategy::ParallelScalar => {
                parallel::forall_role(asserts, filler, inverse, self.skip_ahead, buf, &self.metrics)
            }
            ExecutionStrategy::ParallelVector => return Err(OpError::VectorUnsupported),
            ExecutionStrategy::EmulatedDeviceParallel => {
                emulated::forall_role(asserts, filler, inverse, buf, &self.metrics)
            }
        }
        debug_assert_binary(buf);
        Ok(())
    }

    pub fn cardinality_role(
        &self,
        role: RoleId,
        filler: &[u8],
        kind: CardinalityKind,
        bound: u32,
        inverse: bool,
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.cardinality_role_into(role, filler, kind, bound, inverse, strategy, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn cardinality_role_into(
        &self,
        role: RoleId,
        filler: &[u8],
        kind: CardinalityKind,
        bound: u32,
        inverse: bool,
        strategy: ExecutionStrategy,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        let asserts = self.kb.role_assertions(role)?;
        self.check_row(filler)?;
        let buf = resize(out, self.n());
        let mut counters = vec![0u32; self.n()];
        match strategy {
            ExecutionStrategy::SequentialScalar => {
                let scans = scalar::count_matches(asserts, filler, inverse, &mut counters);
                self.metrics.add_scans(scans);
                scalar::apply_cardinality(&counters, kind, bound, buf);
            }
            ExecutionStrategy::ParallelScalar => {
                parallel::count_matches(asserts, filler, inverse, &mut counters, &self.metrics);
                parallel::apply_cardinality(&counters, kind, bound, buf);
            }
            ExecutionStrategy::ParallelVector => return Err(OpError::VectorUnsupported),
            ExecutionStrategy::EmulatedDeviceParallel => {
                emulated::count_matches(asserts, filler, inverse, &mut counters, &self.metrics);
                emulated::apply_cardinality(&counters, kind, bound, buf);
            }
        }
        debug_assert_binary(buf);
        Ok(())
    }

    pub fn exists_numeric(
        &self,
        role: NumericRoleId,
        cmp: NumericComparator,
        threshold: f32,
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.exists_numeric_into(role, cmp, threshold, strategy, &mut out)?;
        Ok(out)
    }

    pub(crate) fn exists_numeric_into(
        &self,
        role: NumericRoleId,
        cmp: NumericComparator,
        threshold: f32,
        strategy: ExecutionStrategy,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        let asserts = self.kb.numeric_assertions(role)?;
        if threshold.is_nan() {
            return Err(OpError::NanThreshold);
        }
        let buf = resize(out, self.n());
        match strategy {
            ExecutionStrategy::SequentialScalar => {
                let scans = scalar::exists_numeric(asserts, cmp, threshold, self.skip_ahead, buf);
                self.metrics.add_scans(scans);
            }
            ExecutionStrategy::ParallelScalar => {
                parallel::exists_numeric(asserts, cmp, threshold, self.skip_ahead, buf, &self.metrics)
            }
            ExecutionStrategy::ParallelVector => return Err(OpError::VectorUnsupported),
            ExecutionStrategy::EmulatedDeviceParallel => {
                emulated::exists_numeric(asserts, cmp, threshold, buf, &self.metrics)
            }
        }
        debug_assert_binary(buf);
        Ok(())
    }

    pub fn string_equal(
        &self,
        role: StringRoleId,
        value: &str,
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.string_equal_into(role, value, strategy, &mut out)?;
        Ok(out)
    }

    pub(crate) fn string_equal_into(
        &self,
        role: StringRoleId,
        value: &str,
        strategy: ExecutionStrategy,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        let asserts = self.kb.string_assertions(role)?;
        let buf = resize(out, self.n());
        // Short-circuit: a value that was never interned cannot match
        // any assertion, so the cleared row is the result and the scan
        // is skipped entirely.
        let target = match self.kb.resolve_string(value) {
            Some(id) => id,
            None => {
                buf.fill(0);
                return Ok(());
            }
        };
        match strategy {
            ExecutionStrategy::SequentialScalar => {
                let scans = scalar::string_equal(asserts, target, self.skip_ahead, buf);
                self.metrics.add_scans(scans);
            }
            ExecutionStrategy::ParallelScalar => {
                parallel::string_equal(asserts, target, self.skip_ahead, buf, &self.metrics)
            }
            ExecutionStrategy::ParallelVector => return Err(OpError::VectorUnsupported),
            ExecutionStrategy::EmulatedDeviceParallel => {
                emulated::string_equal(asserts, target, buf, &self.metrics)
            }
        }
        debug_assert_binary(buf);
        Ok(())
    }

    pub fn string_contain(
        &self,
        role: StringRoleId,
        pattern: &str,
        strategy: ExecutionStrategy,
    ) -> Result<MembershipRow, OpError> {
        let mut out = MembershipRow::zeros(self.n());
        self.string_contain_into(role, pattern, strategy, &mut out)?;
        Ok(out)
    }

    pub(crate) fn string_contain_into(
        &self,
        role: StringRoleId,
        pattern: &str,
        strategy: ExecutionStrategy,
        out: &mut MembershipRow,
    ) -> Result<(), OpError> {
        let asserts = self.kb.string_assertions(role)?;
        if pattern.is_empty() {
            return Err(OpError::EmptyPattern);
        }
        let values = self.kb.string_values();
        let buf = resize(out, self.n());
        match strategy {
            ExecutionStrategy::SequentialScalar => {
                let scans = scalar::string_contain(asserts, values, pattern, self.skip_ahead, buf);
                self.metrics.add_scans(scans);
            }
            ExecutionStrategy::ParallelScalar => {
                parallel::string_contain(asserts, values, pattern, self.skip_ahead, buf, &self.metrics)
            }
            ExecutionStrategy::ParallelVector => return Err(OpError::VectorUnsupported),
            ExecutionStrategy::EmulatedDeviceParallel => {
                emulated::string_contain(asserts, values, pattern, buf, &self.metrics)
            }
        }
        debug_assert_binary(buf);
        Ok(())
    }
}

fn resize(out: &mut MembershipRow, n: usize) -> &mut [u8] {
    if out.len() != n {
        *out = MembershipRow::zeros(n);
    }
    out.as_mut_slice()
}

#[inline]
fn debug_assert_binary(row: &[u8]) {
    debug_assert!(row.iter().all(|&b| b <= 1), "membership cells must be 0 or 1");
}

/// Fixed contiguous chunk size so the segment splits into one chunk per
/// worker.
pub(crate) fn worker_chunk_len(total: usize) -> usize {
    let workers = rayon::current_num_threads().max(1);
    total.div_ceil(workers).max(1)
}
