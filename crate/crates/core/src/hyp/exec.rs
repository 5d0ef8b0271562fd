//! Plan execution and coverage counting.

use rayon::prelude::*;

use crate::kb::KnowledgeBase;
use crate::ops::{worker_chunk_len, BoolOp, DlOps, ExecutionStrategy};
use crate::row::MembershipRow;

use super::{plan, CoverageResult, EvaluationPlan, Hypothesis, HypothesisError, NodeKind, RowSource};

/// Dispatches every node to its operator and returns the root's output
/// row.
pub fn execute_plan(
    plan: &EvaluationPlan,
    hyp: &Hypothesis,
    kb: &KnowledgeBase,
    strategy: ExecutionStrategy,
) -> Result<MembershipRow, HypothesisError> {
    let ops = DlOps::new(kb);
    execute_plan_with(&ops, plan, hyp, strategy)
}

/// The vector strategy only exists for conjunction/disjunction; a
/// vectorized pipeline runs restriction nodes with scalar
/// multithreading.
fn node_strategy(requested: ExecutionStrategy, kind: &NodeKind) -> ExecutionStrategy {
    match kind {
        NodeKind::Conjunction { .. } | NodeKind::Disjunction { .. } => requested,
        _ if requested == ExecutionStrategy::ParallelVector => ExecutionStrategy::ParallelScalar,
        _ => requested,
    }
}

/// As [`execute_plan`], with a caller-configured operator executor.
pub fn execute_plan_with(
    ops: &DlOps<'_>,
    plan: &EvaluationPlan,
    hyp: &Hypothesis,
    strategy: ExecutionStrategy,
) -> Result<MembershipRow, HypothesisError> {
    let kb = ops.kb();
    let n = kb.num_individuals();
    let mut rows: Vec<MembershipRow> = (0..plan.peak_rows()).map(|_| MembershipRow::zeros(n)).collect();

    for &index in plan.order() {
        let node = &hyp.nodes()[index as usize];
        let slot = plan.row_of_node(index) as usize;
        // The planner never assigns an output slot that a live input
        // occupies, so taking the output row leaves all inputs intact.
        let mut out = std::mem::take(&mut rows[slot]);
        let strategy = node_strategy(strategy, &node.kind);

        let source_row = |source: &RowSource| -> &[u8] {
            match source {
                RowSource::Concept(c) => kb.concepts().row(c.0),
                RowSource::Node(i) => rows[plan.row_of_node(*i) as usize].as_slice(),
            }
        };

        match &node.kind {
            NodeKind::Conjunction { operands } | NodeKind::Disjunction { operands } => {
                let op = if matches!(node.kind, NodeKind::Conjunction { .. }) {
                    BoolOp::And
                } else {
                    BoolOp::Or
                };
                let operand_rows: Vec<&[u8]> = operands.iter().map(|o| source_row(&o.source)).collect();
                let negated: Vec<bool> = operands.iter().map(|o| o.negated).collect();
                ops.boolean_into(&operand_rows, &negated, strategy, op, &mut out)?;
            }
            NodeKind::ExistsRole { role, inverse, filler } => {
                ops.exists_role_into(*role, source_row(filler), *inverse, strategy, &mut out)?;
            }
            NodeKind::ForallRole { role, inverse, filler } => {
                ops.forall_role_into(*role, source_row(filler), *inverse, strategy, &mut out)?;
            }
            NodeKind::CardinalityRole { role, inverse, kind, bound, filler } => {
                ops.cardinality_role_into(
                    *role,
                    source_row(filler),
                    *kind,
                    *bound,
                    *inverse,
                    strategy,
                    &mut out,
                )?;
            }
            NodeKind::ExistsNumeric { role, cmp, threshold } => {
                ops.exists_numeric_into(*role, *cmp, *threshold, strategy, &mut out)?;
            }
            NodeKind::StringEqual { role, value } => {
                ops.string_equal_into(*role, value, strategy, &mut out)?;
            }
            NodeKind::StringContain { role, pattern } => {
                ops.string_contain_into(*role, pattern, strategy, &mut out)?;
            }
        }
        rows[slot] = out;
    }

    let root_slot = plan.row_of_node(hyp.root()) as usize;
    Ok(std::mem::take(&mut rows[root_slot]))
}

/// Counts covered examples: `pos = Σ row[i] & examples.pos[i]`,
/// `neg = Σ row[i] & examples.neg[i]`.
pub fn count_coverage(
    row: &[u8],
    kb: &KnowledgeBase,
    strategy: ExecutionStrategy,
) -> Result<CoverageResult, HypothesisError> {
    if row.len() != kb.num_individuals() {
        return Err(HypothesisError::RowLength {
            expected: kb.num_individuals(),
            got: row.len(),
        });
    }
    let pos_flags = kb.examples().pos_row();
    let neg_flags = kb.examples().neg_row();
    let result = match strategy {
        ExecutionStrategy::SequentialScalar => sum_range(row, pos_flags, neg_flags, 0, row.len()),
        ExecutionStrategy::ParallelScalar | ExecutionStrategy::ParallelVector => {
            parallel_reduction(row, pos_flags, neg_flags)
        }
        ExecutionStrategy::EmulatedDeviceParallel => tree_reduction(row, pos_flags, neg_flags),
    };
    Ok(result)
}

fn sum_range(row: &[u8], pos: &[u8], neg: &[u8], start: usize, end: usize) -> CoverageResult {
    let mut acc = CoverageResult::default();
    for i in start..end {
        acc.pos += (row[i] & pos[i]) as u64;
        acc.neg += (row[i] & neg[i]) as u64;
    }
    acc
}

/// Multithreaded reduction: one partial sum per worker chunk.
fn parallel_reduction(row: &[u8], pos: &[u8], neg: &[u8]) -> CoverageResult {
    if row.is_empty() {
        return CoverageResult::default();
    }
    let chunk = worker_chunk_len(row.len());
    (0..row.len().div_ceil(chunk))
        .into_par_iter()
        .map(|ci| {
            let start = ci * chunk;
            let end = (start + chunk).min(row.len());
            sum_range(row, pos, neg, start, end)
        })
        .reduce(CoverageResult::default, combine)
}

/// Warp-shaped tree reduction: fixed-width partials combined pairwise
/// level by level, mirroring how a device kernel would reduce.
fn tree_reduction(row: &[u8], pos: &[u8], neg: &[u8]) -> CoverageResult {
    const WARP: usize = 32;
    if row.is_empty() {
        return CoverageResult::default();
    }
    let mut partials: Vec<CoverageResult> = (0..row.len().div_ceil(WARP))
        .into_par_iter()
        .map(|w| {
            let start = w * WARP;
            let end = (start + WARP).min(row.len());
            sum_range(row, pos, neg, start, end)
        })
        .collect();
    while partials.len() > 1 {
        let half = partials.len().div_ceil(2);
        for i in 0..partials.len() / 2 {
            partials[i] = combine(partials[2 * i], partials[2 * i + 1]);
        }
        if partials.len() % 2 == 1 {
            partials[half - 1] = partials[partials.len() - 1];
        }
        partials.truncate(half);
    }
    partials[0]
}

fn combine(a: CoverageResult, b: CoverageResult) -> CoverageResult {
    CoverageResult { pos: a.pos + b.pos, neg: a.neg + b.neg }
}

/// Full pipeline: parse, plan, execute, count.
pub fn evaluate(
    text: &str,
    kb: &KnowledgeBase,
    strategy: ExecutionStrategy,
) -> Result<CoverageResult, HypothesisError> {
    let hyp = Hypothesis::parse(text, kb)?;
    let plan = plan(&hyp);
    let row = execute_plan(&plan, &hyp, kb, strategy)?;
    count_coverage(&row, kb, strategy)
}
