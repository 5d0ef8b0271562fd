//! Evaluation-plan generation.
//!
//! The flat node array is already a topological (post-) order, so the
//! execution order is the array order itself. Results rows are
//! assigned greedily: a node's output takes the most recently freed
//! slot, and an input's slot is freed right after its last consumer —
//! never before the consumer's output is placed, so an output row
//! cannot alias a live input row.

use super::{EvaluationPlan, Hypothesis};

pub fn plan(hyp: &Hypothesis) -> EvaluationPlan {
    let nodes = hyp.nodes();
    let n = nodes.len();

    let mut last_use: Vec<Option<u32>> = vec![None; n];
    for (i, node) in nodes.iter().enumerate() {
        for input in node.kind.node_inputs() {
            last_use[input as usize] = Some(i as u32);
        }
    }

    let mut free: Vec<u32> = Vec::new();
    let mut next_slot = 0u32;
    let mut row_of_node = vec![0u32; n];
    for (i, node) in nodes.iter().enumerate() {
        let slot = free.pop().unwrap_or_else(|| {
            let s = next_slot;
            next_slot += 1;
            s
        });
        row_of_node[i] = slot;

        let mut released = node.kind.node_inputs();
        released.sort_unstable();
        released.dedup();
        for input in released {
            if last_use[input as usize] == Some(i as u32) {
                free.push(row_of_node[input as usize]);
            }
        }
    }

    EvaluationPlan {
        order: (0..n as u32).collect(),
        row_of_node,
        peak_rows: next_slot as usize,
    }
}

/// A plan that gives every node its own fresh row; used to check
/// row-reuse soundness.
#[cfg(test)]
pub(crate) fn fresh_rows_plan(hyp: &Hypothesis) -> EvaluationPlan {
    let n = hyp.nodes().len();
    EvaluationPlan {
        order: (0..n as u32).collect(),
        row_of_node: (0..n as u32).collect(),
        peak_rows: n,
    }
}
