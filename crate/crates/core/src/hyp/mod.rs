//! Hypothesis parsing, planning, execution, and coverage counting.
//!
//! A hypothesis is parsed from an s-expression into a flat array of DL
//! operation nodes in post-order, so every node's operands are either
//! concept rows or nodes appearing earlier in the array. A plan assigns
//! results rows greedily (reusing rows whose last consumer has
//! executed) and is then executed step by step against a knowledge
//! base; finally the covered positive and negative examples are
//! counted.

mod exec;
mod parser;
mod plan;

pub use exec::{count_coverage, evaluate, execute_plan, execute_plan_with};
pub use plan::plan;

use thiserror::Error;

use crate::kb::{ConceptId, NumericRoleId, RoleId, StringRoleId};
use crate::ops::{CardinalityKind, NumericComparator, OpError};

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("offset {pos}: `{name}` is not a declared {kind}")]
    UnknownName {
        pos: usize,
        name: String,
        kind: &'static str,
    },
    #[error("offset {pos}: NOT applies only to concept names")]
    NegatedCompound { pos: usize },
    #[error("offset {pos}: cardinality bound must be non-negative, got {value}")]
    NegativeCardinality { pos: usize, value: i64 },
    #[error("row length {got} does not match the knowledge base ({expected} individuals)")]
    RowLength { expected: usize, got: usize },
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Where an operand row comes from: a concept row of the knowledge
/// base, or the output row of an earlier node in the flat array.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RowSource {
    Concept(ConceptId),
    Node(u32),
}

/// One conjunction/disjunction operand with its negation flag.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BoolOperand {
    pub source: RowSource,
    pub negated: bool,
}

/// Payload of a single DL operation node.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Conjunction {
        operands: Vec<BoolOperand>,
    },
    Disjunction {
        operands: Vec<BoolOperand>,
    },
    ExistsRole {
        role: RoleId,
        inverse: bool,
        filler: RowSource,
    },
    ForallRole {
        role: RoleId,
        inverse: bool,
        filler: RowSource,
    },
    CardinalityRole {
        role: RoleId,
        inverse: bool,
        kind: CardinalityKind,
        bound: u32,
        filler: RowSource,
    },
    ExistsNumeric {
        role: NumericRoleId,
        cmp: NumericComparator,
        threshold: f32,
    },
    StringEqual {
        role: StringRoleId,
        value: String,
    },
    StringContain {
        role: StringRoleId,
        pattern: String,
    },
}

impl NodeKind {
    /// Node inputs that are other nodes' outputs.
    pub fn node_inputs(&self) -> Vec<u32> {
        let mut inputs = Vec::new();
        let mut push = |source: &RowSource| {
            if let RowSource::Node(i) = source {
                inputs.push(*i);
            }
        };
        match self {
            NodeKind::Conjunction { operands } | NodeKind::Disjunction { operands } => {
                for op in operands {
                    push(&op.source);
                }
            }
            NodeKind::ExistsRole { filler, .. }
            | NodeKind::ForallRole { filler, .. }
            | NodeKind::CardinalityRole { filler, .. } => push(filler),
            NodeKind::ExistsNumeric { .. }
            | NodeKind::StringEqual { .. }
            | NodeKind::StringContain { .. } => {}
        }
        inputs
    }
}

/// One flattened DL operation. `output_row` is the node's own index:
/// the fresh one-row-per-node assignment that a plan may compact.
#[derive(Clone, Debug, PartialEq)]
pub struct DlOperationNode {
    pub kind: NodeKind,
    pub output_row: u32,
}

/// A hypothesis flattened into evaluation order. The last node is the
/// root and its output row is the hypothesis result.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    nodes: Vec<DlOperationNode>,
    source: String,
}

impl Hypothesis {
    /// Parses and flattens an s-expression hypothesis, resolving every
    /// name against the knowledge base.
    pub fn parse(text: &str, kb: &crate::kb::KnowledgeBase) -> Result<Self, HypothesisError> {
        parser::parse(text, kb)
    }

    pub fn nodes(&self) -> &[DlOperationNode] {
        &self.nodes
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Index of the root node (always the last).
    pub fn root(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }

    pub(crate) fn from_parts(nodes: Vec<DlOperationNode>, source: String) -> Self {
        debug_assert!(!nodes.is_empty());
        Self { nodes, source }
    }
}

/// Ordered operation executions with results-row assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationPlan {
    order: Vec<u32>,
    row_of_node: Vec<u32>,
    peak_rows: usize,
}

impl EvaluationPlan {
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Results-row slot assigned to each node's output.
    pub fn row_of_node(&self, node: u32) -> u32 {
        self.row_of_node[node as usize]
    }

    pub fn peak_rows(&self) -> usize {
        self.peak_rows
    }
}

/// Counts of covered positive and negative examples.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub struct CoverageResult {
    pub pos: u64,
    pub neg: u64,
}

#[cfg(test)]
mod tests;
