//! Hypothesis evaluation engine for description-logic ILP.
//!
//! The knowledge base is held as cache-friendly matrices: a transposed
//! concepts matrix (one byte per membership, one row per concept), flat
//! role and concrete-role assertion tables indexed by per-role offset
//! segments, an interned string-value table and a learning-examples
//! table. Hypotheses are flattened into contiguous arrays of DL
//! operation nodes, planned, and executed under interchangeable
//! strategies (sequential, multithreaded scalar, multithreaded 16-lane
//! vector, and an emulated per-assertion-parallel device). Batches of
//! hypotheses are split across heterogeneous backends using static
//! ratios derived from a probing hypothesis.

pub mod device;
pub mod hyp;
pub mod kb;
pub mod ops;
pub mod row;
pub mod synth;

pub use device::{BackendKind, BatchAssignment, Device, DeviceConfig, DeviceError, DeviceSpec};
pub use hyp::{CoverageResult, EvaluationPlan, Hypothesis, HypothesisError};
pub use kb::{ConceptId, KbError, KnowledgeBase, NumericRoleId, RoleId, StringRoleId};
pub use ops::{CardinalityKind, DlOps, ExecutionStrategy, NumericComparator, OpError};
pub use row::MembershipRow;
pub use synth::{AssertionKind, BatchTemplate, DatasetRegime, DatasetSpec, SynthError};
