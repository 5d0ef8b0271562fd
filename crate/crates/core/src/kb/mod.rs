//! Matrix-based knowledge representation.
//!
//! The knowledge base is immutable after construction and safe to read
//! from any number of workers. It holds, under closed-world and
//! unique-name assumptions:
//!
//! * a transposed concepts matrix (rows = concepts, columns =
//!   individuals, one byte per membership), so one concept's
//!   memberships for all individuals are contiguous,
//! * flat role / numeric-role / string-role assertion tables, each
//!   indexed by a per-role offset segment and grouped by subject
//!   within a segment,
//! * an interning map from string assertion values to dense value ids,
//! * a learning-examples table of per-individual positive/negative
//!   flags, and
//! * bidirectional name maps for every entity namespace.

mod parser;
mod writer;

pub use parser::load_kb;

use std::collections::HashMap;

use thiserror::Error;

/// Dense concept id, assigned in first-appearance order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConceptId(pub u32);

/// Dense role id.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct RoleId(pub u32);

/// Dense numeric-role id.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct NumericRoleId(pub u32);

/// Dense string-role id.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct StringRoleId(pub u32);

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate declaration of `{name}`")]
    DuplicateDeclaration { line: usize, name: String },
    #[error("line {line}: `{name}` is not a declared {kind}")]
    UndeclaredEntity {
        line: usize,
        name: String,
        kind: &'static str,
    },
    #[error("line {line}: individual `{name}` is marked as both a positive and a negative example")]
    ConflictingExample { line: usize, name: String },
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u32 },
}

/// A role assertion `(subject, object)`, both individual ids.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RoleAssertion {
    pub subj: u32,
    pub obj: u32,
}

/// A numeric concrete-role assertion `(subject, value)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NumericAssertion {
    pub subj: u32,
    pub val: f32,
}

/// A string concrete-role assertion. The value lives in the
/// [`StringValueMap`]; `val_index` is its interned id.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct StringAssertion {
    pub subj: u32,
    pub val_index: u32,
}

/// Half-open `[start, end)` range into a flat assertion table.
///
/// Exposed to callers as inclusive `(startIndex, endIndex)` bounds with
/// empty segments signaled distinctly (`None`).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) struct Segment {
    pub start: u32,
    pub end: u32,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start as usize..self.end as usize
    }

    /// Inclusive bounds, or `None` for an empty segment.
    pub fn inclusive(&self) -> Option<(usize, usize)> {
        if self.start == self.end {
            None
        } else {
            Some((self.start as usize, self.end as usize - 1))
        }
    }
}

/// Row-major dense matrix of one-byte memberships; rows = concepts,
/// columns = individuals. Row stride equals the number of individuals,
/// so one concept's memberships occupy contiguous addresses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptsMatrix {
    data: Vec<u8>,
    num_individuals: usize,
    num_concepts: usize,
}

impl ConceptsMatrix {
    pub(crate) fn new(num_concepts: usize, num_individuals: usize) -> Self {
        Self {
            data: vec![0; num_concepts * num_individuals],
            num_individuals,
            num_concepts,
        }
    }

    pub(crate) fn set(&mut self, concept: u32, individual: u32) {
        self.data[concept as usize * self.num_individuals + individual as usize] = 1;
    }

    pub fn row(&self, concept: u32) -> &[u8] {
        let start = concept as usize * self.num_individuals;
        &self.data[start..start + self.num_individuals]
    }

    pub fn num_concepts(&self) -> usize {
        self.num_concepts
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

/// Flat `(subj, obj)` table plus per-role offset segments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoleTable {
    pub(crate) assertions: Vec<RoleAssertion>,
    pub(crate) offsets: Vec<Segment>,
}

/// Flat `(subj, val)` table plus per-role offset segments. A subject
/// may carry any number of assertions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericRoleTable {
    pub(crate) assertions: Vec<NumericAssertion>,
    pub(crate) offsets: Vec<Segment>,
}

/// Flat `(subj, valIndex)` table plus per-role offset segments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StringRoleTable {
    pub(crate) assertions: Vec<StringAssertion>,
    pub(crate) offsets: Vec<Segment>,
}

/// Bijection between distinct assertion strings and dense value ids.
#[derive(Clone, Debug, Default)]
pub struct StringValueMap {
    values: Vec<String>,
    ids: HashMap<String, u32>,
}

impl StringValueMap {
    /// Returns the id for `s`, interning it on first sight.
    pub(crate) fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }

    /// Exact-match lookup. Absence is a value, not an error.
    pub fn resolve(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub fn value(&self, id: u32) -> Option<&str> {
        self.values.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-individual positive/negative example flags. The flags are never
/// both 1 for the same individual.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExamplesTable {
    pub(crate) pos: Vec<u8>,
    pub(crate) neg: Vec<u8>,
}

impl ExamplesTable {
    pub fn pos_row(&self) -> &[u8] {
        &self.pos
    }

    pub fn neg_row(&self) -> &[u8] {
        &self.neg
    }

    pub fn total_pos(&self) -> u64 {
        self.pos.iter().map(|&b| b as u64).sum()
    }

    pub fn total_neg(&self) -> u64 {
        self.neg.iter().map(|&b| b as u64).sum()
    }
}

/// One entity namespace with bidirectional name/id lookup.
#[derive(Clone, Debug, Default)]
pub struct NameTable {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl NameTable {
    pub(crate) fn declare(&mut self, name: &str) -> Option<u32> {
        if self.ids.contains_key(name) {
            return None;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        Some(id)
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Bidirectional name maps for every entity namespace.
#[derive(Clone, Debug, Default)]
pub struct NameMaps {
    pub individuals: NameTable,
    pub concepts: NameTable,
    pub roles: NameTable,
    pub numeric_roles: NameTable,
    pub string_roles: NameTable,
}

/// The immutable matrix-based knowledge base.
///
/// All ids are dense (`0..count`). Construction is single-threaded;
/// every later operation is read-only.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    pub(crate) num_individuals: usize,
    pub(crate) concepts: ConceptsMatrix,
    pub(crate) roles: RoleTable,
    pub(crate) numeric_roles: NumericRoleTable,
    pub(crate) string_roles: StringRoleTable,
    pub(crate) string_values: StringValueMap,
    pub(crate) examples: ExamplesTable,
    pub(crate) names: NameMaps,
}

impl KnowledgeBase {
    pub fn num_individuals(&self) -> usize {
        self.num_individuals
    }

    pub fn num_concepts(&self) -> usize {
        self.names.concepts.len()
    }

    pub fn num_roles(&self) -> usize {
        self.names.roles.len()
    }

    pub fn num_numeric_roles(&self) -> usize {
        self.names.numeric_roles.len()
    }

    pub fn num_string_roles(&self) -> usize {
        self.names.string_roles.len()
    }

    pub fn concepts(&self) -> &ConceptsMatrix {
        &self.concepts
    }

    /// Membership row of one concept for all individuals.
    pub fn concept_row(&self, id: ConceptId) -> Result<&[u8], KbError> {
        if (id.0 as usize) < self.num_concepts() {
            Ok(self.concepts.row(id.0))
        } else {
            Err(KbError::UnknownId { kind: "concept", id: id.0 })
        }
    }

    /// Inclusive `(startIndex, endIndex)` bounds of a role's segment in
    /// the flat assertion table, or `None` when the role has no
    /// assertions.
    pub fn role_segment(&self, id: RoleId) -> Result<Option<(usize, usize)>, KbError> {
        self.roles
            .offsets
            .get(id.0 as usize)
            .map(Segment::inclusive)
            .ok_or(KbError::UnknownId { kind: "role", id: id.0 })
    }

    /// The contiguous assertion slice of one role, grouped by subject.
    pub fn role_assertions(&self, id: RoleId) -> Result<&[RoleAssertion], KbError> {
        self.roles
            .offsets
            .get(id.0 as usize)
            .map(|seg| &self.roles.assertions[seg.range()])
            .ok_or(KbError::UnknownId { kind: "role", id: id.0 })
    }

    pub fn numeric_segment(&self, id: NumericRoleId) -> Result<Option<(usize, usize)>, KbError> {
        self.numeric_roles
            .offsets
            .get(id.0 as usize)
            .map(Segment::inclusive)
            .ok_or(KbError::UnknownId { kind: "numeric role", id: id.0 })
    }

    pub fn numeric_assertions(&self, id: NumericRoleId) -> Result<&[NumericAssertion], KbError> {
        self.numeric_roles
            .offsets
            .get(id.0 as usize)
            .map(|seg| &self.numeric_roles.assertions[seg.range()])
            .ok_or(KbError::UnknownId { kind: "numeric role", id: id.0 })
    }

    pub fn string_segment(&self, id: StringRoleId) -> Result<Option<(usize, usize)>, KbError> {
        self.string_roles
            .offsets
            .get(id.0 as usize)
            .map(Segment::inclusive)
            .ok_or(KbError::UnknownId { kind: "string role", id: id.0 })
    }

    pub fn string_assertions(&self, id: StringRoleId) -> Result<&[StringAssertion], KbError> {
        self.string_roles
            .offsets
            .get(id.0 as usize)
            .map(|seg| &self.string_roles.assertions[seg.range()])
            .ok_or(KbError::UnknownId { kind: "string role", id: id.0 })
    }

    /// Exact-match lookup of an assertion string's interned id.
    pub fn resolve_string(&self, s: &str) -> Option<u32> {
        self.string_values.resolve(s)
    }

    /// The stored string for an interned value id.
    pub fn string_value(&self, val_index: u32) -> &str {
        self.string_values
            .value(val_index)
            .expect("string value ids are dense")
    }

    pub fn string_values(&self) -> &StringValueMap {
        &self.string_values
    }

    pub fn examples(&self) -> &ExamplesTable {
        &self.examples
    }

    pub fn names(&self) -> &NameMaps {
        &self.names
    }

    /// Serializes back to the text document format.
    pub fn to_document(&self) -> String {
        writer::write_document(self)
    }
}
