//! S-expression hypothesis parser.
//!
//! ```text
//! expr    := NAME
//!          | "(" "AND" operand+ ")" | "(" "OR" operand+ ")"
//!          | "(" "SOME" ROLE expr ")" | "(" "ONLY" ROLE expr ")"
//!          | "(" ("MIN"|"EXACTLY"|"MAX") INT ROLE expr ")"
//!          | "(" "DSOME" NUMROLE (">="|"=="|"<=") DECIMAL ")"
//!          | "(" "SSOME" STRROLE ("EQUAL"|"CONTAIN") STRING ")"
//! operand := expr | "(" "NOT" NAME ")"
//! ROLE    := NAME | "(" "INV" NAME ")"
//! ```
//!
//! Parsing emits nodes in post-order: nested expressions become earlier
//! nodes referenced by id, while atomic concepts used as AND/OR
//! operands or restriction fillers stay inline as concept-row
//! references.

use crate::kb::{ConceptId, KnowledgeBase, NumericRoleId, RoleId, StringRoleId};
use crate::ops::{CardinalityKind, NumericComparator};

use super::{BoolOperand, DlOperationNode, Hypothesis, HypothesisError, NodeKind, RowSource};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Atom(String),
    Str(String),
}

fn syntax(pos: usize, msg: impl Into<String>) -> HypothesisError {
    HypothesisError::Syntax { pos, msg: msg.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, HypothesisError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            toks.push((i, Tok::LParen));
            i += 1;
        } else if c == ')' {
            toks.push((i, Tok::RParen));
            i += 1;
        } else if c == '"' {
            let start = i;
            i += 1;
            let mut s = String::new();
            loop {
                match bytes.get(i).map(|&b| b as char) {
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => match bytes.get(i + 1).map(|&b| b as char) {
                        Some('"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some('\\') => {
                            s.push('\\');
                            i += 2;
                        }
                        Some(c) => return Err(syntax(i, format!("unknown escape `\\{c}`"))),
                        None => return Err(syntax(start, "unterminated string")),
                    },
                    Some(_) => {
                        // Strings are UTF-8; copy whole characters.
                        let ch = text[i..].chars().next().unwrap();
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                    None => return Err(syntax(start, "unterminated string")),
                }
            }
            toks.push((start, Tok::Str(s)));
        } else {
            let start = i;
            while i < bytes.len() {
                let c = bytes[i] as char;
                if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                    break;
                }
                i += 1;
            }
            toks.push((start, Tok::Atom(text[start..i].to_owned())));
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    cursor: usize,
    kb: &'a KnowledgeBase,
    nodes: Vec<DlOperationNode>,
    end: usize,
}

pub(super) fn parse(text: &str, kb: &KnowledgeBase) -> Result<Hypothesis, HypothesisError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, cursor: 0, kb, nodes: Vec::new(), end: text.len() };
    let root = parser.parse_expr()?;
    if let Some((pos, _)) = parser.peek() {
        return Err(syntax(pos, "unexpected content after the hypothesis"));
    }
    // An atomic hypothesis normalizes to a single-operand conjunction.
    if let RowSource::Concept(_) = root {
        parser.emit(NodeKind::Conjunction {
            operands: vec![BoolOperand { source: root, negated: false }],
        });
    }
    Ok(Hypothesis::from_parts(parser.nodes, text.to_owned()))
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.toks.get(self.cursor).map(|(p, t)| (*p, t))
    }

    fn next(&mut self) -> Result<(usize, Tok), HypothesisError> {
        let item = self
            .toks
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| syntax(self.end, "unexpected end of input"))?;
        self.cursor += 1;
        Ok(item)
    }

    fn expect_rparen(&mut self) -> Result<(), HypothesisError> {
        match self.next()? {
            (_, Tok::RParen) => Ok(()),
            (pos, _) => Err(syntax(pos, "expected `)`")),
        }
    }

    fn expect_atom(&mut self) -> Result<(usize, String), HypothesisError> {
        match self.next()? {
            (pos, Tok::Atom(a)) => Ok((pos, a)),
            (pos, _) => Err(syntax(pos, "expected a name or operator")),
        }
    }

    fn emit(&mut self, kind: NodeKind) -> RowSource {
        let index = self.nodes.len() as u32;
        self.nodes.push(DlOperationNode { kind, output_row: index });
        RowSource::Node(index)
    }

    fn concept(&self, pos: usize, name: &str) -> Result<ConceptId, HypothesisError> {
        self.kb.names().concepts.id(name).map(ConceptId).ok_or_else(|| {
            HypothesisError::UnknownName { pos, name: name.to_owned(), kind: "concept" }
        })
    }

    fn parse_expr(&mut self) -> Result<RowSource, HypothesisError> {
        match self.next()? {
            (pos, Tok::Atom(name)) => Ok(RowSource::Concept(self.concept(pos, &name)?)),
            (_, Tok::LParen) => {
                let (pos, head) = self.expect_atom()?;
                match head.as_str() {
                    "AND" => self.parse_boolean(true),
                    "OR" => self.parse_boolean(false),
                    "SOME" => self.parse_role_restriction(RestrictionHead::Exists),
                    "ONLY" => self.parse_role_restriction(RestrictionHead::Forall),
                    "MIN" => self.parse_cardinality(CardinalityKind::Min),
                    "EXACTLY" => self.parse_cardinality(CardinalityKind::Exactly),
                    "MAX" => self.parse_cardinality(CardinalityKind::Max),
                    "DSOME" => self.parse_numeric(),
                    "SSOME" => self.parse_string(),
                    "NOT" => Err(syntax(pos, "NOT is only allowed as an AND/OR operand")),
                    other => Err(syntax(pos, format!("unknown operator `{other}`"))),
                }
            }
            (pos, Tok::RParen) => Err(syntax(pos, "unexpected `)`")),
            (pos, Tok::Str(_)) => Err(syntax(pos, "unexpected string")),
        }
    }

    fn parse_boolean(&mut self, and: bool) -> Result<RowSource, HypothesisError> {
        let mut operands = Vec::new();
        loop {
            match self.peek() {
                Some((_, Tok::RParen)) => {
                    self.cursor += 1;
                    break;
                }
                Some(_) => operands.push(self.parse_operand()?),
                None => return Err(syntax(self.end, "unexpected end of input")),
            }
        }
        if operands.is_empty() {
            return Err(syntax(self.end, "AND/OR needs at least one operand"));
        }
        let kind = if and {
            NodeKind::Conjunction { operands }
        } else {
            NodeKind::Disjunction { operands }
        };
        Ok(self.emit(kind))
    }

    fn parse_operand(&mut self) -> Result<BoolOperand, HypothesisError> {
        // `(NOT name)` is an operand form, not an expression.
        if let Some((_, Tok::LParen)) = self.peek() {
            if let Some((_, Tok::Atom(head))) = self.toks.get(self.cursor + 1).map(|(p, t)| (*p, t)) {
                if head == "NOT" {
                    self.cursor += 2;
                    let source = match self.next()? {
                        (pos, Tok::Atom(name)) => RowSource::Concept(self.concept(pos, &name)?),
                        (pos, _) => return Err(HypothesisError::NegatedCompound { pos }),
                    };
                    self.expect_rparen()?;
                    return Ok(BoolOperand { source, negated: true });
                }
            }
        }
        Ok(BoolOperand { source: self.parse_expr()?, negated: false })
    }

    fn parse_role_ref(&mut self) -> Result<(RoleId, bool), HypothesisError> {
        match self.next()? {
            (pos, Tok::Atom(name)) => Ok((self.role(pos, &name)?, false)),
            (_, Tok::LParen) => {
                let (pos, head) = self.expect_atom()?;
                if head != "INV" {
                    return Err(syntax(pos, "expected `INV` in a role position"));
                }
                let (pos, name) = self.expect_atom()?;
                let role = self.role(pos, &name)?;
                self.expect_rparen()?;
                Ok((role, true))
            }
            (pos, _) => Err(syntax(pos, "expected a role")),
        }
    }

    fn role(&self, pos: usize, name: &str) -> Result<RoleId, HypothesisError> {
        self.kb.names().roles.id(name).map(RoleId).ok_or_else(|| HypothesisError::UnknownName {
            pos,
            name: name.to_owned(),
            kind: "role",
        })
    }

    fn parse_role_restriction(&mut self, head: RestrictionHead) -> Result<RowSource, HypothesisError> {
        let (role, inverse) = self.parse_role_ref()?;
        let filler = self.parse_expr()?;
        self.expect_rparen()?;
        let kind = match head {
            RestrictionHead::Exists => NodeKind::ExistsRole { role, inverse, filler },
            RestrictionHead::Forall => NodeKind::ForallRole { role, inverse, filler },
        };
        Ok(self.emit(kind))
    }

    fn parse_cardinality(&mut self, kind: CardinalityKind) -> Result<RowSource, HypothesisError> {
        let (pos, bound) = self.expect_atom()?;
        let value: i64 = bound
            .parse()
            .map_err(|_| syntax(pos, format!("expected an integer bound, got `{bound}`")))?;
        if value < 0 {
            return Err(HypothesisError::NegativeCardinality { pos, value });
        }
        let (role, inverse) = self.parse_role_ref()?;
        let filler = self.parse_expr()?;
        self.expect_rparen()?;
        Ok(self.emit(NodeKind::CardinalityRole {
            role,
            inverse,
            kind,
            bound: value as u32,
            filler,
        }))
    }

    fn parse_numeric(&mut self) -> Result<RowSource, HypothesisError> {
        let (pos, name) = self.expect_atom()?;
        let role = self
            .kb
            .names()
            .numeric_roles
            .id(&name)
            .map(NumericRoleId)
            .ok_or(HypothesisError::UnknownName { pos, name, kind: "numeric role" })?;
        let (pos, cmp) = self.expect_atom()?;
        let cmp = match cmp.as_str() {
            ">=" => NumericComparator::Min,
            "==" => NumericComparator::Exact,
            "<=" => NumericComparator::Max,
            other => return Err(syntax(pos, format!("expected `>=`, `==`, or `<=`, got `{other}`"))),
        };
        let (pos, value) = self.expect_atom()?;
        let threshold: f32 = value
            .parse()
            .map_err(|_| syntax(pos, format!("expected a decimal threshold, got `{value}`")))?;
        if threshold.is_nan() {
            return Err(syntax(pos, "threshold must not be NaN"));
        }
        self.expect_rparen()?;
        Ok(self.emit(NodeKind::ExistsNumeric { role, cmp, threshold }))
    }

    fn parse_string(&mut self) -> Result<RowSource, HypothesisError> {
        let (pos, name) = self.expect_atom()?;
        let role = self
            .kb
            .names()
            .string_roles
            .id(&name)
            .map(StringRoleId)
            .ok_or(HypothesisError::UnknownName { pos, name, kind: "string role" })?;
        let (pos, mode) = self.expect_atom()?;
        let value = match self.next()? {
            (_, Tok::Str(s)) => s,
            (pos, _) => return Err(syntax(pos, "expected a quoted string value")),
        };
        let kind = match mode.as_str() {
            "EQUAL" => NodeKind::StringEqual { role, value },
            "CONTAIN" => {
                if value.is_empty() {
                    return Err(syntax(pos, "CONTAIN pattern must not be empty"));
                }
                NodeKind::StringContain { role, pattern: value }
            }
            other => return Err(syntax(pos, format!("expected `EQUAL` or `CONTAIN`, got `{other}`"))),
        };
        self.expect_rparen()?;
        Ok(self.emit(kind))
    }
}

enum RestrictionHead {
    Exists,
    Forall,
}
