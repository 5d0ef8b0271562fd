//! Brute-force oracle used by the integration suites.
//!
//! The oracle keeps its own view of a generated world (plain name
//! lists, membership tables, and assertion lists), renders it to the KB
//! document format and hypotheses to the s-expression grammar, and
//! evaluates semantics with naive nested loops: no offset tables, no
//! skip-ahead, no parallelism. The engine under test only ever sees the
//! rendered text.

use std::fmt::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Generator-owned world description.
#[derive(Clone, Debug)]
pub struct OracleKb {
    pub num_individuals: usize,
    /// memberships[concept][individual]
    pub memberships: Vec<Vec<bool>>,
    /// per role: (subject, object) pairs
    pub role_asserts: Vec<Vec<(usize, usize)>>,
    /// per numeric role: (subject, value)
    pub numeric_asserts: Vec<Vec<(usize, f32)>>,
    /// per string role: (subject, value)
    pub string_asserts: Vec<Vec<(usize, String)>>,
    pub pos: Vec<bool>,
    pub neg: Vec<bool>,
}

pub fn escape_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl OracleKb {
    pub fn random(rng: &mut ChaCha8Rng, max_individuals: usize, max_assertions: usize) -> Self {
        let n = rng.gen_range(1..=max_individuals.max(1));
        let concepts = rng.gen_range(1..=8usize);
        let roles = rng.gen_range(1..=4usize);
        let numeric_roles = rng.gen_range(1..=2usize);
        let string_roles = rng.gen_range(1..=2usize);

        let memberships = (0..concepts)
            .map(|_| {
                let density = rng.gen_range(0.0..=1.0);
                (0..n).map(|_| rng.gen_bool(density)).collect()
            })
            .collect();

        let mut budget = max_assertions;
        let mut take = |rng: &mut ChaCha8Rng, upper: usize| {
            let count = rng.gen_range(0..=upper.min(budget));
            budget -= count;
            count
        };

        let role_asserts = (0..roles)
            .map(|_| {
                let count = take(rng, 120);
                (0..count).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect()
            })
            .collect();
        let numeric_pool = [0.0f32, 1.0, 1.5, -3.25, 42.0, f32::NAN];
        let numeric_asserts = (0..numeric_roles)
            .map(|_| {
                let count = take(rng, 60);
                (0..count)
                    .map(|_| (rng.gen_range(0..n), numeric_pool[rng.gen_range(0..numeric_pool.len())]))
                    .collect()
            })
            .collect();
        let string_pool = ["alpha", "beta", "alphabet", "", "two words", "q\"w\\e"];
        let string_asserts = (0..string_roles)
            .map(|_| {
                let count = take(rng, 60);
                (0..count)
                    .map(|_| {
                        (rng.gen_range(0..n), string_pool[rng.gen_range(0..string_pool.len())].to_owned())
                    })
                    .collect()
            })
            .collect();

        let mut pos = vec![false; n];
        let mut neg = vec![false; n];
        for i in 0..n {
            match rng.gen_range(0..3) {
                0 => pos[i] = true,
                1 => neg[i] = true,
                _ => {}
            }
        }
        Self {
            num_individuals: n,
            memberships,
            role_asserts,
            numeric_asserts,
            string_asserts,
            pos,
            neg,
        }
    }

    pub fn num_concepts(&self) -> usize {
        self.memberships.len()
    }

    pub fn num_roles(&self) -> usize {
        self.role_asserts.len()
    }

    pub fn to_document(&self) -> String {
        let mut doc = String::new();
        if !self.memberships.is_empty() {
            doc.push_str("#concepts\n");
            for c in 0..self.memberships.len() {
                let _ = writeln!(doc, "C{c}");
            }
        }
        if !self.role_asserts.is_empty() {
            doc.push_str("#roles\n");
            for r in 0..self.role_asserts.len() {
                let _ = writeln!(doc, "r{r}");
            }
        }
        if !self.numeric_asserts.is_empty() {
            doc.push_str("#numeric-roles\n");
            for r in 0..self.numeric_asserts.len() {
                let _ = writeln!(doc, "d{r}");
            }
        }
        if !self.string_asserts.is_empty() {
            doc.push_str("#string-roles\n");
            for r in 0..self.string_asserts.len() {
                let _ = writeln!(doc, "s{r}");
            }
        }
        if self.num_individuals > 0 {
            doc.push_str("#individuals\n");
            for i in 0..self.num_individuals {
                let _ = writeln!(doc, "i{i}");
            }
        }
        doc.push_str("#concept-assertions\n");
        for (c, row) in self.memberships.iter().enumerate() {
            for (i, &member) in row.iter().enumerate() {
                if member {
                    let _ = writeln!(doc, "C{c} i{i}");
                }
            }
        }
        doc.push_str("#role-assertions\n");
        for (r, asserts) in self.role_asserts.iter().enumerate() {
            for &(s, o) in asserts {
                let _ = writeln!(doc, "r{r} i{s} i{o}");
            }
        }
        doc.push_str("#numeric-assertions\n");
        for (r, asserts) in self.numeric_asserts.iter().enumerate() {
            for &(s, v) in asserts {
                let _ = writeln!(doc, "d{r} i{s} {v}");
            }
        }
        doc.push_str("#string-assertions\n");
        for (r, asserts) in self.string_asserts.iter().enumerate() {
            for (s, v) in asserts {
                let _ = writeln!(doc, "s{r} i{s} {}", escape_string(v));
            }
        }
        doc.push_str("#examples\n");
        for i in 0..self.num_individuals {
            if self.pos[i] {
                let _ = writeln!(doc, "+ i{i}");
            } else if self.neg[i] {
                let _ = writeln!(doc, "- i{i}");
            }
        }
        doc
    }

    pub fn coverage(&self, row: &[bool]) -> (u64, u64) {
        let mut pos = 0;
        let mut neg = 0;
        for (i, &covered) in row.iter().enumerate() {
            if covered && self.pos[i] {
                pos += 1;
            }
            if covered && self.neg[i] {
                neg += 1;
            }
        }
        (pos, neg)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OracleCard {
    Min,
    Exactly,
    Max,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OracleCmp {
    Min,
    Exact,
    Max,
}

/// Generator-owned hypothesis tree, rendered to the grammar for the
/// engine and evaluated directly by the oracle.
#[derive(Clone, Debug)]
pub enum OracleExpr {
    Concept(usize),
    And(Vec<(OracleExpr, bool)>),
    Or(Vec<(OracleExpr, bool)>),
    Some {
        role: usize,
        inverse: bool,
        filler: Box<OracleExpr>,
    },
    Only {
        role: usize,
        inverse: bool,
        filler: Box<OracleExpr>,
    },
    Card {
        kind: OracleCard,
        bound: u32,
        role: usize,
        inverse: bool,
        filler: Box<OracleExpr>,
    },
    NumericSome {
        role: usize,
        cmp: OracleCmp,
        threshold: f32,
    },
    StrEqual {
        role: usize,
        value: String,
    },
    StrContain {
        role: usize,
        pattern: String,
    },
}

impl OracleExpr {
    pub fn random(rng: &mut ChaCha8Rng, kb: &OracleKb, depth: usize) -> Self {
        let concept = |rng: &mut ChaCha8Rng| rng.gen_range(0..kb.num_concepts());
        let choice = if depth >= 3 { rng.gen_range(0..2) } else { rng.gen_range(0..9) };
        match choice {
            0 => OracleExpr::Concept(concept(rng)),
            1 => {
                let string_pool = ["alpha", "beta", "alp", "never-asserted", "q\"w\\e", ""];
                let role = rng.gen_range(0..kb.string_asserts.len());
                if rng.gen_bool(0.5) {
                    OracleExpr::StrEqual {
                        role,
                        value: string_pool[rng.gen_range(0..string_pool.len())].to_owned(),
                    }
                } else {
                    // CONTAIN rejects empty patterns.
                    let pattern = loop {
                        let p = string_pool[rng.gen_range(0..string_pool.len())];
                        if !p.is_empty() {
                            break p;
                        }
                    };
                    OracleExpr::StrContain { role, pattern: pattern.to_owned() }
                }
            }
            2 | 3 => {
                let count = rng.gen_range(1..4);
                let operands = (0..count)
                    .map(|_| {
                        if rng.gen_bool(0.3) {
                            (OracleExpr::Concept(concept(rng)), true)
                        } else {
                            (OracleExpr::random(rng, kb, depth + 1), false)
                        }
                    })
                    .collect();
                if choice == 2 {
                    OracleExpr::And(operands)
                } else {
                    OracleExpr::Or(operands)
                }
            }
            4 | 5 => {
                let role = rng.gen_range(0..kb.num_roles());
                let inverse = rng.gen_bool(0.4);
                let filler = Box::new(OracleExpr::random(rng, kb, depth + 1));
                if choice == 4 {
                    OracleExpr::Some { role, inverse, filler }
                } else {
                    OracleExpr::Only { role, inverse, filler }
                }
            }
            6 | 7 => {
                let kind = [OracleCard::Min, OracleCard::Exactly, OracleCard::Max][rng.gen_range(0..3)];
                OracleExpr::Card {
                    kind,
                    bound: rng.gen_range(0..4),
                    role: rng.gen_range(0..kb.num_roles()),
                    inverse: rng.gen_bool(0.4),
                    filler: Box::new(OracleExpr::random(rng, kb, depth + 1)),
                }
            }
            _ => {
                let cmp = [OracleCmp::Min, OracleCmp::Exact, OracleCmp::Max][rng.gen_range(0..3)];
                let thresholds = [0.0f32, 1.0, 1.5, -3.25, 42.0];
                OracleExpr::NumericSome {
                    role: rng.gen_range(0..kb.numeric_asserts.len()),
                    cmp,
                    threshold: thresholds[rng.gen_range(0..thresholds.len())],
                }
            }
        }
    }

    pub fn render(&self) -> String {
        match self {
            OracleExpr::Concept(c) => format!("C{c}"),
            OracleExpr::And(operands) | OracleExpr::Or(operands) => {
                let head = if matches!(self, OracleExpr::And(_)) { "AND" } else { "OR" };
                let parts: Vec<String> = operands
                    .iter()
                    .map(|(expr, negated)| {
                        if *negated {
                            format!("(NOT {})", expr.render())
                        } else {
                            expr.render()
                        }
                    })
                    .collect();
                format!("({head} {})", parts.join(" "))
            }
            OracleExpr::Some { role, inverse, filler } => {
                format!("(SOME {} {})", render_role(*role, *inverse), filler.render())
            }
            OracleExpr::Only { role, inverse, filler } => {
                format!("(ONLY {} {})", render_role(*role, *inverse), filler.render())
            }
            OracleExpr::Card { kind, bound, role, inverse, filler } => {
                let head = match kind {
                    OracleCard::Min => "MIN",
                    OracleCard::Exactly => "EXACTLY",
                    OracleCard::Max => "MAX",
                };
                format!("({head} {bound} {} {})", render_role(*role, *inverse), filler.render())
            }
            OracleExpr::NumericSome { role, cmp, threshold } => {
                let symbol = match cmp {
                    OracleCmp::Min => ">=",
                    OracleCmp::Exact => "==",
                    OracleCmp::Max => "<=",
                };
                format!("(DSOME d{role} {symbol} {threshold})")
            }
            OracleExpr::StrEqual { role, value } => {
                format!("(SSOME s{role} EQUAL {})", escape_string(value))
            }
            OracleExpr::StrContain { role, pattern } => {
                format!("(SSOME s{role} CONTAIN {})", escape_string(pattern))
            }
        }
    }

    /// Naive set-semantics evaluation: nested loops over the oracle's
    /// own assertion lists.
    pub fn eval(&self, kb: &OracleKb) -> Vec<bool> {
        let n = kb.num_individuals;
        match self {
            OracleExpr::Concept(c) => kb.memberships[*c].clone(),
            OracleExpr::And(operands) => {
                let rows: Vec<(Vec<bool>, bool)> =
                    operands.iter().map(|(e, neg)| (e.eval(kb), *neg)).collect();
                (0..n)
                    .map(|i| rows.iter().all(|(row, neg)| row[i] != *neg))
                    .collect()
            }
            OracleExpr::Or(operands) => {
                let rows: Vec<(Vec<bool>, bool)> =
                    operands.iter().map(|(e, neg)| (e.eval(kb), *neg)).collect();
                (0..n)
                    .map(|i| rows.iter().any(|(row, neg)| row[i] != *neg))
                    .collect()
            }
            OracleExpr::Some { role, inverse, filler } => {
                let filler = filler.eval(kb);
                (0..n)
                    .map(|i| {
                        kb.role_asserts[*role].iter().any(|&(s, o)| {
                            let (subj, obj) = if *inverse { (o, s) } else { (s, o) };
                            subj == i && filler[obj]
                        })
                    })
                    .collect()
            }
            OracleExpr::Only { role, inverse, filler } => {
                let filler = filler.eval(kb);
                (0..n)
                    .map(|i| {
                        kb.role_asserts[*role].iter().all(|&(s, o)| {
                            let (subj, obj) = if *inverse { (o, s) } else { (s, o) };
                            subj != i || filler[obj]
                        })
                    })
                    .collect()
            }
            OracleExpr::Card { kind, bound, role, inverse, filler } => {
                let filler = filler.eval(kb);
                (0..n)
                    .map(|i| {
                        let count = kb.role_asserts[*role]
                            .iter()
                            .filter(|&&(s, o)| {
                                let (subj, obj) = if *inverse { (o, s) } else { (s, o) };
                                subj == i && filler[obj]
                            })
                            .count() as u32;
                        match kind {
                            OracleCard::Min => count >= *bound,
                            OracleCard::Exactly => count == *bound,
                            OracleCard::Max => count > 0 && count <= *bound,
                        }
                    })
                    .collect()
            }
            OracleExpr::NumericSome { role, cmp, threshold } => (0..n)
                .map(|i| {
                    kb.numeric_asserts[*role].iter().any(|&(s, v)| {
                        s == i
                            && match cmp {
                                OracleCmp::Min => v >= *threshold,
                                OracleCmp::Exact => v == *threshold,
                                OracleCmp::Max => v <= *threshold,
                            }
                    })
                })
                .collect(),
            OracleExpr::StrEqual { role, value } => (0..n)
                .map(|i| kb.string_asserts[*role].iter().any(|(s, v)| *s == i && v == value))
                .collect(),
            OracleExpr::StrContain { role, pattern } => (0..n)
                .map(|i| {
                    kb.string_asserts[*role]
                        .iter()
                        .any(|(s, v)| *s == i && v.contains(pattern.as_str()))
                })
                .collect(),
        }
    }
}

fn render_role(role: usize, inverse: bool) -> String {
    if inverse {
        format!("(INV r{role})")
    } else {
        format!("r{role}")
    }
}
