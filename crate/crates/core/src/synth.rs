//! Synthetic dataset and hypothesis-batch generation.
//!
//! The two assertion regimes bound role-restriction performance from
//! both sides: `SingleSubject` gives every assertion the same subject
//! (parallel result writes serialize on one cell), `UniqueSubject`
//! gives every assertion a distinct subject and object (writes stay
//! fully parallel). Concrete-role variants keep the same subject
//! layouts but fix the assertion value to one constant.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kb::KnowledgeBase;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible dataset spec: {0}")]
    InfeasibleSpec(String),
    #[error("infeasible batch template: {0}")]
    InfeasibleTemplate(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DatasetRegime {
    /// All role assertions share subject 0; objects are distinct.
    SingleSubject,
    /// Assertion `k` is `(2k, 2k+1)`: subjects and objects all distinct.
    UniqueSubject,
}

impl DatasetRegime {
    pub fn name(self) -> &'static str {
        match self {
            DatasetRegime::SingleSubject => "single-subject",
            DatasetRegime::UniqueSubject => "unique-subject",
        }
    }
}

impl std::str::FromStr for DatasetRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-subject" => Ok(DatasetRegime::SingleSubject),
            "unique-subject" => Ok(DatasetRegime::UniqueSubject),
            other => Err(format!("unknown regime `{other}` (expected single-subject or unique-subject)")),
        }
    }
}

/// Which assertion table the regime populates.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AssertionKind {
    Role,
    Numeric,
    String,
}

impl std::str::FromStr for AssertionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "role" => Ok(AssertionKind::Role),
            "numeric" => Ok(AssertionKind::Numeric),
            "string" => Ok(AssertionKind::String),
            other => Err(format!("unknown assertion kind `{other}` (expected role, numeric, or string)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub regime: DatasetRegime,
    pub num_assertions: usize,
    pub num_individuals: usize,
    pub num_concepts: usize,
    /// Probability that any concept membership cell is 1.
    pub density: f64,
    pub seed: u64,
    pub assertion_kind: AssertionKind,
}

impl DatasetSpec {
    /// Smallest individual count that can host the regime's layout.
    pub fn minimal_individuals(regime: DatasetRegime, kind: AssertionKind, num_assertions: usize) -> usize {
        if num_assertions == 0 {
            return 0;
        }
        match (regime, kind) {
            // One shared subject plus distinct objects.
            (DatasetRegime::SingleSubject, AssertionKind::Role) => num_assertions + 1,
            (DatasetRegime::SingleSubject, _) => 1,
            // Distinct `(2k, 2k+1)` pairs.
            (DatasetRegime::UniqueSubject, AssertionKind::Role) => num_assertions * 2,
            (DatasetRegime::UniqueSubject, _) => num_assertions,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(SynthError::InfeasibleSpec(format!(
                "density {} is outside [0, 1]",
                self.density
            )));
        }
        let needed =
            Self::minimal_individuals(self.regime, self.assertion_kind, self.num_assertions);
        if self.num_individuals < needed {
            return Err(SynthError::InfeasibleSpec(format!(
                "{} with {} {:?} assertions needs at least {} individuals, got {}",
                self.regime.name(),
                self.num_assertions,
                self.assertion_kind,
                needed,
                self.num_individuals
            )));
        }
        Ok(())
    }
}

/// The fixed value used for every generated concrete-role assertion.
pub const FIXED_NUMERIC_VALUE: f32 = 1.0;
pub const FIXED_STRING_VALUE: &str = "fixed-value";

/// Generates a KB text document for the spec. Identical spec and seed
/// produce byte-identical output.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<String, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut doc = String::new();

    if spec.num_concepts > 0 {
        doc.push_str("#concepts\n");
        for c in 0..spec.num_concepts {
            let _ = writeln!(doc, "C{c}");
        }
    }
    match spec.assertion_kind {
        AssertionKind::Role => doc.push_str("#roles\nr0\n"),
        AssertionKind::Numeric => doc.push_str("#numeric-roles\nd0\n"),
        AssertionKind::String => doc.push_str("#string-roles\ns0\n"),
    }
    if spec.num_individuals > 0 {
        doc.push_str("#individuals\n");
        for i in 0..spec.num_individuals {
            let _ = writeln!(doc, "i{i}");
        }
    }

    if spec.num_concepts > 0 && spec.num_individuals > 0 && spec.density > 0.0 {
        doc.push_str("#concept-assertions\n");
        for c in 0..spec.num_concepts {
            for i in 0..spec.num_individuals {
                if rng.gen_bool(spec.density) {
                    let _ = writeln!(doc, "C{c} i{i}");
                }
            }
        }
    }

    if spec.num_assertions > 0 {
        match spec.assertion_kind {
            AssertionKind::Role => {
                doc.push_str("#role-assertions\n");
                for k in 0..spec.num_assertions {
                    let (subj, obj) = match spec.regime {
                        DatasetRegime::SingleSubject => (0, k + 1),
                        DatasetRegime::UniqueSubject => (2 * k, 2 * k + 1),
                    };
                    let _ = writeln!(doc, "r0 i{subj} i{obj}");
                }
            }
            AssertionKind::Numeric => {
                doc.push_str("#numeric-assertions\n");
                for k in 0..spec.num_assertions {
                    let subj = match spec.regime {
                        DatasetRegime::SingleSubject => 0,
                        DatasetRegime::UniqueSubject => k,
                    };
                    let _ = writeln!(doc, "d0 i{subj} {FIXED_NUMERIC_VALUE}");
                }
            }
            AssertionKind::String => {
                doc.push_str("#string-assertions\n");
                for k in 0..spec.num_assertions {
                    let subj = match spec.regime {
                        DatasetRegime::SingleSubject => 0,
                        DatasetRegime::UniqueSubject => k,
                    };
                    let _ = writeln!(doc, "s0 i{subj} \"{FIXED_STRING_VALUE}\"");
                }
            }
        }
    }

    if spec.num_individuals > 0 {
        doc.push_str("#examples\n");
        for i in 0..spec.num_individuals {
            let sign = if rng.gen_bool(0.5) { '+' } else { '-' };
            let _ = writeln!(doc, "{sign} i{i}");
        }
    }
    Ok(doc)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BatchTemplate {
    /// Conjunctions of five distinct seeded-random concepts.
    Conj5,
    /// Seeded random expressions covering every operator kind.
    RandomMixed,
}

impl std::str::FromStr for BatchTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conj5" => Ok(BatchTemplate::Conj5),
            "random-mixed" => Ok(BatchTemplate::RandomMixed),
            other => Err(format!("unknown template `{other}` (expected conj5 or random-mixed)")),
        }
    }
}

/// Generates `n` hypothesis texts for the template against the KB's
/// declared names.
pub fn gen_hypothesis_batch(
    n: usize,
    template: BatchTemplate,
    kb: &KnowledgeBase,
    seed: u64,
) -> Result<Vec<String>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match template {
        BatchTemplate::Conj5 => {
            let concepts = kb.num_concepts();
            if concepts < 5 {
                return Err(SynthError::InfeasibleTemplate(format!(
                    "conj5 needs at least 5 concepts, the KB declares {concepts}"
                )));
            }
            Ok((0..n)
                .map(|_| {
                    let picks = sample_distinct(&mut rng, concepts, 5);
                    let names: Vec<&str> = picks
                        .iter()
                        .map(|&c| kb.names().concepts.name(c as u32).unwrap())
                        .collect();
                    format!("(AND {})", names.join(" "))
                })
                .collect())
        }
        BatchTemplate::RandomMixed => {
            if kb.num_concepts() == 0 || kb.num_roles() == 0 {
                return Err(SynthError::InfeasibleTemplate(
                    "random-mixed needs at least one concept and one role".into(),
                ));
            }
            Ok((0..n).map(|_| random_expr(&mut rng, kb, 0)).collect())
        }
    }
}

fn sample_distinct(rng: &mut ChaCha8Rng, upper: usize, count: usize) -> Vec<usize> {
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let candidate = rng.gen_range(0..upper);
        if !picked.contains(&candidate) {
            picked.push(candidate);
        }
    }
    picked
}

fn random_expr(rng: &mut ChaCha8Rng, kb: &KnowledgeBase, depth: usize) -> String {
    let concept = |rng: &mut ChaCha8Rng| {
        let c = rng.gen_range(0..kb.num_concepts());
        kb.names().concepts.name(c as u32).unwrap().to_owned()
    };
    let role = |rng: &mut ChaCha8Rng| {
        let r = rng.gen_range(0..kb.num_roles());
        let name = kb.names().roles.name(r as u32).unwrap();
        if rng.gen_bool(0.3) {
            format!("(INV {name})")
        } else {
            name.to_owned()
        }
    };

    let has_numeric = kb.num_numeric_roles() > 0;
    let has_string = kb.num_string_roles() > 0 && !kb.string_values().is_empty();
    let choice = if depth >= 3 { 0 } else { rng.gen_range(0..8) };
    match choice {
        0 => concept(rng),
        1 | 2 => {
            let head = if choice == 1 { "AND" } else { "OR" };
            let count = rng.gen_range(1..4);
            let parts: Vec<String> = (0..count)
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        format!("(NOT {})", concept(rng))
                    } else {
                        random_expr(rng, kb, depth + 1)
                    }
                })
                .collect();
            format!("({head} {})", parts.join(" "))
        }
        3 => format!("(SOME {} {})", role(rng), random_expr(rng, kb, depth + 1)),
        4 => format!("(ONLY {} {})", role(rng), random_expr(rng, kb, depth + 1)),
        5 => {
            let kind = ["MIN", "EXACTLY", "MAX"][rng.gen_range(0..3)];
            format!(
                "({kind} {} {} {})",
                rng.gen_range(0..4),
                role(rng),
                random_expr(rng, kb, depth + 1)
            )
        }
        6 if has_numeric => {
            let r = rng.gen_range(0..kb.num_numeric_roles());
            let name = kb.names().numeric_roles.name(r as u32).unwrap();
            let cmp = [">=", "==", "<="][rng.gen_range(0..3)];
            format!("(DSOME {name} {cmp} {})", rng.gen_range(0..5))
        }
        7 if has_string => {
            let r = rng.gen_range(0..kb.num_string_roles());
            let name = kb.names().string_roles.name(r as u32).unwrap();
            let mode = ["EQUAL", "CONTAIN"][rng.gen_range(0..2)];
            let value = if rng.gen_bool(0.2) {
                "never-asserted-value".to_owned()
            } else {
                let v = rng.gen_range(0..kb.string_values().len());
                kb.string_values().value(v as u32).unwrap().to_owned()
            };
            // Quotes and backslashes in stored values need re-escaping.
            let escaped = value.replace('\\', "\\\\").replace('"', "\\\"");
            let effective_mode = if mode == "CONTAIN" && value.is_empty() { "EQUAL" } else { mode };
            format!("(SSOME {name} {effective_mode} \"{escaped}\")")
        }
        _ => concept(rng),
    }
}
