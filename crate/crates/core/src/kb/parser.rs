//! Parser for the line-oriented KB text format.
//!
//! Sections are introduced by `#`-headers and may appear in any order;
//! declarations are processed before assertions so forward references
//! between sections are fine. `;` starts a comment line.

use super::{
    ConceptsMatrix, ExamplesTable, KbError, KnowledgeBase, NameMaps, NameTable, NumericAssertion,
    NumericRoleTable, RoleAssertion, RoleTable, Segment, StringAssertion, StringRoleTable,
    StringValueMap,
};

#[derive(Copy, Clone, PartialEq, Eq)]
enum Section {
    Concepts,
    Roles,
    NumericRoles,
    StringRoles,
    Individuals,
    ConceptAssertions,
    RoleAssertions,
    NumericAssertions,
    StringAssertions,
    Examples,
}

impl Section {
    fn from_header(header: &str) -> Option<Self> {
        match header {
            "#concepts" => Some(Self::Concepts),
            "#roles" => Some(Self::Roles),
            "#numeric-roles" => Some(Self::NumericRoles),
            "#string-roles" => Some(Self::StringRoles),
            "#individuals" => Some(Self::Individuals),
            "#concept-assertions" => Some(Self::ConceptAssertions),
            "#role-assertions" => Some(Self::RoleAssertions),
            "#numeric-assertions" => Some(Self::NumericAssertions),
            "#string-assertions" => Some(Self::StringAssertions),
            "#examples" => Some(Self::Examples),
            _ => None,
        }
    }
}

pub(crate) fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn syntax(line: usize, msg: impl Into<String>) -> KbError {
    KbError::Syntax { line, msg: msg.into() }
}

/// Builds a [`KnowledgeBase`] from a text document.
///
/// Ids are assigned in first-appearance (declaration) order. Role and
/// concrete-role tables come out sorted by `(role id, subject id)` so
/// every segment is contiguous and grouped by subject. Duplicate
/// assertions are legal instance data and are kept.
pub fn load_kb(document: &str) -> Result<KnowledgeBase, KbError> {
    let mut section: Option<Section> = None;
    // (line number, payload) per assertion-like section, resolved after
    // all declarations are known.
    let mut concept_asserts: Vec<(usize, &str)> = Vec::new();
    let mut role_asserts: Vec<(usize, &str)> = Vec::new();
    let mut numeric_asserts: Vec<(usize, &str)> = Vec::new();
    let mut string_asserts: Vec<(usize, &str)> = Vec::new();
    let mut example_lines: Vec<(usize, &str)> = Vec::new();

    let mut names = NameMaps::default();

    for (idx, raw) in document.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            section = match Section::from_header(line) {
                Some(s) => Some(s),
                None => return Err(syntax(line_no, format!("unknown section header `#{header}`"))),
            };
            continue;
        }
        let section = section.ok_or_else(|| syntax(line_no, "content before any section header"))?;
        match section {
            Section::Concepts => declare(&mut names.concepts, line, line_no)?,
            Section::Roles => declare(&mut names.roles, line, line_no)?,
            Section::NumericRoles => declare(&mut names.numeric_roles, line, line_no)?,
            Section::StringRoles => declare(&mut names.string_roles, line, line_no)?,
            Section::Individuals => declare(&mut names.individuals, line, line_no)?,
            Section::ConceptAssertions => concept_asserts.push((line_no, line)),
            Section::RoleAssertions => role_asserts.push((line_no, line)),
            Section::NumericAssertions => numeric_asserts.push((line_no, line)),
            Section::StringAssertions => string_asserts.push((line_no, line)),
            Section::Examples => example_lines.push((line_no, line)),
        }
    }

    let num_individuals = names.individuals.len();

    let mut concepts = ConceptsMatrix::new(names.concepts.len(), num_individuals);
    for (line_no, payload) in concept_asserts {
        let mut it = payload.split_whitespace();
        let (concept, individual) = match (it.next(), it.next(), it.next()) {
            (Some(c), Some(i), None) => (c, i),
            _ => return Err(syntax(line_no, "expected `<concept> <individual>`")),
        };
        let c = resolve(&names.concepts, concept, "concept", line_no)?;
        let i = resolve(&names.individuals, individual, "individual", line_no)?;
        concepts.set(c, i);
    }

    // Keyed by (role, subject); the stable sort keeps document order
    // within one subject run.
    let mut tagged_roles: Vec<(u32, RoleAssertion)> = Vec::with_capacity(role_asserts.len());
    for (line_no, payload) in role_asserts {
        let mut it = payload.split_whitespace();
        let (role, subj, obj) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(r), Some(s), Some(o), None) => (r, s, o),
            _ => return Err(syntax(line_no, "expected `<role> <subject> <object>`")),
        };
        let r = resolve(&names.roles, role, "role", line_no)?;
        let s = resolve(&names.individuals, subj, "individual", line_no)?;
        let o = resolve(&names.individuals, obj, "individual", line_no)?;
        tagged_roles.push((r, RoleAssertion { subj: s, obj: o }));
    }
    let roles = build_role_table(tagged_roles, names.roles.len());

    let mut tagged_numeric: Vec<(u32, NumericAssertion)> = Vec::with_capacity(numeric_asserts.len());
    for (line_no, payload) in numeric_asserts {
        let mut it = payload.split_whitespace();
        let (role, subj, value) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(r), Some(s), Some(v), None) => (r, s, v),
            _ => return Err(syntax(line_no, "expected `<numeric-role> <subject> <decimal>`")),
        };
        let r = resolve(&names.numeric_roles, role, "numeric role", line_no)?;
        let s = resolve(&names.individuals, subj, "individual", line_no)?;
        let val: f32 = value
            .parse()
            .map_err(|_| syntax(line_no, format!("`{value}` is not a decimal value")))?;
        tagged_numeric.push((r, NumericAssertion { subj: s, val }));
    }
    let numeric_roles = build_numeric_table(tagged_numeric, names.numeric_roles.len());

    let mut string_values = StringValueMap::default();
    let mut tagged_strings: Vec<(u32, StringAssertion)> = Vec::with_capacity(string_asserts.len());
    for (line_no, payload) in string_asserts {
        let (role, rest) = split_token(payload)
            .ok_or_else(|| syntax(line_no, "expected `<string-role> <subject> \"<value>\"`"))?;
        let (subj, rest) = split_token(rest)
            .ok_or_else(|| syntax(line_no, "expected `<string-role> <subject> \"<value>\"`"))?;
        let value = parse_quoted(rest, line_no)?;
        let r = resolve(&names.string_roles, role, "string role", line_no)?;
        let s = resolve(&names.individuals, subj, "individual", line_no)?;
        let val_index = string_values.intern(&value);
        tagged_strings.push((r, StringAssertion { subj: s, val_index }));
    }
    let string_roles = build_string_table(tagged_strings, names.string_roles.len());

    let mut examples = ExamplesTable {
        pos: vec![0; num_individuals],
        neg: vec![0; num_individuals],
    };
    for (line_no, payload) in example_lines {
        let mut it = payload.split_whitespace();
        let (sign, individual) = match (it.next(), it.next(), it.next()) {
            (Some(sign), Some(i), None) => (sign, i),
            _ => return Err(syntax(line_no, "expected `+ <individual>` or `- <individual>`")),
        };
        let i = resolve(&names.individuals, individual, "individual", line_no)? as usize;
        match sign {
            "+" => {
                if examples.neg[i] == 1 {
                    return Err(KbError::ConflictingExample {
                        line: line_no,
                        name: individual.to_owned(),
                    });
                }
                examples.pos[i] = 1;
            }
            "-" => {
                if examples.pos[i] == 1 {
                    return Err(KbError::ConflictingExample {
                        line: line_no,
                        name: individual.to_owned(),
                    });
                }
                examples.neg[i] = 1;
            }
            other => return Err(syntax(line_no, format!("expected `+` or `-`, got `{other}`"))),
        }
    }

    Ok(KnowledgeBase {
        num_individuals,
        concepts,
        roles,
        numeric_roles,
        string_roles,
        string_values,
        examples,
        names,
    })
}

fn declare(table: &mut NameTable, name: &str, line_no: usize) -> Result<(), KbError> {
    if !valid_name(name) {
        return Err(syntax(line_no, format!("invalid name `{name}`")));
    }
    if table.declare(name).is_none() {
        return Err(KbError::DuplicateDeclaration { line: line_no, name: name.to_owned() });
    }
    Ok(())
}

fn resolve(table: &NameTable, name: &str, kind: &'static str, line_no: usize) -> Result<u32, KbError> {
    table.id(name).ok_or_else(|| KbError::UndeclaredEntity {
        line: line_no,
        name: name.to_owned(),
        kind,
    })
}

/// Splits one whitespace-delimited token off the front.
fn split_token(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    if s.is_empty() {
        return None;
    }
    let end = s.find(char::is_whitespace).unwrap_or(s.len());
    Some((&s[..end], &s[end..]))
}

/// Parses a double-quoted string with `\"` and `\\` escapes; rejects
/// trailing junk after the closing quote.
fn parse_quoted(s: &str, line_no: usize) -> Result<String, KbError> {
    let s = s.trim_start();
    let mut chars = s.chars();
    if chars.next() != Some('"') {
        return Err(syntax(line_no, "expected a double-quoted string value"));
    }
    let mut out = String::new();
    loop {
        match chars.next() {
            Some('"') => break,
            Some('\\') => match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some(c) => return Err(syntax(line_no, format!("unknown escape `\\{c}`"))),
                None => return Err(syntax(line_no, "unterminated escape")),
            },
            Some(c) => out.push(c),
            None => return Err(syntax(line_no, "unterminated string value")),
        }
    }
    if !chars.as_str().trim().is_empty() {
        return Err(syntax(line_no, "unexpected content after closing quote"));
    }
    Ok(out)
}

fn build_offsets(counts: &[usize]) -> Vec<Segment> {
    let mut offsets = Vec::with_capacity(counts.len());
    let mut start = 0u32;
    for &count in counts {
        let end = start + count as u32;
        offsets.push(Segment { start, end });
        start = end;
    }
    offsets
}

fn build_role_table(mut tagged: Vec<(u32, RoleAssertion)>, num_roles: usize) -> RoleTable {
    tagged.sort_by_key(|(role, a)| (*role, a.subj));
    let mut counts = vec![0usize; num_roles];
    for (role, _) in &tagged {
        counts[*role as usize] += 1;
    }
    RoleTable {
        assertions: tagged.into_iter().map(|(_, a)| a).collect(),
        offsets: build_offsets(&counts),
    }
}

fn build_numeric_table(mut tagged: Vec<(u32, NumericAssertion)>, num_roles: usize) -> NumericRoleTable {
    tagged.sort_by_key(|(role, a)| (*role, a.subj));
    let mut counts = vec![0usize; num_roles];
    for (role, _) in &tagged {
        counts[*role as usize] += 1;
    }
    NumericRoleTable {
        assertions: tagged.into_iter().map(|(_, a)| a).collect(),
        offsets: build_offsets(&counts),
    }
}

fn build_string_table(mut tagged: Vec<(u32, StringAssertion)>, num_roles: usize) -> StringRoleTable {
    tagged.sort_by_key(|(role, a)| (*role, a.subj));
    let mut counts = vec![0usize; num_roles];
    for (role, _) in &tagged {
        counts[*role as usize] += 1;
    }
    StringRoleTable {
        assertions: tagged.into_iter().map(|(_, a)| a).collect(),
        offsets: build_offsets(&counts),
    }
}
