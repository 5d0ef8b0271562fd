//! Serializes a knowledge base back to the text document format.

use std::fmt::Write;

use super::KnowledgeBase;

fn escape(value: &str) -> String {
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

pub(super) fn write_document(kb: &KnowledgeBase) -> String {
    let mut doc = String::new();
    let names = &kb.names;

    let section = |doc: &mut String, header: &str, entries: &super::NameTable| {
        if !entries.is_empty() {
            doc.push_str(header);
            doc.push('\n');
            for name in entries.iter() {
                doc.push_str(name);
                doc.push('\n');
            }
        }
    };
    section(&mut doc, "#concepts", &names.concepts);
    section(&mut doc, "#roles", &names.roles);
    section(&mut doc, "#numeric-roles", &names.numeric_roles);
    section(&mut doc, "#string-roles", &names.string_roles);
    section(&mut doc, "#individuals", &names.individuals);

    let ind = |id: u32| names.individuals.name(id).expect("dense individual id");

    let mut wrote_header = false;
    for c in 0..kb.num_concepts() {
        let row = kb.concepts.row(c as u32);
        for (i, &member) in row.iter().enumerate() {
            if member == 1 {
                if !wrote_header {
                    doc.push_str("#concept-assertions\n");
                    wrote_header = true;
                }
                let _ = writeln!(doc, "{} {}", names.concepts.name(c as u32).unwrap(), ind(i as u32));
            }
        }
    }

    if !kb.roles.assertions.is_empty() {
        doc.push_str("#role-assertions\n");
        for (r, seg) in kb.roles.offsets.iter().enumerate() {
            let role = names.roles.name(r as u32).unwrap();
            for a in &kb.roles.assertions[seg.range()] {
                let _ = writeln!(doc, "{} {} {}", role, ind(a.subj), ind(a.obj));
            }
        }
    }

    if !kb.numeric_roles.assertions.is_empty() {
        doc.push_str("#numeric-assertions\n");
        for (r, seg) in kb.numeric_roles.offsets.iter().enumerate() {
            let role = names.numeric_roles.name(r as u32).unwrap();
            for a in &kb.numeric_roles.assertions[seg.range()] {
                let _ = writeln!(doc, "{} {} {}", role, ind(a.subj), a.val);
            }
        }
    }

    if !kb.string_roles.assertions.is_empty() {
        doc.push_str("#string-assertions\n");
        for (r, seg) in kb.string_roles.offsets.iter().enumerate() {
            let role = names.string_roles.name(r as u32).unwrap();
            for a in &kb.string_roles.assertions[seg.range()] {
                let _ = writeln!(doc, "{} {} {}", role, ind(a.subj), escape(kb.string_value(a.val_index)));
            }
        }
    }

    let ex = &kb.examples;
    if ex.pos.iter().chain(ex.neg.iter()).any(|&b| b == 1) {
        doc.push_str("#examples\n");
        for (i, &flag) in ex.pos.iter().enumerate() {
            if flag == 1 {
                let _ = writeln!(doc, "+ {}", ind(i as u32));
            }
        }
        for (i, &flag) in ex.neg.iter().enumerate() {
            if flag == 1 {
                let _ = writeln!(doc, "- {}", ind(i as u32));
            }
        }
    }

    doc
}
