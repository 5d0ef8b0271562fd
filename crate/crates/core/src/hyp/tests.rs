use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plan::fresh_rows_plan;
use super::*;
use crate::kb::{load_kb, KnowledgeBase};
use crate::ops::ExecutionStrategy;

fn family_kb() -> KnowledgeBase {
    load_kb(
        "#concepts\nPerson\nMale\nDoctor\nRich\n\
         #roles\nhasChild\n\
         #individuals\na\nb\nc\nd\ne\n\
         #concept-assertions\nPerson a\nPerson b\nPerson c\nMale b\nDoctor c\nDoctor d\nRich c\n\
         #role-assertions\nhasChild a c\nhasChild a d\nhasChild b e\n\
         #examples\n+ a\n- b\n+ c\n",
    )
    .unwrap()
}

#[test]
fn parse_inlines_atomic_operands() {
    let kb = family_kb();
    let hyp = Hypothesis::parse("(AND Person (NOT Male))", &kb).unwrap();
    assert_eq!(hyp.nodes().len(), 1);
    match &hyp.nodes()[0].kind {
        NodeKind::Conjunction { operands } => {
            assert_eq!(
                operands.as_slice(),
                &[
                    BoolOperand { source: RowSource::Concept(crate::kb::ConceptId(0)), negated: false },
                    BoolOperand { source: RowSource::Concept(crate::kb::ConceptId(1)), negated: true },
                ]
            );
        }
        other => panic!("expected a conjunction, got {other:?}"),
    }
}

#[test]
fn parse_flattens_nested_expressions_post_order() {
    let kb = family_kb();
    let hyp = Hypothesis::parse("(SOME hasChild (AND Doctor Rich))", &kb).unwrap();
    assert_eq!(hyp.nodes().len(), 2);
    assert!(matches!(hyp.nodes()[0].kind, NodeKind::Conjunction { .. }));
    match &hyp.nodes()[1].kind {
        NodeKind::ExistsRole { role, inverse, filler } => {
            assert_eq!(role.0, 0);
            assert!(!inverse);
            assert_eq!(*filler, RowSource::Node(0));
        }
        other => panic!("expected an existential restriction, got {other:?}"),
    }
}

#[test]
fn parse_normalizes_atomic_hypotheses() {
    let kb = family_kb();
    let hyp = Hypothesis::parse("Person", &kb).unwrap();
    assert_eq!(hyp.nodes().len(), 1);
    match &hyp.nodes()[0].kind {
        NodeKind::Conjunction { operands } => {
            assert_eq!(operands.len(), 1);
            assert!(!operands[0].negated);
        }
        other => panic!("expected a conjunction, got {other:?}"),
    }
}

#[test]
fn parse_errors() {
    let kb = family_kb();
    assert!(matches!(
        Hypothesis::parse("(AND Person", &kb),
        Err(HypothesisError::Syntax { .. })
    ));
    assert!(matches!(
        Hypothesis::parse("(SOME hasChild Nobody)", &kb),
        Err(HypothesisError::UnknownName { kind: "concept", .. })
    ));
    assert!(matches!(
        Hypothesis::parse("(AND Person (NOT (AND Male Doctor)))", &kb),
        Err(HypothesisError::NegatedCompound { .. })
    ));
    assert!(matches!(
        Hypothesis::parse("(MIN -1 hasChild Doctor)", &kb),
        Err(HypothesisError::NegativeCardinality { value: -1, .. })
    ));
    assert!(matches!(
        Hypothesis::parse("Person Male", &kb),
        Err(HypothesisError::Syntax { .. })
    ));
    assert!(matches!(
        Hypothesis::parse("(DSOME hasChild >= 1)", &kb),
        Err(HypothesisError::UnknownName { kind: "numeric role", .. })
    ));
}

#[test]
fn parse_inverse_roles() {
    let kb = family_kb();
    let hyp = Hypothesis::parse("(SOME (INV hasChild) Person)", &kb).unwrap();
    match &hyp.nodes()[0].kind {
        NodeKind::ExistsRole { inverse, .. } => assert!(inverse),
        other => panic!("unexpected node {other:?}"),
    }
}

#[test]
fn plan_single_node() {
    let kb = family_kb();
    let hyp = Hypothesis::parse("Person", &kb).unwrap();
    let plan = plan(&hyp);
    assert_eq!(plan.order(), &[0]);
    assert_eq!(plan.peak_rows(), 1);
}

#[test]
fn plan_reuses_rows() {
    let kb = family_kb();
    let hyp = Hypothesis::parse("(AND (SOME hasChild Doctor) (SOME hasChild Rich))", &kb).unwrap();
    assert_eq!(hyp.nodes().len(), 3);
    let two_fillers = plan(&hyp);
    assert_eq!(two_fillers.order().len(), 3);
    assert!(two_fillers.peak_rows() <= 3);

    // A deep chain needs only two rows under last-use reuse.
    let chain = "(SOME hasChild (SOME hasChild (SOME hasChild (SOME hasChild (SOME hasChild Doctor)))))";
    let hyp = Hypothesis::parse(chain, &kb).unwrap();
    assert_eq!(hyp.nodes().len(), 5);
    let deep_chain = plan(&hyp);
    assert_eq!(deep_chain.peak_rows(), 2);
}

/// Replays a plan and checks that every input a node reads is the value
/// most recently produced by the node it references.
fn assert_plan_valid(hyp: &Hypothesis, plan: &EvaluationPlan) {
    let mut slot_contents: Vec<Option<u32>> = vec![None; plan.peak_rows()];
    for &index in plan.order() {
        let node = &hyp.nodes()[index as usize];
        for input in node.kind.node_inputs() {
            let slot = plan.row_of_node(input) as usize;
            assert_eq!(
                slot_contents[slot],
                Some(input),
                "node {index} reads node {input}, but its slot was overwritten"
            );
        }
        slot_contents[plan.row_of_node(index) as usize] = Some(index);
    }
}

#[test]
fn plans_are_valid_for_random_hypotheses() {
    let kb = synth_kb();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let text = random_expr(&mut rng, 0);
        let hyp = Hypothesis::parse(&text, &kb).expect(&text);
        let greedy = plan(&hyp);
        assert_plan_valid(&hyp, &greedy);
        assert_plan_valid(&hyp, &fresh_rows_plan(&hyp));
    }
}

#[test]
fn row_reuse_matches_fresh_rows() {
    let kb = synth_kb();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let text = random_expr(&mut rng, 0);
        let hyp = Hypothesis::parse(&text, &kb).unwrap();
        let reused = execute_plan(&plan(&hyp), &hyp, &kb, ExecutionStrategy::SequentialScalar).unwrap();
        let fresh = execute_plan(&fresh_rows_plan(&hyp), &hyp, &kb, ExecutionStrategy::SequentialScalar).unwrap();
        assert_eq!(reused, fresh, "{text}");
    }
}

#[test]
fn execute_examples() {
    let kb = load_kb(
        "#concepts\nPerson\n#individuals\na\nb\nc\n#concept-assertions\nPerson a\nPerson c\n",
    )
    .unwrap();
    let hyp = Hypothesis::parse("Person", &kb).unwrap();
    let row = execute_plan(&plan(&hyp), &hyp, &kb, ExecutionStrategy::SequentialScalar).unwrap();
    assert_eq!(row.as_slice(), &[1, 0, 1]);

    for strategy in ExecutionStrategy::ALL {
        let contradiction = Hypothesis::parse("(AND Person (NOT Person))", &kb).unwrap();
        let row = execute_plan(&plan(&contradiction), &contradiction, &kb, strategy).unwrap();
        assert_eq!(row.as_slice(), &[0, 0, 0]);

        let tautology = Hypothesis::parse("(OR Person (NOT Person))", &kb).unwrap();
        let row = execute_plan(&plan(&tautology), &tautology, &kb, strategy).unwrap();
        assert_eq!(row.as_slice(), &[1, 1, 1]);
    }
}

#[test]
fn count_coverage_examples() {
    let kb = load_kb("#individuals\na\nb\nc\n#examples\n+ a\n- b\n+ c\n").unwrap();
    for strategy in ExecutionStrategy::ALL {
        let result = count_coverage(&[1, 1, 0], &kb, strategy).unwrap();
        assert_eq!(result, CoverageResult { pos: 1, neg: 1 });

        let empty = count_coverage(&[0, 0, 0], &kb, strategy).unwrap();
        assert_eq!(empty, CoverageResult { pos: 0, neg: 0 });

        let full = count_coverage(&[1, 1, 1], &kb, strategy).unwrap();
        assert_eq!(full, CoverageResult { pos: 2, neg: 1 });
    }
    assert!(matches!(
        count_coverage(&[1, 1], &kb, ExecutionStrategy::SequentialScalar),
        Err(HypothesisError::RowLength { expected: 3, got: 2 })
    ));
}

#[test]
fn evaluate_composes() {
    let kb = family_kb();
    // hasChild: a->{c,d}, b->{e}; Doctor = {c,d}. SOME hasChild Doctor
    // holds for a only; a is a positive example.
    for strategy in ExecutionStrategy::ALL {
        let result = evaluate("(SOME hasChild Doctor)", &kb, strategy).unwrap();
        assert_eq!(result, CoverageResult { pos: 1, neg: 0 });
    }

    // Every parent of doctors has at least two of them, so MIN 2 and
    // SOME coincide.
    let min2 = evaluate("(MIN 2 hasChild Doctor)", &kb, ExecutionStrategy::SequentialScalar).unwrap();
    let some = evaluate("(SOME hasChild Doctor)", &kb, ExecutionStrategy::SequentialScalar).unwrap();
    assert_eq!(min2, some);
}

#[test]
fn evaluate_on_empty_kb() {
    let kb = load_kb("#concepts\nPerson\n#roles\nhasChild\n").unwrap();
    let result = evaluate("(SOME hasChild Person)", &kb, ExecutionStrategy::SequentialScalar).unwrap();
    assert_eq!(result, CoverageResult { pos: 0, neg: 0 });
}

#[test]
fn evaluate_is_strategy_independent() {
    let kb = synth_kb();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..60 {
        let text = random_expr(&mut rng, 0);
        let baseline = evaluate(&text, &kb, ExecutionStrategy::SequentialScalar).unwrap();
        for strategy in ExecutionStrategy::ALL {
            assert_eq!(baseline, evaluate(&text, &kb, strategy).unwrap(), "{text}");
        }
    }
}

#[test]
fn parallel_reductions_match_sequential_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for &len in &[0usize, 1, 31, 32, 33, 1024, 1 << 20] {
        let mut doc = String::from("#individuals\n");
        for i in 0..len {
            doc.push_str(&format!("i{i}\n"));
        }
        if len > 0 {
            doc.push_str("#examples\n");
            for i in 0..len {
                match rng.gen_range(0..3) {
                    0 => doc.push_str(&format!("+ i{i}\n")),
                    1 => doc.push_str(&format!("- i{i}\n")),
                    _ => {}
                }
            }
        }
        let kb = load_kb(&doc).unwrap();
        let row: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=1)).collect();
        let sequential = count_coverage(&row, &kb, ExecutionStrategy::SequentialScalar).unwrap();
        for strategy in [
            ExecutionStrategy::ParallelScalar,
            ExecutionStrategy::ParallelVector,
            ExecutionStrategy::EmulatedDeviceParallel,
        ] {
            assert_eq!(sequential, count_coverage(&row, &kb, strategy).unwrap(), "len {len}");
        }
    }
}

/// KB with every entity kind for the random generators.
fn synth_kb() -> KnowledgeBase {
    let mut doc = String::from(
        "#concepts\nA\nB\nC\n#roles\nr\ns\n#numeric-roles\nage\n#string-roles\nname\n#individuals\n",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 37;
    for i in 0..n {
        doc.push_str(&format!("i{i}\n"));
    }
    doc.push_str("#concept-assertions\n");
    for c in ["A", "B", "C"] {
        for i in 0..n {
            if rng.gen_bool(0.4) {
                doc.push_str(&format!("{c} i{i}\n"));
            }
        }
    }
    doc.push_str("#role-assertions\n");
    for r in ["r", "s"] {
        for _ in 0..50 {
            doc.push_str(&format!("{r} i{} i{}\n", rng.gen_range(0..n), rng.gen_range(0..n)));
        }
    }
    doc.push_str("#numeric-assertions\n");
    for _ in 0..30 {
        doc.push_str(&format!("age i{} {}\n", rng.gen_range(0..n), rng.gen_range(0..5)));
    }
    doc.push_str("#string-assertions\n");
    for _ in 0..30 {
        let v = ["alpha", "beta", "alphabet"][rng.gen_range(0..3)];
        doc.push_str(&format!("name i{} \"{v}\"\n", rng.gen_range(0..n)));
    }
    doc.push_str("#examples\n");
    for i in 0..n {
        match rng.gen_range(0..3) {
            0 => doc.push_str(&format!("+ i{i}\n")),
            1 => doc.push_str(&format!("- i{i}\n")),
            _ => {}
        }
    }
    load_kb(&doc).unwrap()
}

/// Random hypothesis text covering every operator kind.
fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let concept = |rng: &mut ChaCha8Rng| ["A", "B", "C"][rng.gen_range(0..3)];
    let role = |rng: &mut ChaCha8Rng| {
        let name = ["r", "s"][rng.gen_range(0..2)];
        if rng.gen_bool(0.3) {
            format!("(INV {name})")
        } else {
            name.to_owned()
        }
    };
    let pick = if depth >= 3 { rng.gen_range(0..2) } else { rng.gen_range(0..8) };
    match pick {
        0 => concept(rng).to_owned(),
        1 => {
            let cmp = [">=", "==", "<="][rng.gen_range(0..3)];
            format!("(DSOME age {cmp} {})", rng.gen_range(0..5))
        }
        2 | 3 => {
            let head = if pick == 2 { "AND" } else { "OR" };
            let count = rng.gen_range(1..4);
            let mut parts = Vec::new();
            for _ in 0..count {
                if rng.gen_bool(0.3) {
                    parts.push(format!("(NOT {})", concept(rng)));
                } else {
                    parts.push(random_expr(rng, depth + 1));
                }
            }
            format!("({head} {})", parts.join(" "))
        }
        4 => format!("(SOME {} {})", role(rng), random_expr(rng, depth + 1)),
        5 => format!("(ONLY {} {})", role(rng), random_expr(rng, depth + 1)),
        6 => {
            let kind = ["MIN", "EXACTLY", "MAX"][rng.gen_range(0..3)];
            format!("({kind} {} {} {})", rng.gen_range(0..3), role(rng), random_expr(rng, depth + 1))
        }
        _ => {
            let mode = ["EQUAL", "CONTAIN"][rng.gen_range(0..2)];
            let value = ["alpha", "beta", "alp", "missing"][rng.gen_range(0..4)];
            format!("(SSOME name {mode} \"{value}\")")
        }
    }
}
