use std::collections::BTreeSet;

use proptest::prelude::*;
use reducto::harness::{Expectation, TestCase, TestSuite};
use reducto::lang::{execute, parse, Call, SourceProgram, Value, Watch};
use reducto::slicer::{
    build_criterion, candidate_accepts, compute_baseline, minimality_check, orbs_slice, Candidate,
    RejectReason, SliceCriterion, SliceSettings, Verdict,
};

fn settings(delta: usize) -> SliceSettings {
    SliceSettings {
        delta,
        budget: 10_000,
        max_passes: 50,
    }
}

fn trace_criterion(var: &str, line: usize, inputs: &[i64], f: &str) -> SliceCriterion {
    SliceCriterion::VarTrace {
        variable: var.into(),
        line,
        inputs: inputs.iter().map(|a| Call::new(f, [Value::Int(*a)])).collect(),
    }
}

/// Traces of `var` before original line `line`, computed directly; `None`
/// if the deletion is not a valid candidate.
fn observe(p: &SourceProgram, deleted: &BTreeSet<usize>, var: &str, line: usize, inputs: &[i64], f: &str) -> Option<Vec<String>> {
    if deleted.contains(&line) {
        return None;
    }
    let cut = p.without_lines(deleted);
    let ast = parse(&cut).ok()?;
    let shift = deleted.iter().filter(|d| **d < line).count();
    let watch = Watch {
        variable: var.into(),
        line: line - shift,
    };
    Some(
        inputs
            .iter()
            .map(|a| {
                let r = execute(&ast, &Call::new(f, [Value::Int(*a)]), 10_000, Some(&watch)).unwrap();
                format!("{:?}|{}", r.trace, r.status == reducto::lang::Status::StepBudgetExceeded)
            })
            .collect(),
    )
}

const DEAD: [&str; 10] = [
    "fn g(a)",
    "  let x = a + 1",
    "  if a > 100",
    "    x = 0",
    "  end",
    "  if x > 5",
    "    x = x - 1",
    "  end",
    "  return x",
    "end",
];

#[test]
fn dead_branch_is_the_unique_maximal_deletion() {
    let p = SourceProgram::new("dead", DEAD);
    let inputs = [1, 7];
    let base = observe(&p, &BTreeSet::new(), "x", 9, &inputs, "g").unwrap();
    let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
    let accepted: Vec<BTreeSet<usize>> = (0u32..1 << 10)
        .map(|mask| (1..=10).filter(|l| mask & (1 << (l - 1)) != 0).collect::<BTreeSet<_>>())
        .filter(|s| observe(&p, s, "x", 9, &inputs, "g").as_ref() == Some(&base))
        .collect();
    for s in &accepted {
        if !accepted.iter().any(|t| t.len() > s.len() && s.is_subset(t)) {
            maximal.push(s.clone());
        }
    }
    assert_eq!(maximal, vec![BTreeSet::from([3, 4, 5])]);

    let criterion = trace_criterion("x", 9, &inputs, "g");
    let baseline = compute_baseline(&p, &criterion, &settings(3)).unwrap();
    let r = orbs_slice(&p, &criterion, &baseline, &settings(3)).unwrap();
    assert_eq!(r.deleted, vec![3, 4, 5]);
    assert!(r.fixpoint);
    assert_eq!(r.slice.len(), 7);
}

#[test]
fn fully_relevant_program_is_its_own_slice() {
    let p = SourceProgram::new("all", ["fn g(a)", "  let x = a * 2", "  x = x + 1", "  return x", "end"]);
    let criterion = trace_criterion("x", 4, &[3], "g");
    let baseline = compute_baseline(&p, &criterion, &settings(3)).unwrap();
    let r = orbs_slice(&p, &criterion, &baseline, &settings(3)).unwrap();
    assert!(r.deleted.is_empty());
    assert_eq!(r.slice.lines(), p.lines());
}

#[test]
fn jointly_deletable_lines_need_a_wide_window() {
    let p = SourceProgram::new("pair", ["fn h(a)", "  let x = a", "  while false", "  end", "  return x", "end"]);
    let criterion = trace_criterion("x", 5, &[2], "h");
    let baseline = compute_baseline(&p, &criterion, &settings(1)).unwrap();
    let narrow = orbs_slice(&p, &criterion, &baseline, &settings(1)).unwrap();
    assert!(narrow.deleted.is_empty());
    assert!(minimality_check(&narrow.candidate(), &criterion, &baseline, &settings(1)).minimal);
    for delta in 2..=3 {
        let wide = orbs_slice(&p, &criterion, &baseline, &settings(delta)).unwrap();
        assert_eq!(wide.deleted, vec![3, 4]);
    }
}

#[test]
fn criterion_line_is_never_deleted() {
    let p = SourceProgram::new("c", ["fn g(a)", "  let x = a", "  let y = 1", "  return x", "end"]);
    let criterion = trace_criterion("y", 3, &[1], "g");
    let baseline = compute_baseline(&p, &criterion, &settings(3)).unwrap();
    let c = Candidate::identity(&p).without_window(2, 1);
    assert_eq!(
        candidate_accepts(&c, &criterion, &baseline, &settings(3)),
        Verdict::Reject(RejectReason::CriterionLineDeleted)
    );
    let r = orbs_slice(&p, &criterion, &baseline, &settings(3)).unwrap();
    assert!(r.slice.lines().iter().any(|l| l.trim() == "let y = 1"));
}

fn max3() -> (SourceProgram, TestSuite) {
    let p = SourceProgram::new(
        "max3",
        [
            "fn max3(a, b, c)",
            "  if a >= b",
            "    if a >= c",
            "      return a",
            "    end",
            "    return c",
            "  end",
            "  if c > b",
            "    return b",
            "  end",
            "  return c",
            "end",
        ],
    );
    let t = |id: &str, a: i64, b: i64, c: i64, want: i64| {
        TestCase::new(
            id,
            Call::new("max3", [Value::Int(a), Value::Int(b), Value::Int(c)]),
            Expectation::Value(Value::Int(want)),
        )
    };
    let suite = TestSuite::new(vec![
        t("t1", 3, 2, 1, 3),
        t("t2", 3, 1, 5, 5),
        t("t3", 1, 2, 2, 2),
        t("t4", 5, 5, 1, 5),
        t("t5", 1, 3, 2, 3),
        t("t6", 2, 2, 9, 9),
    ])
    .unwrap();
    (p, suite)
}

#[test]
fn max3_criterion_has_one_signature() {
    let (p, suite) = max3();
    let (criterion, baseline) = build_criterion(&p, &suite, 10_000).unwrap();
    match &criterion {
        SliceCriterion::TestSignatures { tests } => {
            assert_eq!(tests.iter().map(|t| t.id.as_str()).collect::<Vec<_>>(), ["t5"])
        }
        other => panic!("unexpected criterion {other:?}"),
    }
    assert_eq!(baseline.signatures().len(), 1);
    let r = orbs_slice(&p, &criterion, &baseline, &settings(3)).unwrap();
    // t5 never enters either `if`, so both blocks go.
    assert_eq!(r.slice.lines().iter().map(|l| l.trim()).collect::<Vec<_>>(), ["fn max3(a, b, c)", "return c", "end"]);
}

// Straight-line statements over x, y, z with an optional guarded block.
fn arb_program() -> impl Strategy<Value = Vec<String>> {
    let stmt = prop_oneof![
        (0usize..3, 0usize..3, 1i64..4).prop_map(|(t, s, k)| {
            let v = ["x", "y", "z"];
            format!("  {} = {} + {}", v[t], v[s], k)
        }),
        (0usize..3, 1i64..4).prop_map(|(t, k)| format!("  {} = a * {}", ["x", "y", "z"][t], k)),
        (0usize..3, 0i64..6, 0usize..3).prop_map(|(c, k, t)| {
            format!("  if {} > {}\n    {} = 0\n  end", ["x", "y", "a"][c], k, ["x", "y", "z"][t])
        }),
    ];
    prop::collection::vec(stmt, 1..6).prop_map(|body| {
        let mut lines = vec!["fn f(a)".to_string(), "  let x = a".into(), "  let y = 1".into(), "  let z = 2".into()];
        for s in body {
            lines.extend(s.split('\n').map(String::from));
        }
        lines.push("  return x".into());
        lines.push("end".into());
        lines
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slices_preserve_traces_and_are_one_minimal(lines in arb_program(), a in 0i64..5, b in 0i64..5) {
        let p = SourceProgram::new("rand", lines);
        let ret = p.len() - 1;
        let inputs = [a, b];
        let criterion = trace_criterion("x", ret, &inputs, "f");
        let baseline = compute_baseline(&p, &criterion, &settings(3)).unwrap();
        let r = orbs_slice(&p, &criterion, &baseline, &settings(3)).unwrap();
        let deleted: BTreeSet<usize> = r.deleted.iter().copied().collect();
        let before = observe(&p, &BTreeSet::new(), "x", ret, &inputs, "f");
        prop_assert_eq!(observe(&p, &deleted, "x", ret, &inputs, "f"), before.clone());

        // brute force: no single surviving line can go
        let mut counterexample = None;
        for line in r.mapping.survivors() {
            let mut more = deleted.clone();
            more.insert(line);
            if observe(&p, &more, "x", ret, &inputs, "f") == before {
                counterexample = Some(r.mapping.to_slice(line).unwrap());
                break;
            }
        }
        let m = minimality_check(&r.candidate(), &criterion, &baseline, &settings(3));
        prop_assert_eq!(m.counterexample, counterexample);
        prop_assert!(m.minimal);
    }

    #[test]
    fn mapping_is_monotone_and_text_preserving(lines in arb_program(), a in 0i64..5) {
        let p = SourceProgram::new("rand", lines);
        let ret = p.len() - 1;
        let criterion = trace_criterion("x", ret, &[a], "f");
        let baseline = compute_baseline(&p, &criterion, &settings(2)).unwrap();
        let r = orbs_slice(&p, &criterion, &baseline, &settings(2)).unwrap();
        prop_assert!(r.mapping.validate(&p, &r.slice).is_ok());
        for (s, o) in r.mapping.pairs() {
            prop_assert_eq!(r.slice.line(s), p.line(o));
        }
        prop_assert_eq!(r.deleted.len() + r.slice.len(), p.len());
    }
}
