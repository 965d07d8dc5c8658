mod common;

use std::collections::BTreeMap;

use reducto::faultloc::{localize, prune_list, rank};
use reducto::lang::{parse, SourceProgram};
use reducto::repair::{
    applicable_templates, generate_candidates, map_patch_to_original, passes_all, repair,
    scope_at, validate_patch, Edit, RepairCaps, StopReason, TemplateId, ValidationVerdict,
};
use reducto::slicer::{Candidate, SliceMapping};

fn texts(p: &SourceProgram, line: usize, t: TemplateId) -> Vec<String> {
    applicable_templates(p, line)
        .into_iter()
        .filter(|i| i.template == t)
        .map(|i| i.edit.new_text().trim().to_string())
        .collect()
}

#[test]
fn relational_condition_instantiations() {
    let p = SourceProgram::new("r", ["fn f(a, b)", "  if a < b", "    return a", "  end", "  return b", "end"]);
    assert_eq!(
        texts(&p, 2, TemplateId::RelationalOperator),
        ["if a <= b", "if a > b", "if a >= b", "if a == b", "if a != b"]
    );
    assert_eq!(texts(&p, 2, TemplateId::BooleanOperator), ["if not (a < b)"]);
    let all = applicable_templates(&p, 2);
    let order: Vec<usize> = all.iter().map(|i| TemplateId::CATALOG.iter().position(|c| *c == i.template).unwrap()).collect();
    assert!(order.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn return_substitution_uses_scope() {
    let p = SourceProgram::new(
        "s",
        ["fn f(x)", "  # comment", "  let y = x + 1", "  let z = y * 2", "  return x", "end"],
    );
    assert_eq!(scope_at(&parse(&p).unwrap(), &p, 5), ["x", "y", "z"]);
    assert_eq!(texts(&p, 5, TemplateId::ReturnSubstitution), ["return y", "return z"]);
    assert!(applicable_templates(&p, 2).is_empty());
    assert!(applicable_templates(&p, 6).is_empty());
}

#[test]
fn stream_follows_list_order_and_cap() {
    let (p, _) = common::max3();
    let list = rank(&BTreeMap::from([(11, 0.9), (8, 0.5)]));
    let subject = Candidate::identity(&p);
    let all: Vec<_> = generate_candidates(&subject, &list, usize::MAX).collect();
    let first_8 = all.iter().position(|c| c.location == 8).unwrap();
    assert!(all[..first_8].iter().all(|c| c.location == 11));
    assert!(all[first_8..].iter().all(|c| c.location == 8));
    let at_8 = all.len() - first_8;
    assert!(at_8 > 5);
    let single = rank(&BTreeMap::from([(8, 1.0)]));
    assert_eq!(generate_candidates(&subject, &single, 5).count(), 5);
    for c in &all {
        assert_eq!(c.edit.apply(&p, c.location), c.patched);
    }
}

#[test]
fn max3_is_fixed_by_the_first_candidate() {
    let (p, suite) = common::max3();
    let list = localize(&p, &suite, 10_000);
    let subject = Candidate::identity(&p);
    let first = generate_candidates(&subject, &list, 1).next().unwrap();
    assert_eq!(first.template, TemplateId::RelationalOperator);
    assert_eq!(first.location, 8);
    assert_eq!(first.edit, Edit::ReplaceLine("  if c < b".into()));

    let r = repair(&subject, &suite, &["t5".into()], &list, &RepairCaps::default(), 10_000);
    let patch = r.patch.clone().unwrap();
    assert_eq!(patch.location, 8);
    assert_eq!(r.npc, 1);
    assert_eq!(r.nte, 6);
    assert_eq!(r.br, Some(1));
    assert_eq!(r.stop_reason, StopReason::Plausible);
    assert!(passes_all(&patch.patched, &suite, 10_000));
}

#[test]
fn pruned_list_needs_no_more_candidates() {
    let (p, suite) = common::max3();
    let l = rank(&BTreeMap::from([(9, 0.9), (8, 0.5)]));
    let mapping = SliceMapping::from_origin((1..=12).filter(|l| *l != 9).collect());
    let lp = prune_list(&l, &mapping);
    let subject = Candidate::identity(&p);
    let caps = RepairCaps::default();
    let on_l = repair(&subject, &suite, &["t5".into()], &l, &caps, 10_000);
    let on_lp = repair(&subject, &suite, &["t5".into()], &lp, &caps, 10_000);
    assert_eq!(on_l.patch.as_ref().unwrap().location, on_lp.patch.as_ref().unwrap().location);
    assert!(on_lp.npc <= on_l.npc);
    assert_eq!((on_l.npc, on_lp.npc), (5, 1));
    assert_eq!(on_l.br, Some(2));
    assert_eq!(on_lp.br, Some(1));
}

#[test]
fn early_exit_agrees_with_full_runs_and_nte_adds_up() {
    let (p, suite) = common::max3();
    let failing = vec!["t5".to_string()];
    let list = localize(&p, &suite, 10_000);
    let subject = Candidate::identity(&p);
    let mut nte = 0;
    let mut npc = 0;
    let mut found = false;
    for c in generate_candidates(&subject, &list, usize::MAX) {
        let v = validate_patch(&c.patched, &suite, &failing, 10_000);
        assert!(v.tests_executed <= suite.len());
        if v.verdict == ValidationVerdict::Plausible {
            assert_eq!(v.tests_executed, suite.len());
        }
        if v.verdict != ValidationVerdict::Unbuildable {
            assert_eq!(v.verdict == ValidationVerdict::Plausible, passes_all(&c.patched, &suite, 10_000));
        }
        if !found && v.verdict != ValidationVerdict::Unbuildable {
            npc += 1;
            nte += v.tests_executed as u64;
            found = v.verdict == ValidationVerdict::Plausible;
        }
    }
    let r = repair(&subject, &suite, &failing, &list, &RepairCaps::default(), 10_000);
    assert_eq!((r.npc, r.nte), (npc, nte));
    let again = repair(&subject, &suite, &failing, &list, &RepairCaps::default(), 10_000);
    assert_eq!((again.npc, again.nte, again.patch), (r.npc, r.nte, r.patch));
}

#[test]
fn caps_stop_the_search() {
    let (p, suite) = common::max3();
    let list = rank(&BTreeMap::from([(2, 1.0), (11, 0.9), (8, 0.5)]));
    let subject = Candidate::identity(&p);
    let r = repair(
        &subject,
        &suite,
        &["t5".into()],
        &list,
        &RepairCaps { max_candidates: 0, ..RepairCaps::default() },
        10_000,
    );
    assert!(r.patch.is_none());
    assert_eq!(r.npc, 0);
    let r = repair(
        &subject,
        &suite,
        &["t5".into()],
        &list,
        &RepairCaps { max_nte: 3, ..RepairCaps::default() },
        10_000,
    );
    assert_eq!(r.stop_reason, StopReason::MaxNte);
    assert!(r.nte >= 3);
}

#[test]
fn slice_patches_map_back_to_original_lines() {
    let original = SourceProgram::new(
        "o",
        ["fn f(a)", "  let u = 1", "  let v = 2", "  let w = 3", "  let x = a", "  let y = 1", "  let z = 2", "  x = x + 1", "  return x * 2", "end"],
    );
    let mapping = SliceMapping::from_origin(vec![1, 5, 8, 9, 10]);
    let slice = SourceProgram::new("s", mapping.survivors().iter().map(|l| original.line(*l).unwrap().to_string()));
    let subject = Candidate { program: slice, mapping: mapping.clone() };
    let list = rank(&BTreeMap::from([(9, 1.0)]));
    let c = generate_candidates(&subject, &list, 1).next().unwrap();
    assert_eq!(c.location, 9);
    let mapped = map_patch_to_original(&c, &mapping, &original).unwrap();
    assert_eq!(mapped.line(9), Some(c.edit.new_text()));
    assert_eq!(mapped.len(), original.len());

    let id = Candidate::identity(&original);
    let c = generate_candidates(&id, &list, 1).next().unwrap();
    assert_eq!(map_patch_to_original(&c, &id.mapping, &original).unwrap(), c.patched);

    let mut orphan = c.clone();
    orphan.location = 3;
    assert!(map_patch_to_original(&orphan, &mapping, &original).is_err());
}

