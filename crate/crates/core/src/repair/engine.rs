use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::templates::{instantiate, Edit, TemplateId};
use crate::faultloc::SuspiciousList;
use crate::harness::{run_test_ast, OutcomeClass, TestSuite};
use crate::lang::{parse, Ast, SourceProgram};
use crate::slicer::{Candidate, SliceMapping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCaps {
    pub max_candidates: usize,
    pub max_nte: u64,
    pub wall_clock: Duration,
}

impl Default for RepairCaps {
    fn default() -> Self {
        RepairCaps {
            max_candidates: 2_000,
            max_nte: 500_000,
            wall_clock: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchCandidate {
    pub template: TemplateId,
    /// Original-program line the edit targets.
    pub location: usize,
    pub edit: Edit,
    /// The subject program with the edit applied.
    pub patched: SourceProgram,
}

/// Candidates in list-rank order, then template order at each location.
/// Locations absent from `subject` are skipped. At most `max_candidates`
/// are produced.
pub fn generate_candidates<'a>(
    subject: &'a Candidate,
    list: &'a SuspiciousList,
    max_candidates: usize,
) -> impl Iterator<Item = PatchCandidate> + 'a {
    let ast = parse(&subject.program).ok();
    list.entries
        .iter()
        .filter_map(move |e| subject.mapping.to_slice(e.line).map(|l| (e.line, l)))
        .flat_map(move |(location, line)| {
            let instantiations = match &ast {
                Some(ast) => instantiate(ast, &subject.program, line),
                None => Vec::new(),
            };
            instantiations.into_iter().map(move |inst| PatchCandidate {
                template: inst.template,
                location,
                patched: inst.edit.apply(&subject.program, line),
                edit: inst.edit,
            })
        })
        .take(max_candidates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationVerdict {
    Plausible,
    FailsFailingTest,
    FailsRegression,
    Unbuildable,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationResult {
    pub verdict: ValidationVerdict,
    pub tests_executed: usize,
    pub first_failure: Option<String>,
}

/// Runs the failing tests first (suite order among them), then the rest
/// (suite order), stopping at the first non-pass. Every test run counts.
pub fn validate_patch(
    patched: &SourceProgram,
    suite: &TestSuite,
    failing_ids: &[String],
    budget: u64,
) -> ValidationResult {
    match parse(patched) {
        Ok(ast) => validate_ast(&ast, suite, failing_ids, budget),
        Err(_) => ValidationResult {
            verdict: ValidationVerdict::Unbuildable,
            tests_executed: 0,
            first_failure: None,
        },
    }
}

fn validate_ast(ast: &Ast, suite: &TestSuite, failing_ids: &[String], budget: u64) -> ValidationResult {
    let failing: HashSet<&str> = failing_ids.iter().map(String::as_str).collect();
    let order = suite
        .tests()
        .iter()
        .filter(|t| failing.contains(t.id.as_str()))
        .chain(suite.tests().iter().filter(|t| !failing.contains(t.id.as_str())));
    let mut executed = 0;
    for test in order {
        executed += 1;
        let outcome = run_test_ast(ast, test, budget);
        if outcome.is_pass() {
            continue;
        }
        let verdict = if outcome.class == OutcomeClass::BudgetExceeded {
            ValidationVerdict::BudgetExceeded
        } else if failing.contains(test.id.as_str()) {
            ValidationVerdict::FailsFailingTest
        } else {
            ValidationVerdict::FailsRegression
        };
        return ValidationResult {
            verdict,
            tests_executed: executed,
            first_failure: Some(test.id.clone()),
        };
    }
    ValidationResult {
        verdict: ValidationVerdict::Plausible,
        tests_executed: executed,
        first_failure: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Plausible,
    /// Every candidate of the list was tried.
    Exhausted,
    MaxCandidates,
    MaxNte,
    WallClock,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Plausible => "plausible",
            StopReason::Exhausted => "exhausted",
            StopReason::MaxCandidates => "max_candidates",
            StopReason::MaxNte => "max_nte",
            StopReason::WallClock => "wall_clock",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairResult {
    pub patch: Option<PatchCandidate>,
    /// Candidates that reached validation.
    pub npc: usize,
    /// Test executions across all validations.
    pub nte: u64,
    /// Candidates generated and parsed, including unbuildable ones.
    pub generated: usize,
    pub unbuildable: usize,
    pub elapsed: Duration,
    /// Rank of the patched location in the list used.
    pub br: Option<usize>,
    pub stop_reason: StopReason,
}

impl RepairResult {
    /// Deterministic stand-in for repair time: test executions plus
    /// candidates parsed.
    pub fn cost_proxy(&self) -> u64 {
        self.nte + self.generated as u64
    }

    pub fn patch_or_err(&self) -> Result<&PatchCandidate, RepairError> {
        self.patch.as_ref().ok_or(RepairError::NoPatchFound {
            stop_reason: self.stop_reason,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepairError {
    #[error("no plausible patch found ({stop_reason})")]
    NoPatchFound { stop_reason: StopReason },
    #[error("edit at original line {0} touches code outside the slice")]
    UnmappableEdit(usize),
}

/// Searches the candidate stream for the first plausible patch.
pub fn repair(
    subject: &Candidate,
    suite: &TestSuite,
    failing_ids: &[String],
    list: &SuspiciousList,
    caps: &RepairCaps,
    budget: u64,
) -> RepairResult {
    let start = Instant::now();
    let mut result = RepairResult {
        patch: None,
        npc: 0,
        nte: 0,
        generated: 0,
        unbuildable: 0,
        elapsed: Duration::ZERO,
        br: None,
        stop_reason: StopReason::Exhausted,
    };
    let mut stream = generate_candidates(subject, list, caps.max_candidates);
    loop {
        if result.nte >= caps.max_nte {
            result.stop_reason = StopReason::MaxNte;
            break;
        }
        if start.elapsed() >= caps.wall_clock {
            result.stop_reason = StopReason::WallClock;
            break;
        }
        let Some(candidate) = stream.next() else {
            if result.generated >= caps.max_candidates {
                result.stop_reason = StopReason::MaxCandidates;
            }
            break;
        };
        result.generated += 1;
        let Ok(ast) = parse(&candidate.patched) else {
            result.unbuildable += 1;
            continue;
        };
        result.npc += 1;
        let validation = validate_ast(&ast, suite, failing_ids, budget);
        result.nte += validation.tests_executed as u64;
        if validation.verdict == ValidationVerdict::Plausible {
            result.br = list.rank_of(candidate.location);
            result.patch = Some(candidate);
            result.stop_reason = StopReason::Plausible;
            break;
        }
    }
    result.elapsed = start.elapsed();
    result
}

/// Re-applies a patch found on a slice to the original program.
pub fn map_patch_to_original(
    patch: &PatchCandidate,
    mapping: &SliceMapping,
    original: &SourceProgram,
) -> Result<SourceProgram, RepairError> {
    if mapping.to_slice(patch.location).is_none() || original.line(patch.location).is_none() {
        return Err(RepairError::UnmappableEdit(patch.location));
    }
    Ok(patch.edit.apply(original, patch.location))
}

/// True iff `program` passes every test of `suite`. Runs the whole suite.
pub fn passes_all(program: &SourceProgram, suite: &TestSuite, budget: u64) -> bool {
    crate::harness::run_suite(program, suite, budget).failing.is_empty()
}
