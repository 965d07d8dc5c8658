//! Observation-based slicing.
//!
//! Starting from the whole program, windows of one to `delta` consecutive
//! lines are deleted; a deletion is kept when the candidate still parses and
//! every observation at the criterion is unchanged. Passes repeat until one
//! pass keeps nothing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::harness::{run_suite, run_test_ast, signature, FailureSignature, TestCase, TestSuite};
use crate::lang::{
    count_sloc, execute, parse, Ast, Call, ObservationTrace, ParseError, SourceProgram, Status,
    Watch, DEFAULT_STEP_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSettings {
    /// Longest run of consecutive lines deleted in one candidate.
    pub delta: usize,
    /// Step budget for every candidate execution.
    pub budget: u64,
    pub max_passes: usize,
}

impl Default for SliceSettings {
    fn default() -> Self {
        SliceSettings {
            delta: 3,
            budget: DEFAULT_STEP_BUDGET,
            max_passes: 50,
        }
    }
}

/// The behaviour a slice must preserve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceCriterion {
    /// Values of `variable` just before each execution of original `line`,
    /// for every call in `inputs`.
    VarTrace {
        variable: String,
        line: usize,
        inputs: Vec<Call>,
    },
    /// Failure signatures of these tests, in test-id order.
    TestSignatures { tests: Vec<TestCase> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceObservation {
    pub values: ObservationTrace,
    pub exhausted: bool,
}

/// Observations of the unmodified program, one per criterion input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    Traces(Vec<TraceObservation>),
    Signatures(Vec<FailureSignature>),
}

impl Baseline {
    pub fn signatures(&self) -> &[FailureSignature] {
        match self {
            Baseline::Signatures(s) => s,
            Baseline::Traces(_) => &[],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SliceError {
    #[error("the suite has no failing test; there is no behaviour to preserve")]
    NoFailingTests,
    #[error("invalid slicing criterion: {0}")]
    InvalidCriterion(String),
    #[error("program does not parse: {0}")]
    Unbuildable(ParseError),
    #[error("baseline does not match the program's own behaviour")]
    BaselineMismatch,
    #[error("slicing stopped after {} passes without reaching a fixpoint", .partial.passes)]
    PassCapExceeded { partial: Box<SliceResult> },
}

/// Correspondence between slice lines and original lines. Entry `i` is the
/// original line number of slice line `i + 1`; entries strictly increase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceMapping {
    origin: Vec<usize>,
}

impl SliceMapping {
    pub fn identity(len: usize) -> Self {
        SliceMapping {
            origin: (1..=len).collect(),
        }
    }

    pub fn from_origin(origin: Vec<usize>) -> Self {
        SliceMapping { origin }
    }

    /// Builds from `(slice line, original line)` pairs.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self, String> {
        for (i, (s, _)) in pairs.iter().enumerate() {
            if *s != i + 1 {
                return Err(format!("slice line {s} out of sequence at entry {}", i + 1));
            }
        }
        Ok(SliceMapping {
            origin: pairs.iter().map(|(_, o)| *o).collect(),
        })
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.origin.iter().enumerate().map(|(i, o)| (i + 1, *o)).collect()
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    pub fn to_original(&self, slice_line: usize) -> Option<usize> {
        slice_line
            .checked_sub(1)
            .and_then(|i| self.origin.get(i))
            .copied()
    }

    pub fn to_slice(&self, original_line: usize) -> Option<usize> {
        self.origin.binary_search(&original_line).ok().map(|i| i + 1)
    }

    pub fn survivors(&self) -> BTreeSet<usize> {
        self.origin.iter().copied().collect()
    }

    pub fn is_identity_for(&self, len: usize) -> bool {
        self.origin.len() == len && self.origin.iter().enumerate().all(|(i, o)| *o == i + 1)
    }

    /// Checks that `slice` is `original` with exactly the unmapped lines removed.
    pub fn validate(&self, original: &SourceProgram, slice: &SourceProgram) -> Result<(), String> {
        if self.origin.len() != slice.len() {
            return Err(format!(
                "mapping has {} entries but the slice has {} lines",
                self.origin.len(),
                slice.len()
            ));
        }
        let mut prev = 0;
        for (i, &o) in self.origin.iter().enumerate() {
            if o <= prev {
                return Err(format!("mapping not strictly increasing at slice line {}", i + 1));
            }
            prev = o;
            match original.line(o) {
                Some(text) if Some(text) == slice.line(i + 1) => {}
                Some(_) => {
                    return Err(format!(
                        "slice line {} differs from original line {o}",
                        i + 1
                    ))
                }
                None => return Err(format!("original line {o} out of range")),
            }
        }
        Ok(())
    }

    fn without_window(&self, start: usize, width: usize) -> SliceMapping {
        let mut origin = self.origin.clone();
        origin.drain(start..start + width);
        SliceMapping { origin }
    }
}

/// A program together with the original line each of its lines came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub program: SourceProgram,
    pub mapping: SliceMapping,
}

impl Candidate {
    pub fn identity(program: &SourceProgram) -> Self {
        Candidate {
            mapping: SliceMapping::identity(program.len()),
            program: program.clone(),
        }
    }

    /// Deletes `width` lines starting at 0-based index `start`.
    pub fn without_window(&self, start: usize, width: usize) -> Candidate {
        let mut program = self.program.clone();
        program.lines_mut().drain(start..start + width);
        Candidate {
            program,
            mapping: self.mapping.without_window(start, width),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Unbuildable,
    CriterionLineDeleted,
    /// Identifies the first input whose observation changed.
    BehaviorChanged { input: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        *self == Verdict::Accept
    }
}

/// Builds the criterion used by the repair pipeline: the signatures of all
/// tests that fail on `program`, ordered by test id.
pub fn build_criterion(
    program: &SourceProgram,
    suite: &TestSuite,
    budget: u64,
) -> Result<(SliceCriterion, Baseline), SliceError> {
    let result = run_suite(program, suite, budget);
    if result.failing.is_empty() {
        return Err(SliceError::NoFailingTests);
    }
    let mut tests: Vec<TestCase> = result
        .failing
        .iter()
        .filter_map(|id| suite.get(id).cloned())
        .collect();
    tests.sort_by(|a, b| a.id.cmp(&b.id));
    let baseline = Baseline::Signatures(
        tests
            .iter()
            .map(|t| signature(&t.id, &result.outcomes[&t.id]))
            .collect(),
    );
    Ok((SliceCriterion::TestSignatures { tests }, baseline))
}

/// Observes the criterion on the unmodified program.
pub fn compute_baseline(
    program: &SourceProgram,
    criterion: &SliceCriterion,
    settings: &SliceSettings,
) -> Result<Baseline, SliceError> {
    let ast = parse(program).map_err(SliceError::Unbuildable)?;
    match criterion {
        SliceCriterion::VarTrace { line, inputs, .. } => {
            if inputs.is_empty() {
                return Err(SliceError::InvalidCriterion("input set is empty".into()));
            }
            if !ast.executable_lines().contains(line) {
                return Err(SliceError::InvalidCriterion(format!(
                    "line {line} is not an executable statement"
                )));
            }
        }
        SliceCriterion::TestSignatures { tests } => {
            if tests.is_empty() {
                return Err(SliceError::NoFailingTests);
            }
        }
    }
    let candidate = Candidate::identity(program);
    observe(&ast, &candidate.mapping, criterion, settings).map_err(|_| {
        SliceError::InvalidCriterion("criterion line does not exist".into())
    })
}

fn observe(
    ast: &Ast,
    mapping: &SliceMapping,
    criterion: &SliceCriterion,
    settings: &SliceSettings,
) -> Result<Baseline, RejectReason> {
    match criterion {
        SliceCriterion::VarTrace {
            variable,
            line,
            inputs,
        } => {
            let slice_line = mapping
                .to_slice(*line)
                .ok_or(RejectReason::CriterionLineDeleted)?;
            let watch = Watch {
                variable: variable.clone(),
                line: slice_line,
            };
            let traces = inputs
                .iter()
                .map(|call| match execute(ast, call, settings.budget, Some(&watch)) {
                    Ok(r) => TraceObservation {
                        exhausted: r.status == Status::StepBudgetExceeded,
                        values: r.trace,
                    },
                    Err(_) => TraceObservation {
                        values: Vec::new(),
                        exhausted: false,
                    },
                })
                .collect();
            Ok(Baseline::Traces(traces))
        }
        SliceCriterion::TestSignatures { tests } => Ok(Baseline::Signatures(
            tests
                .iter()
                .map(|t| {
                    signature(&t.id, &run_test_ast(ast, t, settings.budget))
                        .remapped(|l| mapping.to_original(l))
                })
                .collect(),
        )),
    }
}

/// Accepts `candidate` iff it parses and reproduces `baseline` exactly.
pub fn candidate_accepts(
    candidate: &Candidate,
    criterion: &SliceCriterion,
    baseline: &Baseline,
    settings: &SliceSettings,
) -> Verdict {
    let Ok(ast) = parse(&candidate.program) else {
        return Verdict::Reject(RejectReason::Unbuildable);
    };
    let observed = match observe(&ast, &candidate.mapping, criterion, settings) {
        Ok(o) => o,
        Err(reason) => return Verdict::Reject(reason),
    };
    let changed = match (&observed, baseline) {
        (Baseline::Traces(got), Baseline::Traces(want)) => first_difference(got, want, |i| {
            match criterion {
                SliceCriterion::VarTrace { inputs, .. } => format!("input {i} ({})", inputs[i].function),
                SliceCriterion::TestSignatures { .. } => format!("input {i}"),
            }
        }),
        (Baseline::Signatures(got), Baseline::Signatures(want)) => {
            first_difference(got, want, |i| want[i].test_id.clone())
        }
        _ => Some("baseline kind does not match criterion".to_string()),
    };
    match changed {
        None => Verdict::Accept,
        Some(input) => Verdict::Reject(RejectReason::BehaviorChanged { input }),
    }
}

fn first_difference<T: PartialEq>(
    got: &[T],
    want: &[T],
    name: impl Fn(usize) -> String,
) -> Option<String> {
    if got.len() != want.len() {
        return Some(name(got.len().min(want.len())));
    }
    got.iter().zip(want).position(|(g, w)| g != w).map(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub orig_sloc: usize,
    pub slice_sloc: usize,
    pub percent: f64,
}

impl SliceStats {
    pub fn new(original: &SourceProgram, slice: &SourceProgram) -> Self {
        let orig_sloc = count_sloc(original);
        let slice_sloc = count_sloc(slice);
        let percent = if orig_sloc == 0 {
            0.0
        } else {
            slice_sloc as f64 / orig_sloc as f64 * 100.0
        };
        SliceStats {
            orig_sloc,
            slice_sloc,
            percent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceResult {
    pub slice: SourceProgram,
    pub mapping: SliceMapping,
    /// Original line numbers removed, ascending.
    pub deleted: Vec<usize>,
    pub stats: SliceStats,
    pub passes: usize,
    pub fixpoint: bool,
}

impl SliceResult {
    fn from_candidate(original: &SourceProgram, c: Candidate, passes: usize, fixpoint: bool) -> Self {
        let survivors = c.mapping.survivors();
        let deleted = (1..=original.len()).filter(|l| !survivors.contains(l)).collect();
        let slice = c.program.with_id(format!("{}.slice", original.id));
        SliceResult {
            stats: SliceStats::new(original, &slice),
            slice,
            mapping: c.mapping,
            deleted,
            passes,
            fixpoint,
        }
    }

    pub fn candidate(&self) -> Candidate {
        Candidate {
            program: self.slice.clone(),
            mapping: self.mapping.clone(),
        }
    }

    /// `{"deleted": [...], "mapping": [[sliceLine, origLine], ...]}`
    pub fn deletion_log_json(&self) -> serde_json::Value {
        serde_json::json!({
            "deleted": self.deleted,
            "mapping": self.mapping.pairs().iter().map(|(s, o)| [s, o]).collect::<Vec<_>>(),
        })
    }

    pub fn stats_json(&self) -> serde_json::Value {
        serde_json::json!({
            "orig_sloc": self.stats.orig_sloc,
            "slice_sloc": self.stats.slice_sloc,
            "percent": self.stats.percent,
        })
    }
}

/// Parses a deletion log written by [`SliceResult::deletion_log_json`].
pub fn mapping_from_deletion_log(v: &serde_json::Value) -> Result<SliceMapping, String> {
    let pairs = v
        .get("mapping")
        .and_then(|m| m.as_array())
        .ok_or("deletion log has no mapping array")?
        .iter()
        .map(|p| {
            let pair = p.as_array().filter(|a| a.len() == 2);
            match pair.map(|a| (a[0].as_u64(), a[1].as_u64())) {
                Some((Some(s), Some(o))) => Ok((s as usize, o as usize)),
                _ => Err(format!("bad mapping entry {p}")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    SliceMapping::from_pairs(&pairs)
}

/// Runs ORBS to a fixpoint.
///
/// Each pass scans the current slice top to bottom. At index `i` it tries
/// windows of width 1, 2, .. `delta` and keeps the first accepted one,
/// then retries at the same index since later lines have shifted up.
pub fn orbs_slice(
    program: &SourceProgram,
    criterion: &SliceCriterion,
    baseline: &Baseline,
    settings: &SliceSettings,
) -> Result<SliceResult, SliceError> {
    let delta = settings.delta.max(1);
    let mut current = Candidate::identity(program);
    if !candidate_accepts(&current, criterion, baseline, settings).is_accept() {
        return Err(SliceError::BaselineMismatch);
    }
    let mut passes = 0;
    while passes < settings.max_passes {
        passes += 1;
        let mut deleted_any = false;
        let mut i = 0;
        while i < current.program.len() {
            let mut accepted = false;
            for width in 1..=delta {
                if i + width > current.program.len() {
                    break;
                }
                let next = current.without_window(i, width);
                if candidate_accepts(&next, criterion, baseline, settings).is_accept() {
                    current = next;
                    accepted = true;
                    deleted_any = true;
                    break;
                }
            }
            if !accepted {
                i += 1;
            }
        }
        if !deleted_any {
            return Ok(SliceResult::from_candidate(program, current, passes, true));
        }
    }
    Err(SliceError::PassCapExceeded {
        partial: Box::new(SliceResult::from_candidate(program, current, passes, false)),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minimality {
    pub minimal: bool,
    /// First slice line (1-based) whose single deletion is accepted.
    pub counterexample: Option<usize>,
}

/// 1-minimality: no single line of `slice` can be deleted.
pub fn minimality_check(
    slice: &Candidate,
    criterion: &SliceCriterion,
    baseline: &Baseline,
    settings: &SliceSettings,
) -> Minimality {
    let counterexample = (0..slice.program.len())
        .find(|&i| candidate_accepts(&slice.without_window(i, 1), criterion, baseline, settings).is_accept())
        .map(|i| i + 1);
    Minimality {
        minimal: counterexample.is_none(),
        counterexample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Expectation;
    use crate::lang::Value;

    fn program(lines: &[&str]) -> SourceProgram {
        SourceProgram::new("p", lines.iter().copied())
    }

    #[test]
    fn mapping_lookups() {
        let m = SliceMapping::from_origin(vec![2, 5, 9]);
        assert_eq!(m.to_original(2), Some(5));
        assert_eq!(m.to_original(4), None);
        assert_eq!(m.to_slice(9), Some(3));
        assert_eq!(m.to_slice(3), None);
        assert_eq!(SliceMapping::from_pairs(&m.pairs()).unwrap(), m);
        assert!(SliceMapping::from_pairs(&[(2, 1)]).is_err());
    }

    #[test]
    fn mapping_validation() {
        let p = program(&["a", "b", "c"]);
        let s = program(&["a", "c"]);
        assert!(SliceMapping::from_origin(vec![1, 3]).validate(&p, &s).is_ok());
        assert!(SliceMapping::from_origin(vec![1, 2]).validate(&p, &s).is_err());
        assert!(SliceMapping::from_origin(vec![3, 1]).validate(&p, &s).is_err());
        assert!(SliceMapping::from_origin(vec![1]).validate(&p, &s).is_err());
    }

    #[test]
    fn no_failing_tests_means_no_criterion() {
        let p = program(&["fn f()", "return 1", "end"]);
        let suite = TestSuite::new(vec![TestCase::new(
            "ok",
            Call::new("f", []),
            Expectation::Value(Value::Int(1)),
        )])
        .unwrap();
        assert!(matches!(
            build_criterion(&p, &suite, 100),
            Err(SliceError::NoFailingTests)
        ));
    }

    #[test]
    fn var_trace_criterion_must_name_an_executable_line() {
        let p = program(&["fn f()", "let x = 1", "return x", "end"]);
        let bad = SliceCriterion::VarTrace {
            variable: "x".into(),
            line: 4,
            inputs: vec![Call::new("f", [])],
        };
        assert!(compute_baseline(&p, &bad, &SliceSettings::default()).is_err());
        let empty = SliceCriterion::VarTrace {
            variable: "x".into(),
            line: 3,
            inputs: vec![],
        };
        assert!(compute_baseline(&p, &empty, &SliceSettings::default()).is_err());
    }

    #[test]
    fn pass_cap_returns_partial_result() {
        let p = program(&["fn f()", "# a", "# b", "let x = 1", "return 2", "end"]);
        let criterion = SliceCriterion::VarTrace {
            variable: "x".into(),
            line: 5,
            inputs: vec![Call::new("f", [])],
        };
        let settings = SliceSettings {
            max_passes: 1,
            ..SliceSettings::default()
        };
        let baseline = compute_baseline(&p, &criterion, &settings).unwrap();
        match orbs_slice(&p, &criterion, &baseline, &settings) {
            Err(SliceError::PassCapExceeded { partial }) => {
                assert!(!partial.fixpoint);
                assert_eq!(partial.passes, 1);
                assert_eq!(partial.deleted, vec![2, 3]);
            }
            other => panic!("{other:?}"),
        }
    }
}
