//! Test-suite reduction driven by the slice: passing tests that no longer
//! pass on the reduced program are dropped, failing tests are always kept.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::harness::{run_suite, signature, FailureSignature, TestSuite};
use crate::lang::SourceProgram;
use crate::slicer::SliceMapping;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemovalReason {
    /// The test does not pass on the slice.
    FailsOnSlice,
    /// Diagnostic: none of the lines the test covers on the original survive.
    CoversOnlyDeletedCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub id: String,
    pub reasons: Vec<RemovalReason>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedSuite {
    pub kept: TestSuite,
    pub removed: Vec<Removal>,
}

impl ReducedSuite {
    pub fn log_json(&self) -> serde_json::Value {
        serde_json::json!({ "removed": self.removed })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("slice mapping is inconsistent with the programs: {0}")]
    InvalidSlice(String),
}

/// Keeps every test that fails on `original` and every passing test that
/// still passes on `slice`.
pub fn reduce_suite(
    original: &SourceProgram,
    slice: &SourceProgram,
    mapping: &SliceMapping,
    suite: &TestSuite,
    budget: u64,
) -> Result<ReducedSuite, ReduceError> {
    mapping
        .validate(original, slice)
        .map_err(ReduceError::InvalidSlice)?;
    let on_original = run_suite(original, suite, budget);
    let on_slice = run_suite(slice, suite, budget);
    let survivors = mapping.survivors();
    let mut removed = Vec::new();
    let kept = suite.filtered(|t| {
        if on_original.is_failing(&t.id) || !on_slice.is_failing(&t.id) {
            return true;
        }
        let mut reasons = vec![RemovalReason::FailsOnSlice];
        let covered = &on_original.outcomes[&t.id].covered;
        if covered.is_disjoint(&survivors) {
            reasons.push(RemovalReason::CoversOnlyDeletedCode);
        }
        removed.push(Removal {
            id: t.id.clone(),
            reasons,
        });
        false
    });
    Ok(ReducedSuite { kept, removed })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// A kept failing test no longer reproduces its baseline signature.
    SignatureChanged { id: String },
    /// A kept passing test does not pass on the slice.
    RegressionFails { id: String },
}

/// Re-checks a reduction: failing tests reproduce their baseline signatures
/// (in original line coordinates) and every other kept test passes.
pub fn verify_reduction(
    slice: &SourceProgram,
    mapping: &SliceMapping,
    reduced: &ReducedSuite,
    baseline: &[FailureSignature],
    budget: u64,
) -> Result<(), Vec<Violation>> {
    let result = run_suite(slice, &reduced.kept, budget);
    let failing: BTreeSet<&str> = baseline.iter().map(|s| s.test_id.as_str()).collect();
    let mut violations = Vec::new();
    for test in reduced.kept.tests() {
        let outcome = &result.outcomes[&test.id];
        if failing.contains(test.id.as_str()) {
            let sig = signature(&test.id, outcome).remapped(|l| mapping.to_original(l));
            if !baseline.contains(&sig) {
                violations.push(Violation::SignatureChanged {
                    id: test.id.clone(),
                });
            }
        } else if !outcome.is_pass() {
            violations.push(Violation::RegressionFails {
                id: test.id.clone(),
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
