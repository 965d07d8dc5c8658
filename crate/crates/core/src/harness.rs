//! Single-expectation test cases, suite execution and canonical failure
//! signatures.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::lang::{execute, parse, Ast, Call, ErrorKind, SourceProgram, Status, Value};

/// What a test asserts. Exactly one per test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Value(Value),
    Error(ErrorKind),
    Output(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: String,
    pub call: Call,
    pub expect: Expectation,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed tests file: {0}")]
    Malformed(String),
    #[error("test `{0}` carries more than one expectation; split it into single-expectation tests")]
    MultiAssert(String),
    #[error("duplicate test id `{0}`")]
    DuplicateId(String),
}

impl TestCase {
    pub fn new(id: impl Into<String>, call: Call, expect: Expectation) -> Self {
        TestCase {
            id: id.into(),
            call,
            expect,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let expect = match &self.expect {
            Expectation::Value(v) => json!({ "value": v.to_json() }),
            Expectation::Error(k) => json!({ "error": k.to_string() }),
            Expectation::Output(vs) => {
                json!({ "output": vs.iter().map(Value::to_json).collect::<Vec<_>>() })
            }
        };
        json!({
            "id": self.id,
            "call": {
                "fn": self.call.function,
                "args": self.call.args.iter().map(Value::to_json).collect::<Vec<_>>(),
            },
            "expect": expect,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<TestCase, SuiteError> {
        let bad = |m: String| SuiteError::Malformed(m);
        let obj = v
            .as_object()
            .ok_or_else(|| bad(format!("test must be an object, got {v}")))?;
        let id = obj
            .get("id")
            .and_then(|i| i.as_str())
            .ok_or_else(|| bad(format!("test without string id: {v}")))?
            .to_string();
        let call = obj
            .get("call")
            .and_then(|c| c.as_object())
            .ok_or_else(|| bad(format!("test `{id}` has no call object")))?;
        let function = call
            .get("fn")
            .and_then(|f| f.as_str())
            .ok_or_else(|| bad(format!("test `{id}` call has no fn")))?
            .to_string();
        let args = call
            .get("args")
            .and_then(|a| a.as_array())
            .ok_or_else(|| bad(format!("test `{id}` call has no args array")))?
            .iter()
            .map(Value::from_json)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("test `{id}`: {e}")))?;
        let expect = match obj.get("expect") {
            Some(serde_json::Value::Array(items)) if items.len() > 1 => {
                return Err(SuiteError::MultiAssert(id))
            }
            Some(serde_json::Value::Array(items)) if items.len() == 1 => &items[0],
            Some(e) => e,
            None => return Err(bad(format!("test `{id}` has no expectation"))),
        };
        let expect = expect
            .as_object()
            .ok_or_else(|| bad(format!("test `{id}` expectation must be an object")))?;
        if expect.len() > 1 {
            return Err(SuiteError::MultiAssert(id));
        }
        let Some((tag, payload)) = expect.iter().next() else {
            return Err(bad(format!("test `{id}` has an empty expectation")));
        };
        let expect = match tag.as_str() {
            "value" => Expectation::Value(
                Value::from_json(payload).map_err(|e| bad(format!("test `{id}`: {e}")))?,
            ),
            "error" => Expectation::Error(
                serde_json::from_value(payload.clone())
                    .map_err(|e| bad(format!("test `{id}`: unknown error kind: {e}")))?,
            ),
            "output" => Expectation::Output(
                payload
                    .as_array()
                    .ok_or_else(|| bad(format!("test `{id}`: output must be an array")))?
                    .iter()
                    .map(Value::from_json)
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad(format!("test `{id}`: {e}")))?,
            ),
            other => return Err(bad(format!("test `{id}`: unknown expectation `{other}`"))),
        };
        Ok(TestCase {
            id,
            call: Call { function, args },
            expect,
        })
    }
}

/// An ordered collection of uniquely named tests. Order is the manifest order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSuite {
    tests: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(tests: Vec<TestCase>) -> Result<Self, SuiteError> {
        let mut seen = HashSet::new();
        for t in &tests {
            if !seen.insert(t.id.as_str()) {
                return Err(SuiteError::DuplicateId(t.id.clone()));
            }
        }
        Ok(TestSuite { tests })
    }

    pub fn tests(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tests.iter().map(|t| t.id.as_str())
    }

    /// The tests whose ids satisfy `keep`, in suite order.
    pub fn filtered(&self, mut keep: impl FnMut(&TestCase) -> bool) -> TestSuite {
        TestSuite {
            tests: self.tests.iter().filter(|t| keep(t)).cloned().collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.tests.iter().map(TestCase::to_json).collect())
    }

    pub fn from_json(v: &serde_json::Value) -> Result<TestSuite, SuiteError> {
        let items = v
            .as_array()
            .ok_or_else(|| SuiteError::Malformed("tests file must be a JSON array".into()))?;
        TestSuite::new(
            items
                .iter()
                .map(TestCase::from_json)
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn read(path: &Path) -> Result<TestSuite, SuiteError> {
        let text = fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| SuiteError::Malformed(e.to_string()))?;
        TestSuite::from_json(&v)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("json");
        fs::write(path, text + "\n")
    }
}

/// An observed or expected behaviour, compared structurally.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observation {
    Value(Value),
    Error(ErrorKind),
    Output(Vec<Value>),
}

impl From<&Expectation> for Observation {
    fn from(e: &Expectation) -> Self {
        match e {
            Expectation::Value(v) => Observation::Value(v.clone()),
            Expectation::Error(k) => Observation::Error(*k),
            Expectation::Output(o) => Observation::Output(o.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeClass {
    Pass,
    Fail {
        expected: Observation,
        actual: Observation,
    },
    Errored {
        kind: ErrorKind,
        /// `None` when the entry call itself could not start.
        line: Option<usize>,
        message: String,
    },
    Unbuildable,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub class: OutcomeClass,
    pub covered: BTreeSet<usize>,
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        self.class == OutcomeClass::Pass
    }

    fn bare(class: OutcomeClass) -> Self {
        Outcome {
            class,
            covered: BTreeSet::new(),
        }
    }
}

/// Runs one test against an already parsed program.
pub fn run_test_ast(ast: &Ast, test: &TestCase, budget: u64) -> Outcome {
    let result = match execute(ast, &test.call, budget, None) {
        Ok(r) => r,
        Err(e) => {
            return Outcome::bare(match &test.expect {
                Expectation::Error(k) if *k == e.kind() => OutcomeClass::Pass,
                _ => OutcomeClass::Errored {
                    kind: e.kind(),
                    line: None,
                    message: e.to_string(),
                },
            })
        }
    };
    let class = match (&test.expect, result.status) {
        (_, Status::StepBudgetExceeded) => OutcomeClass::BudgetExceeded,
        (Expectation::Error(k), Status::RuntimeError(e)) if *k == e.kind => OutcomeClass::Pass,
        (_, Status::RuntimeError(e)) => OutcomeClass::Errored {
            kind: e.kind,
            line: Some(e.line),
            message: e.message,
        },
        (Expectation::Value(want), Status::Completed(got)) => {
            if *want == got {
                OutcomeClass::Pass
            } else {
                OutcomeClass::Fail {
                    expected: Observation::Value(want.clone()),
                    actual: Observation::Value(got),
                }
            }
        }
        (Expectation::Output(want), Status::Completed(_)) => {
            if *want == result.output {
                OutcomeClass::Pass
            } else {
                OutcomeClass::Fail {
                    expected: Observation::Output(want.clone()),
                    actual: Observation::Output(result.output),
                }
            }
        }
        (Expectation::Error(k), Status::Completed(got)) => OutcomeClass::Fail {
            expected: Observation::Error(*k),
            actual: Observation::Value(got),
        },
    };
    Outcome {
        class,
        covered: result.covered,
    }
}

/// Runs one test. A program that does not parse yields `Unbuildable`.
pub fn run_test(program: &SourceProgram, test: &TestCase, budget: u64) -> Outcome {
    match parse(program) {
        Ok(ast) => run_test_ast(&ast, test, budget),
        Err(_) => Outcome::bare(OutcomeClass::Unbuildable),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub outcomes: BTreeMap<String, Outcome>,
    /// Suite order.
    pub passing: Vec<String>,
    /// Suite order. Every non-`Pass` outcome counts as failing.
    pub failing: Vec<String>,
}

impl SuiteResult {
    pub fn is_failing(&self, id: &str) -> bool {
        self.outcomes.get(id).is_some_and(|o| !o.is_pass())
    }
}

/// Runs every test independently. Tests may execute in parallel; the result
/// equals the sequential one.
pub fn run_suite(program: &SourceProgram, suite: &TestSuite, budget: u64) -> SuiteResult {
    let outcomes: Vec<Outcome> = match parse(program) {
        Ok(ast) => suite
            .tests()
            .par_iter()
            .map(|t| run_test_ast(&ast, t, budget))
            .collect(),
        Err(_) => suite
            .tests()
            .iter()
            .map(|_| Outcome::bare(OutcomeClass::Unbuildable))
            .collect(),
    };
    let mut result = SuiteResult {
        outcomes: BTreeMap::new(),
        passing: Vec::new(),
        failing: Vec::new(),
    };
    for (t, o) in suite.tests().iter().zip(outcomes) {
        if o.is_pass() {
            result.passing.push(t.id.clone());
        } else {
            result.failing.push(t.id.clone());
        }
        result.outcomes.insert(t.id.clone(), o);
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutcomeTag {
    Pass,
    Fail,
    Errored,
    Unbuildable,
    BudgetExceeded,
}

/// Canonical, comparable form of an outcome. Printed text, including error
/// messages, is never part of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSignature {
    pub test_id: String,
    pub class: OutcomeTag,
    pub error_kind: Option<ErrorKind>,
    pub error_line: Option<usize>,
    pub expected: Option<Observation>,
    pub actual: Option<Observation>,
}

impl FailureSignature {
    /// Rewrites the error line through `to_original`, for signatures taken on
    /// a reduced program.
    pub fn remapped(mut self, to_original: impl Fn(usize) -> Option<usize>) -> Self {
        self.error_line = self.error_line.and_then(to_original);
        self
    }
}

pub fn signature(test_id: &str, outcome: &Outcome) -> FailureSignature {
    let mut sig = FailureSignature {
        test_id: test_id.to_string(),
        class: OutcomeTag::Pass,
        error_kind: None,
        error_line: None,
        expected: None,
        actual: None,
    };
    match &outcome.class {
        OutcomeClass::Pass => {}
        OutcomeClass::Fail { expected, actual } => {
            sig.class = OutcomeTag::Fail;
            sig.expected = Some(expected.clone());
            sig.actual = Some(actual.clone());
        }
        OutcomeClass::Errored { kind, line, .. } => {
            sig.class = OutcomeTag::Errored;
            sig.error_kind = Some(*kind);
            sig.error_line = *line;
        }
        OutcomeClass::Unbuildable => sig.class = OutcomeTag::Unbuildable,
        OutcomeClass::BudgetExceeded => sig.class = OutcomeTag::BudgetExceeded,
    }
    sig
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add_program() -> SourceProgram {
        SourceProgram::new("add", ["fn add(a, b)", "return a + b", "end"])
    }

    fn add_test(expect: Expectation) -> TestCase {
        TestCase::new("t", Call::new("add", [Value::Int(2), Value::Int(2)]), expect)
    }

    #[test]
    fn pass_and_fail() {
        let p = add_program();
        let o = run_test(&p, &add_test(Expectation::Value(Value::Int(4))), 1000);
        assert_eq!(o.class, OutcomeClass::Pass);
        assert_eq!(o.covered, BTreeSet::from([2]));
        let o = run_test(&p, &add_test(Expectation::Value(Value::Int(5))), 1000);
        assert_eq!(
            o.class,
            OutcomeClass::Fail {
                expected: Observation::Value(Value::Int(5)),
                actual: Observation::Value(Value::Int(4)),
            }
        );
    }

    #[test]
    fn expected_error_passes() {
        let p = SourceProgram::new("div", ["fn div(a, b)", "return a / b", "end"]);
        let t = TestCase::new(
            "d",
            Call::new("div", [Value::Int(1), Value::Int(0)]),
            Expectation::Error(ErrorKind::DivByZero),
        );
        assert!(run_test(&p, &t, 100).is_pass());
        let t = TestCase::new(
            "d",
            Call::new("div", [Value::Int(1), Value::Int(1)]),
            Expectation::Error(ErrorKind::DivByZero),
        );
        assert!(matches!(run_test(&p, &t, 100).class, OutcomeClass::Fail { .. }));
    }

    #[test]
    fn missing_entry_function_is_errored_without_line() {
        let p = add_program();
        let t = TestCase::new("g", Call::new("gone", []), Expectation::Value(Value::Int(0)));
        let o = run_test(&p, &t, 100);
        assert!(matches!(
            o.class,
            OutcomeClass::Errored {
                kind: ErrorKind::UndefinedVariable,
                line: None,
                ..
            }
        ));
    }

    #[test]
    fn unparseable_program_fails_every_test() {
        let p = SourceProgram::new("bad", ["fn add(a, b)", "return a + b"]);
        let suite = TestSuite::new(vec![
            add_test(Expectation::Value(Value::Int(4))),
            TestCase::new("u", Call::new("add", []), Expectation::Value(Value::Int(0))),
        ])
        .unwrap();
        let r = run_suite(&p, &suite, 100);
        assert!(r.passing.is_empty());
        assert_eq!(r.failing, vec!["t", "u"]);
        assert!(r
            .outcomes
            .values()
            .all(|o| o.class == OutcomeClass::Unbuildable));
    }

    #[test]
    fn empty_suite_has_empty_partitions() {
        let r = run_suite(&add_program(), &TestSuite::default(), 100);
        assert!(r.passing.is_empty() && r.failing.is_empty() && r.outcomes.is_empty());
    }

    #[test]
    fn signatures_ignore_messages() {
        let a = Outcome::bare(OutcomeClass::Errored {
            kind: ErrorKind::IndexOutOfBounds,
            line: Some(9),
            message: "index 3 out of bounds".into(),
        });
        let b = Outcome::bare(OutcomeClass::Errored {
            kind: ErrorKind::IndexOutOfBounds,
            line: Some(9),
            message: "something else".into(),
        });
        let sa = signature("t2", &a);
        assert_eq!(sa, signature("t2", &b));
        assert_eq!(sa.class, OutcomeTag::Errored);
        assert_eq!(sa.error_kind, Some(ErrorKind::IndexOutOfBounds));
        assert_eq!(sa.error_line, Some(9));
        let pass = signature("t1", &Outcome::bare(OutcomeClass::Pass));
        assert_eq!(pass.class, OutcomeTag::Pass);
        assert_eq!(pass.error_kind, None);
    }

    #[test]
    fn multi_expectation_tests_are_rejected() {
        let v = json!([{ "id": "x", "call": {"fn": "f", "args": []},
                         "expect": {"value": {"int": 1}, "error": "DivByZero"} }]);
        assert!(matches!(TestSuite::from_json(&v), Err(SuiteError::MultiAssert(id)) if id == "x"));
        let v = json!([{ "id": "x", "call": {"fn": "f", "args": []},
                         "expect": [{"value": {"int": 1}}, {"value": {"int": 2}}] }]);
        assert!(matches!(TestSuite::from_json(&v), Err(SuiteError::MultiAssert(_))));
        let v = json!([
            { "id": "x", "call": {"fn": "f", "args": []}, "expect": {"value": {"int": 1}} },
            { "id": "x", "call": {"fn": "f", "args": []}, "expect": {"value": {"int": 1}} }
        ]);
        assert!(matches!(TestSuite::from_json(&v), Err(SuiteError::DuplicateId(_))));
    }

    #[test]
    fn tests_file_round_trip() {
        let suite = TestSuite::new(vec![
            add_test(Expectation::Value(Value::Float(f64::NEG_INFINITY))),
            TestCase::new("e", Call::new("f", []), Expectation::Error(ErrorKind::TypeError)),
            TestCase::new(
                "o",
                Call::new("f", [Value::Array(vec![Value::Str("s".into())])]),
                Expectation::Output(vec![Value::Bool(true)]),
            ),
        ])
        .unwrap();
        let back = TestSuite::from_json(&suite.to_json()).unwrap();
        assert_eq!(back, suite);
    }
}
