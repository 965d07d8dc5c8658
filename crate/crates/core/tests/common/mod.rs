#![allow(dead_code)]

use std::path::PathBuf;

use reducto::harness::{Expectation, TestCase, TestSuite};
use reducto::lang::{Call, SourceProgram, Value};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn int_test(id: &str, f: &str, args: &[i64], want: i64) -> TestCase {
    TestCase::new(
        id,
        Call::new(f, args.iter().map(|a| Value::Int(*a))),
        Expectation::Value(Value::Int(want)),
    )
}

/// Line 8 should read `if c < b`; only t5 fails.
pub fn max3() -> (SourceProgram, TestSuite) {
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
    let t = |id: &str, a, b, c, want| int_test(id, "max3", &[a, b, c], want);
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
