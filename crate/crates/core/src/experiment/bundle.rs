use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::{run_suite, SuiteError, TestSuite};
use crate::lang::{parse, SourceProgram, DEFAULT_STEP_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bug_line: usize,
    pub patched_text: String,
}

#[derive(Debug, Clone, Deserialize)]
struct Manifest {
    program: String,
    tests: String,
    #[serde(default)]
    ground_truth: Option<GroundTruth>,
}

/// One buggy program with its test suite.
#[derive(Debug, Clone)]
pub struct BugBundle {
    pub name: String,
    pub dir: PathBuf,
    pub program: SourceProgram,
    pub suite: TestSuite,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {reason}")]
    Manifest { path: String, reason: String },
    #[error("bundle `{0}` has no failing test")]
    NoFailingTests(String),
    #[error("test `{id}` has more than one expectation; split it into single-expectation tests")]
    MultiAssertTest { id: String },
    #[error("{path}: {source}")]
    Suite { path: String, source: SuiteError },
}

fn manifest_err(path: &Path, reason: impl ToString) -> BundleError {
    BundleError::Manifest {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Loads and validates `<dir>/manifest.json` and the files it names.
pub fn load_bundle(dir: &Path) -> Result<BugBundle, BundleError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| manifest_err(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| manifest_err(&manifest_path, e))?;
    let program_path = dir.join(&manifest.program);
    let program = SourceProgram::read(&program_path).map_err(|e| manifest_err(&program_path, e))?;
    if let Err(e) = parse(&program) {
        return Err(manifest_err(&program_path, e));
    }
    let tests_path = dir.join(&manifest.tests);
    let suite = TestSuite::read(&tests_path).map_err(|e| match e {
        SuiteError::MultiAssert(id) => BundleError::MultiAssertTest { id },
        SuiteError::Io { .. } => manifest_err(&tests_path, e),
        other => BundleError::Suite {
            path: tests_path.display().to_string(),
            source: other,
        },
    })?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| program.id.clone());
    if let Some(gt) = &manifest.ground_truth {
        if program.line(gt.bug_line).is_none() {
            return Err(manifest_err(
                &manifest_path,
                format!("ground-truth line {} is outside the program", gt.bug_line),
            ));
        }
    }
    if run_suite(&program, &suite, DEFAULT_STEP_BUDGET).failing.is_empty() {
        return Err(BundleError::NoFailingTests(name));
    }
    Ok(BugBundle {
        name,
        dir: dir.to_path_buf(),
        program: program.with_id(manifest.program.trim_end_matches(".sl")),
        suite,
        ground_truth: manifest.ground_truth,
    })
}

/// Loads every subdirectory of `dir` that holds a manifest, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<BugBundle>, BundleError> {
    let entries = fs::read_dir(dir).map_err(|e| manifest_err(dir, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(manifest_err(dir, "no bundles found"));
    }
    dirs.iter().map(|d| load_bundle(d)).collect()
}
