//! Spectrum-based fault localization with Ochiai scores.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::harness::{run_suite, TestSuite};
use crate::lang::{parse, SourceProgram};
use crate::slicer::SliceMapping;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineCounts {
    /// Failing tests that execute the line.
    pub ef: usize,
    /// Passing tests that execute the line.
    pub ep: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoverageSpectrum {
    pub lines: BTreeMap<usize, LineCounts>,
    pub failing: usize,
    pub passing: usize,
}

impl CoverageSpectrum {
    pub fn nf(&self, c: LineCounts) -> usize {
        self.failing - c.ef
    }

    pub fn np(&self, c: LineCounts) -> usize {
        self.passing - c.ep
    }
}

/// Tallies per-line execution by failing and passing tests. Each test
/// contributes at most one to a line.
pub fn collect_spectrum(program: &SourceProgram, suite: &TestSuite, budget: u64) -> CoverageSpectrum {
    let mut spectrum = CoverageSpectrum::default();
    if let Ok(ast) = parse(program) {
        for line in ast.executable_lines() {
            spectrum.lines.insert(line, LineCounts::default());
        }
    }
    let result = run_suite(program, suite, budget);
    spectrum.failing = result.failing.len();
    spectrum.passing = result.passing.len();
    for outcome in result.outcomes.values() {
        let failing = !outcome.is_pass();
        for line in &outcome.covered {
            let c = spectrum.lines.entry(*line).or_default();
            if failing {
                c.ef += 1;
            } else {
                c.ep += 1;
            }
        }
    }
    spectrum
}

/// A suspiciousness formula over one line's counts.
pub trait Formula {
    fn score(&self, counts: LineCounts, spectrum: &CoverageSpectrum) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ochiai;

impl Formula for Ochiai {
    /// `ef / sqrt((ef + nf) * (ef + ep))`, zero when the denominator is zero.
    fn score(&self, c: LineCounts, spectrum: &CoverageSpectrum) -> f64 {
        let denom = ((c.ef + spectrum.nf(c)) as f64 * (c.ef + c.ep) as f64).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            c.ef as f64 / denom
        }
    }
}

pub fn score_with(formula: &impl Formula, spectrum: &CoverageSpectrum) -> BTreeMap<usize, f64> {
    spectrum
        .lines
        .iter()
        .map(|(line, c)| (*line, formula.score(*c, spectrum)))
        .collect()
}

pub fn ochiai(spectrum: &CoverageSpectrum) -> BTreeMap<usize, f64> {
    score_with(&Ochiai, spectrum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Computed on the original program and suite.
    L,
    /// Recomputed on the slice and reduced suite.
    LR,
    /// The original list restricted to lines that survive slicing.
    LP,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::L => "L",
            Provenance::LR => "LR",
            Provenance::LP => "LP",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "L" => Ok(Provenance::L),
            "LR" => Ok(Provenance::LR),
            "LP" => Ok(Provenance::LP),
            other => Err(format!("unknown list `{other}` (expected L, LR or LP)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suspicious {
    /// Original-program line.
    pub line: usize,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousList {
    pub provenance: Provenance,
    pub entries: Vec<Suspicious>,
}

impl SuspiciousList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lines(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.line).collect()
    }

    pub fn rank_of(&self, line: usize) -> Option<usize> {
        self.entries.iter().find(|e| e.line == line).map(|e| e.rank)
    }

    /// `[{"line":n,"score":x,"rank":r},...]`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.entries).expect("json")
    }

    fn densify(mut self) -> Self {
        for (i, e) in self.entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
        self
    }
}

/// Orders by descending score, then ascending line; zero scores are dropped.
pub fn rank(scores: &BTreeMap<usize, f64>) -> SuspiciousList {
    let mut entries: Vec<Suspicious> = scores
        .iter()
        .filter(|(_, s)| **s > 0.0)
        .map(|(line, score)| Suspicious {
            line: *line,
            score: *score,
            rank: 0,
        })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.line.cmp(&b.line)));
    SuspiciousList {
        provenance: Provenance::L,
        entries,
    }
    .densify()
}

/// The full localization pipeline on one program and suite.
pub fn localize(program: &SourceProgram, suite: &TestSuite, budget: u64) -> SuspiciousList {
    rank(&ochiai(&collect_spectrum(program, suite, budget)))
}

/// Drops entries whose line did not survive slicing; order is kept and
/// ranks are renumbered.
pub fn prune_list(list: &SuspiciousList, mapping: &SliceMapping) -> SuspiciousList {
    SuspiciousList {
        provenance: Provenance::LP,
        entries: list
            .entries
            .iter()
            .filter(|e| mapping.to_slice(e.line).is_some())
            .cloned()
            .collect(),
    }
    .densify()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocalizeError {
    #[error("the reduced suite has no failing test on the slice")]
    NoFailingTests,
    #[error("line {0} is not in the suspicious list")]
    NotInList(usize),
}

/// Localizes on the slice and reduced suite, reporting lines in original
/// coordinates.
pub fn regenerate_list(
    slice: &SourceProgram,
    reduced: &TestSuite,
    budget: u64,
    mapping: &SliceMapping,
) -> Result<SuspiciousList, LocalizeError> {
    let spectrum = collect_spectrum(slice, reduced, budget);
    if spectrum.failing == 0 {
        return Err(LocalizeError::NoFailingTests);
    }
    let mut list = rank(&ochiai(&spectrum));
    list.provenance = Provenance::LR;
    for e in &mut list.entries {
        e.line = mapping
            .to_original(e.line)
            .expect("covered slice lines are mapped");
    }
    Ok(list)
}

/// Rank of the patched line in `list`.
pub fn bug_rank(list: &SuspiciousList, patched_line: usize) -> Result<usize, LocalizeError> {
    list.rank_of(patched_line)
        .ok_or(LocalizeError::NotInList(patched_line))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(failing: usize, passing: usize, lines: &[(usize, usize, usize)]) -> CoverageSpectrum {
        CoverageSpectrum {
            lines: lines
                .iter()
                .map(|&(l, ef, ep)| (l, LineCounts { ef, ep }))
                .collect(),
            failing,
            passing,
        }
    }

    #[test]
    fn ochiai_corner_cases() {
        let s = spectrum(1, 1, &[(1, 1, 0), (2, 0, 1), (3, 1, 1)]);
        let scores = ochiai(&s);
        assert_eq!(scores[&1], 1.0);
        assert_eq!(scores[&2], 0.0);
        assert!((scores[&3] - 0.707_106_781_186_547_5).abs() < 1e-12);
        let empty = spectrum(0, 0, &[(1, 0, 0)]);
        assert_eq!(ochiai(&empty)[&1], 0.0);
    }

    #[test]
    fn ties_break_by_line() {
        let scores = BTreeMap::from([(5, 0.9), (2, 0.9), (7, 0.1), (9, 0.0)]);
        let list = rank(&scores);
        let got: Vec<(usize, usize)> = list.entries.iter().map(|e| (e.line, e.rank)).collect();
        assert_eq!(got, vec![(2, 1), (5, 2), (7, 3)]);
        assert!(rank(&BTreeMap::from([(1, 0.0)])).is_empty());
    }

    #[test]
    fn pruning_keeps_order_and_renumbers() {
        let list = rank(&BTreeMap::from([(4, 0.9), (9, 0.8), (2, 0.7)]));
        let mapping = SliceMapping::from_origin(vec![1, 2, 3, 4, 5, 6, 7, 8, 10]);
        let pruned = prune_list(&list, &mapping);
        assert_eq!(pruned.provenance, Provenance::LP);
        let got: Vec<(usize, usize)> = pruned.entries.iter().map(|e| (e.line, e.rank)).collect();
        assert_eq!(got, vec![(4, 1), (2, 2)]);
        let same = prune_list(&list, &SliceMapping::identity(10));
        assert_eq!(same.entries, list.entries);
    }

    #[test]
    fn bug_rank_lookup() {
        let list = rank(&BTreeMap::from([(4, 0.9), (2, 0.8), (9, 0.7)]));
        assert_eq!(bug_rank(&list, 2), Ok(2));
        assert_eq!(bug_rank(&list, 3), Err(LocalizeError::NotInList(3)));
    }
}
