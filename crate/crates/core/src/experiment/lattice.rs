use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bundle::BugBundle;
use super::report::{one_decimal, ReportRow, RepairReport, StageTimings};
use crate::faultloc::{localize, prune_list, regenerate_list, Provenance, SuspiciousList};
use crate::harness::{run_suite, SuiteResult, TestSuite};
use crate::lang::count_sloc;
use crate::reducer::{reduce_suite, ReducedSuite};
use crate::repair::{map_patch_to_original, passes_all, repair, RepairCaps};
use crate::slicer::{build_criterion, orbs_slice, Baseline, Candidate, SliceError, SliceResult, SliceSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProgramVariant {
    P,
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuiteVariant {
    T,
    Ts,
}

/// One point of the configuration lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepairConfig {
    pub program: ProgramVariant,
    pub suite: SuiteVariant,
    pub list: Provenance,
}

impl RepairConfig {
    pub const fn new(program: ProgramVariant, suite: SuiteVariant, list: Provenance) -> Self {
        RepairConfig { program, suite, list }
    }

    pub const BASELINE: RepairConfig =
        RepairConfig::new(ProgramVariant::P, SuiteVariant::T, Provenance::L);

    /// The full suite and the unpruned list both name lines the slice lacks.
    pub fn is_viable(&self) -> bool {
        !(self.program == ProgramVariant::Ps
            && (self.suite == SuiteVariant::T || self.list == Provenance::L))
    }

    pub fn uses_slice(&self) -> bool {
        self.program == ProgramVariant::Ps
            || self.suite == SuiteVariant::Ts
            || self.list != Provenance::L
    }
}

impl fmt::Display for RepairConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.program {
            ProgramVariant::P => "P",
            ProgramVariant::Ps => "Ps",
        };
        let t = match self.suite {
            SuiteVariant::T => "T",
            SuiteVariant::Ts => "Ts",
        };
        write!(f, "{p}_{t}_{}", self.list)
    }
}

impl FromStr for RepairConfig {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        all_configs()
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| format!("unknown configuration `{s}`"))
    }
}

/// All twelve combinations, program then suite then list.
pub fn all_configs() -> Vec<RepairConfig> {
    let mut out = Vec::with_capacity(12);
    for program in [ProgramVariant::P, ProgramVariant::Ps] {
        for suite in [SuiteVariant::T, SuiteVariant::Ts] {
            for list in [Provenance::L, Provenance::LR, Provenance::LP] {
                out.push(RepairConfig::new(program, suite, list));
            }
        }
    }
    out
}

pub fn viable_configs() -> Vec<RepairConfig> {
    all_configs().into_iter().filter(RepairConfig::is_viable).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExperimentSettings {
    pub slice: SliceSettings,
    pub caps: RepairCaps,
}

impl ExperimentSettings {
    pub fn budget(&self) -> u64 {
        self.slice.budget
    }
}

/// Everything derived once per bundle and shared by its configurations.
#[derive(Debug, Clone)]
pub struct BundleArtifacts {
    pub on_p: SuiteResult,
    pub failing_ids: Vec<String>,
    pub list_l: SuspiciousList,
    pub baseline: Option<Baseline>,
    /// A pass-cap partial slice is kept here too; see `slice_complete`.
    pub slice: Result<SliceResult, String>,
    pub slice_complete: bool,
    pub reduced: Result<ReducedSuite, String>,
    pub list_lp: Result<SuspiciousList, String>,
    pub list_lr: Result<SuspiciousList, String>,
    pub timings: StageTimings,
}

fn ms(d: Duration) -> u64 {
    d.as_millis() as u64
}

/// Slices, reduces and localizes. Stage failures are captured, not raised.
pub fn prepare(bundle: &BugBundle, settings: &ExperimentSettings) -> BundleArtifacts {
    let budget = settings.budget();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let on_p = run_suite(&bundle.program, &bundle.suite, budget);
    let list_l = localize(&bundle.program, &bundle.suite, budget);
    timings.localize_ms = ms(t.elapsed());
    let failing_ids = on_p.failing.clone();

    let t = Instant::now();
    let (baseline, slice, slice_complete) = match build_criterion(&bundle.program, &bundle.suite, budget) {
        Ok((criterion, baseline)) => match orbs_slice(&bundle.program, &criterion, &baseline, &settings.slice) {
            Ok(s) => (Some(baseline), Ok(s), true),
            Err(SliceError::PassCapExceeded { partial }) => (Some(baseline), Ok(*partial), false),
            Err(e) => (Some(baseline), Err(format!("slice: {e}")), false),
        },
        Err(e) => (None, Err(format!("slice: {e}")), false),
    };
    timings.slice_ms = ms(t.elapsed());

    let t = Instant::now();
    let reduced = slice.as_ref().map_err(Clone::clone).and_then(|s| {
        reduce_suite(&bundle.program, &s.slice, &s.mapping, &bundle.suite, budget)
            .map_err(|e| format!("reduce: {e}"))
    });
    timings.reduce_ms = ms(t.elapsed());

    let t = Instant::now();
    let list_lp = slice
        .as_ref()
        .map(|s| prune_list(&list_l, &s.mapping))
        .map_err(Clone::clone);
    let list_lr = match (&slice, &reduced) {
        (Ok(s), Ok(r)) => regenerate_list(&s.slice, &r.kept, budget, &s.mapping)
            .map_err(|e| format!("regenerate: {e}")),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    timings.localize_ms += ms(t.elapsed());

    BundleArtifacts {
        on_p,
        failing_ids,
        list_l,
        baseline,
        slice,
        slice_complete,
        reduced,
        list_lp,
        list_lr,
        timings,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("configuration {0} is not viable")]
    NonViable(RepairConfig),
}

struct Inputs<'a> {
    subject: Candidate,
    suite: &'a TestSuite,
    list: &'a SuspiciousList,
}

fn inputs<'a>(
    bundle: &'a BugBundle,
    art: &'a BundleArtifacts,
    config: RepairConfig,
) -> Result<Inputs<'a>, String> {
    let subject = match config.program {
        ProgramVariant::P => Candidate::identity(&bundle.program),
        ProgramVariant::Ps => {
            let s = art.slice.as_ref().map_err(Clone::clone)?;
            if !art.slice_complete {
                return Err(format!("slice: no fixpoint after {} passes", s.passes));
            }
            s.candidate()
        }
    };
    let suite = match config.suite {
        SuiteVariant::T => &bundle.suite,
        SuiteVariant::Ts => &art.reduced.as_ref().map_err(Clone::clone)?.kept,
    };
    let list = match config.list {
        Provenance::L => &art.list_l,
        Provenance::LP => art.list_lp.as_ref().map_err(Clone::clone)?,
        Provenance::LR => art.list_lr.as_ref().map_err(Clone::clone)?,
    };
    Ok(Inputs { subject, suite, list })
}

/// Runs one configuration over prepared artifacts. `same_location` is left
/// empty; [`run_bundle`] fills it against the baseline.
pub fn run_config(
    bundle: &BugBundle,
    art: &BundleArtifacts,
    config: RepairConfig,
    settings: &ExperimentSettings,
) -> Result<RepairReport, ConfigError> {
    if !config.is_viable() {
        return Err(ConfigError::NonViable(config));
    }
    let budget = settings.budget();
    let uses_ps = config.program == ProgramVariant::Ps;
    let uses_ts = config.suite == SuiteVariant::Ts;
    let slice_ok = art.slice.as_ref().ok();
    let mut report = RepairReport {
        row: ReportRow {
            bundle: bundle.name.clone(),
            config: config.to_string(),
            sloc_p: count_sloc(&bundle.program),
            sloc_ps: if uses_ps { slice_ok.map(|s| s.stats.slice_sloc) } else { None },
            slice_pct: if uses_ps {
                slice_ok.map(|s| one_decimal(s.stats.percent))
            } else {
                None
            },
            tss_t: bundle.suite.len(),
            tss_ts: if uses_ts {
                art.reduced.as_ref().ok().map(|r| r.kept.len())
            } else {
                None
            },
            br: None,
            npc: 0,
            nte: 0,
            rt_ms: 0,
            cost_proxy: 0,
            patched: false,
            patch_line: None,
            same_location: None,
            transferred: None,
            stop_reason: "failed".into(),
        },
        template: None,
        new_text: None,
        list_len: None,
        unbuildable: 0,
        ground_truth_line: None,
        ground_truth_text: None,
        stage_ms: art.timings,
        error: None,
    };
    let inp = match inputs(bundle, art, config) {
        Ok(i) => i,
        Err(e) => {
            report.error = Some(e);
            return Ok(report);
        }
    };
    report.list_len = Some(inp.list.len());
    let result = repair(&inp.subject, inp.suite, &art.failing_ids, inp.list, &settings.caps, budget);
    let row = &mut report.row;
    row.npc = result.npc;
    row.nte = result.nte;
    row.rt_ms = ms(result.elapsed);
    row.cost_proxy = result.cost_proxy();
    row.stop_reason = result.stop_reason.to_string();
    report.unbuildable = result.unbuildable;
    if let Some(patch) = &result.patch {
        row.patched = true;
        row.patch_line = Some(patch.location);
        row.br = result.br;
        report.template = Some(patch.template.code().to_string());
        report.new_text = Some(patch.edit.new_text().to_string());
        if uses_ps {
            let ok = map_patch_to_original(patch, &inp.subject.mapping, &bundle.program)
                .map(|p| passes_all(&p, &bundle.suite, budget));
            row.transferred = Some(matches!(ok, Ok(true)));
        }
        if let Some(gt) = &bundle.ground_truth {
            report.ground_truth_line = Some(gt.bug_line == patch.location);
            report.ground_truth_text = Some(
                gt.bug_line == patch.location
                    && report.new_text.as_deref().map(str::trim) == Some(gt.patched_text.trim()),
            );
        }
    } else {
        report.error = Some(format!("no plausible patch ({})", result.stop_reason));
    }
    Ok(report)
}

/// Reports of one bundle, plus the artifacts they were computed from.
#[derive(Debug, Clone)]
pub struct BundleRun {
    pub artifacts: BundleArtifacts,
    pub reports: Vec<RepairReport>,
}

/// Runs `configs` (non-viable ones are skipped) in lattice order. The
/// baseline is always computed for the same-location column.
pub fn run_bundle(bundle: &BugBundle, configs: &[RepairConfig], settings: &ExperimentSettings) -> BundleRun {
    let artifacts = prepare(bundle, settings);
    let order: Vec<RepairConfig> = viable_configs()
        .into_iter()
        .filter(|c| configs.contains(c))
        .collect();
    let mut reports: Vec<RepairReport> = order
        .par_iter()
        .map(|c| run_config(bundle, &artifacts, *c, settings).expect("viable"))
        .collect();
    let base_line = match reports.iter().find(|r| r.row.config == "P_T_L") {
        Some(r) => r.row.patch_line,
        None => run_config(bundle, &artifacts, RepairConfig::BASELINE, settings)
            .expect("viable")
            .row
            .patch_line,
    };
    for r in &mut reports {
        if let (Some(b), Some(l)) = (base_line, r.row.patch_line) {
            r.row.same_location = Some(b == l);
        }
    }
    BundleRun { artifacts, reports }
}

/// All bundles, in input order; bundles run concurrently.
pub fn run_lattice(bundles: &[BugBundle], configs: &[RepairConfig], settings: &ExperimentSettings) -> Vec<RepairReport> {
    bundles
        .par_iter()
        .map(|b| run_bundle(b, configs, settings).reports)
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
