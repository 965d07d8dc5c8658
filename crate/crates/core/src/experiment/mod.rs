//! Bug bundles, the configuration lattice and reports.

mod bundle;
mod lattice;
mod report;

pub use bundle::{load_bundle, load_corpus, BugBundle, BundleError, GroundTruth};
pub use lattice::{
    all_configs, prepare, run_bundle, run_config, run_lattice, viable_configs, BundleArtifacts,
    BundleRun, ConfigError, ExperimentSettings, ProgramVariant, RepairConfig, SuiteVariant,
};
pub use report::{
    compare, emit_report, one_decimal, pct_reduction, read_csv, to_csv, without_wall_clock, Format, Reduction,
    RepairReport, ReportRow, StageTimings, COLUMNS,
};
