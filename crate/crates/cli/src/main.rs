use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use reducto::experiment::{
    compare, emit_report, load_bundle, load_corpus, prepare, read_csv, run_bundle, run_config,
    run_lattice, viable_configs, BugBundle, ExperimentSettings, Format, RepairConfig,
};
use reducto::faultloc::{localize, prune_list, regenerate_list, Provenance};
use reducto::harness::TestSuite;
use reducto::lang::SourceProgram;
use reducto::reducer::reduce_suite;
use reducto::slicer::{build_criterion, mapping_from_deletion_log, orbs_slice, SliceError, SliceMapping};

#[derive(Parser)]
#[command(name = "reducto", version, about = "Slice-accelerated program repair workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Slice a bundle's program on the signatures of its failing tests.
    Slice {
        bundle: PathBuf,
        #[arg(long, default_value_t = 3)]
        delta: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Drop tests that no longer apply to a slice.
    ReduceTests {
        bundle: PathBuf,
        /// Directory holding slice.sl and deletion_log.json.
        #[arg(long)]
        slice: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Rank suspicious lines.
    Localize {
        bundle: PathBuf,
        #[arg(long)]
        slice: Option<PathBuf>,
        #[arg(long, default_value = "L")]
        list: Provenance,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Search for a patch under one configuration.
    Repair {
        bundle: PathBuf,
        #[arg(long, default_value = "P_T_L")]
        config: RepairConfig,
        #[arg(long)]
        max_candidates: Option<usize>,
        #[arg(long)]
        max_nte: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the configuration lattice over every bundle of a corpus.
    Experiment {
        corpus: PathBuf,
        /// `all` or a comma-separated list such as P_T_L,Ps_Ts_LP.
        #[arg(long, default_value = "all")]
        configs: String,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long)]
        wall_clock_secs: Option<u64>,
    },
    /// Percentage reductions of one report relative to another.
    Compare { base: PathBuf, other: PathBuf },
}

fn write_json(dir: &Path, name: &str, v: &serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn bundle(path: &Path) -> Result<BugBundle> {
    load_bundle(path).map_err(|e| anyhow!(e).context("loading bundle"))
}

fn read_slice(dir: &Path) -> Result<(SourceProgram, SliceMapping)> {
    let slice = SourceProgram::read(&dir.join("slice.sl"))
        .with_context(|| format!("reading {}", dir.join("slice.sl").display()))?;
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("deletion_log.json"))?)?;
    let mapping = mapping_from_deletion_log(&log).map_err(|e| anyhow!(e))?;
    Ok((slice, mapping))
}

fn cmd_slice(path: &Path, delta: usize, out: &Path) -> Result<()> {
    let b = bundle(path)?;
    let settings = ExperimentSettings::default();
    let mut slice_settings = settings.slice;
    slice_settings.delta = delta;
    let (criterion, baseline) = build_criterion(&b.program, &b.suite, settings.budget())?;
    let result = match orbs_slice(&b.program, &criterion, &baseline, &slice_settings) {
        Ok(r) => r,
        Err(SliceError::PassCapExceeded { partial }) => {
            eprintln!("warning: no fixpoint after {} passes; writing the partial slice", partial.passes);
            *partial
        }
        Err(e) => return Err(e.into()),
    };
    fs::create_dir_all(out)?;
    result.slice.write(&out.join("slice.sl"))?;
    write_json(out, "deletion_log.json", &result.deletion_log_json())?;
    write_json(out, "slice_stats.json", &result.stats_json())?;
    println!(
        "{}: {} -> {} SLoC ({:.1}%), {} passes",
        b.name, result.stats.orig_sloc, result.stats.slice_sloc, result.stats.percent, result.passes
    );
    Ok(())
}

fn cmd_reduce(path: &Path, slice_dir: &Path, out: &Path) -> Result<()> {
    let b = bundle(path)?;
    let (slice, mapping) = read_slice(slice_dir)?;
    let budget = ExperimentSettings::default().budget();
    let reduced = reduce_suite(&b.program, &slice, &mapping, &b.suite, budget)?;
    fs::create_dir_all(out)?;
    reduced.kept.write(&out.join("tests_reduced.json"))?;
    write_json(out, "reduction_log.json", &reduced.log_json())?;
    println!("{}: kept {} of {} tests", b.name, reduced.kept.len(), b.suite.len());
    Ok(())
}

fn cmd_localize(path: &Path, slice_dir: Option<&Path>, list: Provenance, out: &Path) -> Result<()> {
    let b = bundle(path)?;
    let budget = ExperimentSettings::default().budget();
    let l = localize(&b.program, &b.suite, budget);
    let result = match list {
        Provenance::L => l,
        _ => {
            let dir = slice_dir.ok_or_else(|| anyhow!("--list {list} needs --slice"))?;
            let (slice, mapping) = read_slice(dir)?;
            if list == Provenance::LP {
                prune_list(&l, &mapping)
            } else {
                let reduced: TestSuite = match TestSuite::read(&dir.join("tests_reduced.json")) {
                    Ok(t) => t,
                    Err(_) => reduce_suite(&b.program, &slice, &mapping, &b.suite, budget)?.kept,
                };
                regenerate_list(&slice, &reduced, budget, &mapping)?
            }
        }
    };
    let name = format!("suspicious_{list}.json");
    write_json(out, &name, &result.to_json())?;
    println!("{}: {} suspicious lines written to {name}", b.name, result.len());
    Ok(())
}

fn settings_with(max_candidates: Option<usize>, max_nte: Option<u64>, wall: Option<u64>) -> ExperimentSettings {
    let mut s = ExperimentSettings::default();
    if let Some(n) = max_candidates {
        s.caps.max_candidates = n;
    }
    if let Some(n) = max_nte {
        s.caps.max_nte = n;
    }
    if let Some(secs) = wall {
        s.caps.wall_clock = Duration::from_secs(secs);
    }
    s
}

fn cmd_repair(
    path: &Path,
    config: RepairConfig,
    max_candidates: Option<usize>,
    max_nte: Option<u64>,
    out: &Path,
) -> Result<bool> {
    if !config.is_viable() {
        bail!("configuration {config} is not viable");
    }
    let b = bundle(path)?;
    let settings = settings_with(max_candidates, max_nte, None);
    let report = if config == RepairConfig::BASELINE {
        let art = prepare(&b, &settings);
        run_config(&b, &art, config, &settings)?
    } else {
        run_bundle(&b, &[config], &settings)
            .reports
            .pop()
            .expect("one report")
    };
    let r = &report.row;
    let patch = r.patch_line.map(|line| {
        json!({ "line": line, "template": report.template, "new_text": report.new_text })
    });
    let v = json!({
        "patched": r.patched,
        "patch": patch,
        "npc": r.npc,
        "nte": r.nte,
        "rt_ms": r.rt_ms,
        "cost_proxy": r.cost_proxy,
        "br": r.br,
        "stop_reason": r.stop_reason,
        "transferred": r.transferred,
    });
    write_json(out, "repair_result.json", &v)?;
    match &report.error {
        None => println!("{} {}: patched line {}", b.name, r.config, r.patch_line.unwrap_or(0)),
        Some(e) => println!("{} {}: {e}", b.name, r.config),
    }
    Ok(r.patched)
}

fn parse_configs(s: &str) -> Result<Vec<RepairConfig>> {
    if s == "all" {
        return Ok(viable_configs());
    }
    s.split(',')
        .map(|name| {
            let c: RepairConfig = name.trim().parse().map_err(|e: String| anyhow!(e))?;
            if !c.is_viable() {
                bail!("configuration {c} is not viable");
            }
            Ok(c)
        })
        .collect()
}

fn cmd_experiment(
    corpus: &Path,
    configs: &str,
    out: Option<&Path>,
    format: Format,
    wall: Option<u64>,
) -> Result<ExitCode> {
    let configs = parse_configs(configs)?;
    let bundles = match load_corpus(corpus) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let settings = settings_with(None, None, wall);
    let reports = run_lattice(&bundles, &configs, &settings);
    let doc = emit_report(&reports, format);
    match out {
        Some(p) => fs::write(p, &doc).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{doc}"),
    }
    let failures: Vec<_> = reports.iter().filter(|r| r.failed()).collect();
    for r in &failures {
        eprintln!("{} {}: {}", r.row.bundle, r.row.config, r.error.as_deref().unwrap_or(""));
    }
    eprintln!(
        "{} bundles, {} reports, {} without a patch",
        bundles.len(),
        reports.len(),
        failures.len()
    );
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn fmt_pct(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.1}%"))
}

fn cmd_compare(base: &Path, other: &Path) -> Result<()> {
    let base_rows = read_csv(&fs::read_to_string(base)?)?;
    let other_rows = read_csv(&fs::read_to_string(other)?)?;
    println!("bundle,config,rt_reduction,nte_reduction,npc_reduction,cost_reduction,br_delta,same_location");
    for o in &other_rows {
        let b = base_rows
            .iter()
            .find(|b| b.bundle == o.bundle && b.config == o.config)
            .or_else(|| base_rows.iter().find(|b| b.bundle == o.bundle && b.config == "P_T_L"));
        let Some(b) = b else {
            eprintln!("{}: no matching row in {}", o.bundle, base.display());
            continue;
        };
        let r = compare(b, o);
        println!(
            "{},{},{},{},{},{},{},{}",
            o.bundle,
            o.config,
            fmt_pct(r.rt_pct),
            fmt_pct(r.nte_pct),
            fmt_pct(r.npc_pct),
            fmt_pct(r.cost_pct),
            r.br_delta.map_or(String::new(), |d| d.to_string()),
            r.same_location.map_or(String::new(), |s| s.to_string()),
        );
    }
    Ok(())
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Slice { bundle, delta, out } => cmd_slice(&bundle, delta, &out)?,
        Command::ReduceTests { bundle, slice, out } => cmd_reduce(&bundle, &slice, &out)?,
        Command::Localize { bundle, slice, list, out } => {
            cmd_localize(&bundle, slice.as_deref(), list, &out)?
        }
        Command::Repair { bundle, config, max_candidates, max_nte, out } => {
            let patched = cmd_repair(&bundle, config, max_candidates, max_nte, &out)?;
            return Ok(if patched { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Experiment { corpus, configs, out, format, wall_clock_secs } => {
            return cmd_experiment(&corpus, &configs, out.as_deref(), format, wall_clock_secs)
        }
        Command::Compare { base, other } => cmd_compare(&base, &other)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
