//! Experiment configuration, seeding, studies and output files.

pub mod config;
pub mod records;
pub mod studies;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{Algorithm, Experiment, ExperimentConfig, DEFAULT_ETA_GRID};
pub use records::{
    format_float, read_csv, records_from_rewards, seed_schedule, stream_rng, summarize, write_csv, write_json,
    write_summary_csv, RunRecord, Stream, SummaryRow,
};
pub use studies::{
    first_last_regret, loglog_slope, make_value_agent, mean_curve, play, regret_growth_exponent, run_chain_study,
    run_experiment, run_recommendation_study, run_tabular_regret, run_verify_optimism, OptimismRow, RunSeeds,
    StudyOutput,
};

use crate::error::{Error, Result};

/// Run manifest: enough to reproduce the output files.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub seeds: &'a [RunSeeds],
    pub metrics: &'a BTreeMap<String, f64>,
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub data: PathBuf,
    pub summary: Option<PathBuf>,
    pub manifest: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Optimism table as CSV.
pub fn write_optimism_csv(rows: &[OptimismRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["check", "case", "value", "relation", "limit", "pass"])?;
    for r in rows {
        w.write_record([
            r.check.clone(),
            r.case.clone(),
            format_float(r.value),
            r.relation.clone(),
            format_float(r.limit),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the data CSV at `path`, plus `<stem>.summary.csv` for episodic
/// studies and `<stem>.manifest.json`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &StudyOutput, path: &Path) -> Result<OutputPaths> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let summary = if cfg.experiment == Experiment::VerifyOptimism {
        write_optimism_csv(&out.optimism, path)?;
        None
    } else {
        if out.records.is_empty() {
            return Err(Error::Config("study produced no records".into()));
        }
        write_csv(&out.records, path)?;
        let p = sibling(path, "summary.csv");
        write_summary_csv(&summarize(&out.records), &p)?;
        Some(p)
    };
    let manifest = sibling(path, "manifest.json");
    write_json(
        &Manifest { version: env!("CARGO_PKG_VERSION"), config: cfg, seeds: &out.seeds, metrics: &out.metrics },
        &manifest,
    )?;
    Ok(OutputPaths { data: path.to_path_buf(), summary, manifest })
}

/// Plain-text rendering of the optimism table.
pub fn render_optimism_table(rows: &[OptimismRow]) -> String {
    let mut s = String::new();
    let width = rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
    s.push_str(&format!("{:<width$}  {:<40}  {:>14}  {:>2}  {:>14}  result\n", "check", "case", "value", "", "limit"));
    for r in rows {
        s.push_str(&format!(
            "{:<width$}  {:<40}  {:>14.6e}  {:>2}  {:>14.6e}  {}\n",
            r.check,
            r.case,
            r.value,
            r.relation,
            r.limit,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}
