//! Result rows (CSV) and the run manifest (JSON).

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bcg_core::{Estimate, Field};
use serde::Serialize;

use crate::scenario::Scenario;

/// Column order of every emitted CSV file.
pub const CSV_COLUMNS: [&str; 10] =
    ["scenario_id", "field", "n", "r", "quantity", "mean", "stderr", "samples", "seed", "wall_time_s"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario_id: String,
    pub field: Field,
    pub n: usize,
    /// Weight exponent, when the experiment has one.
    pub r: Option<f64>,
    pub quantity: String,
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Rows of one run plus its structured report.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub scenario: Scenario,
    pub rows: Vec<Row>,
    /// Every acceptance check of the run held.
    pub passed: bool,
    /// Human-readable lines, one per check.
    pub checks: Vec<String>,
    pub report: serde_json::Value,
    pub wall_time_s: f64,
}

impl Outcome {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            scenario: scenario.clone(),
            rows: Vec::new(),
            passed: true,
            checks: Vec::new(),
            report: serde_json::Value::Null,
            wall_time_s: 0.0,
        }
    }

    /// Exact values carry the run's budget and seed.
    pub fn push(&mut self, quantity: &str, e: &Estimate) {
        let (samples, seed) =
            if e.n_samples == 0 { (self.scenario.samples, self.scenario.seed) } else { (e.n_samples, e.seed) };
        self.rows.push(Row {
            scenario_id: self.scenario.id.clone(),
            field: self.scenario.field,
            n: self.scenario.n,
            r: self.scenario.r,
            quantity: quantity.to_string(),
            mean: e.mean,
            stderr: e.stderr,
            samples,
            seed,
            wall_time_s: 0.0,
        });
    }

    pub fn push_value(&mut self, quantity: &str, value: f64) {
        let s = &self.scenario;
        let e = Estimate { mean: value, stderr: 0.0, n_samples: s.samples, seed: s.seed };
        self.push(quantity, &e);
    }

    pub fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.checks.push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }

    pub fn finish(&mut self, wall_time_s: f64) {
        self.wall_time_s = wall_time_s;
        for r in &mut self.rows {
            r.wall_time_s = wall_time_s;
        }
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario_id.clone(),
            r.field.tag().to_string(),
            r.n.to_string(),
            r.r.map(|x| x.to_string()).unwrap_or_default(),
            r.quantity.clone(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.samples.to_string(),
            r.seed.to_string(),
            format!("{:.3}", r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    status: &'static str,
    csv_columns: [&'static str; 10],
    #[serde(flatten)]
    outcome: &'a Outcome,
}

/// The manifest sits next to the CSV file with a `.json` extension.
pub fn manifest_path(csv: &Path) -> PathBuf {
    if csv.extension().is_some_and(|e| e == "json") {
        csv.with_extension("manifest.json")
    } else {
        csv.with_extension("json")
    }
}

/// Writes `path` (CSV) and the manifest next to it.
pub fn write_outputs(path: &Path, command: &str, outcome: &Outcome) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(file, &outcome.rows)?;
    let manifest = Manifest {
        tool: "bcg",
        version: env!("CARGO_PKG_VERSION"),
        command,
        status: if outcome.passed { "pass" } else { "fail" },
        csv_columns: CSV_COLUMNS,
        outcome,
    };
    let mpath = manifest_path(path);
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", mpath.display()))?;
    Ok(())
}
