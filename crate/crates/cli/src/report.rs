//! Experiment reports: verdicts, summary JSON and CSV rows.

use std::fs;
use std::path::Path;

use growthlab::additive_lab::Tally;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Random streams: `ChaCha8Rng::seed_from_u64(seed)` with the stream set to `q`.
pub const RNG: &str = "chacha8 (rand_chacha), seed_from_u64(seed), stream q";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One checked statement. `total = passed + failed + skipped`.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub q: Option<u64>,
    pub status: Status,
    pub total: u64,
    pub passed: u64,
    pub failed: u64,
    pub skipped: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl Verdict {
    pub fn counts(name: &str, q: Option<u64>, passed: u64, failed: u64, skipped: u64) -> Self {
        let status = if failed > 0 {
            Status::Fail
        } else if passed == 0 {
            Status::Skipped
        } else {
            Status::Pass
        };
        Verdict {
            name: name.to_string(),
            q,
            status,
            total: passed + failed + skipped,
            passed,
            failed,
            skipped,
            detail: None,
        }
    }

    pub fn tally(name: &str, q: Option<u64>, t: &Tally) -> Self {
        Self::counts(name, q, t.cases - t.violations, t.violations, t.skipped)
    }

    /// From a list of outcomes, `None` meaning skipped.
    pub fn outcomes<I: IntoIterator<Item = Option<bool>>>(name: &str, q: Option<u64>, it: I) -> Self {
        let mut t = Tally::default();
        it.into_iter().for_each(|o| t.record(o));
        Self::tally(name, q, &t)
    }

    pub fn skipped(name: &str, q: Option<u64>, reason: &str) -> Self {
        Self::counts(name, q, 0, 0, 1).with_detail(json!({ "reason": reason }))
    }

    pub fn with_detail(mut self, v: Value) -> Self {
        self.detail = Some(v);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldHeader {
    pub q: u64,
    pub p: u32,
    pub n: u32,
    /// Monic modulus, constant term first.
    pub modulus: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    /// Rows without the header line.
    pub fn body_bytes(&self) -> Result<Vec<u8>, CliError> {
        let all = self.to_bytes()?;
        let start = all.iter().position(|&b| b == b'\n').map_or(all.len(), |i| i + 1);
        Ok(all[start..].to_vec())
    }
}

/// What a subcommand hands back before the header is attached.
#[derive(Debug, Default)]
pub struct Outcome {
    pub fields: Vec<FieldHeader>,
    pub verdicts: Vec<Verdict>,
    pub summary: Map<String, Value>,
    pub table: CsvTable,
    pub truncated: bool,
}

#[derive(Debug)]
pub struct Report {
    pub config: ExperimentConfig,
    pub fields: Vec<FieldHeader>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub verdicts: Vec<Verdict>,
    pub summary: Map<String, Value>,
    pub table: CsvTable,
    pub truncated: bool,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.verdicts.iter().filter(|v| v.status == Status::Fail).count()
    }

    /// 0 with no failed verdict and no truncation, 1 on failures, 3 when
    /// only truncated.
    pub fn exit_code(&self) -> i32 {
        if self.failures() > 0 {
            1
        } else if self.truncated {
            3
        } else {
            0
        }
    }

    pub fn verdict(&self, name: &str, q: Option<u64>) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name && v.q == q)
    }

    pub fn verdicts_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Verdict> + 'a {
        self.verdicts.iter().filter(move |v| v.name == name)
    }

    pub fn summary_json(&self) -> Value {
        let count = |s: Status| self.verdicts.iter().filter(|v| v.status == s).count();
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool_version": TOOL_VERSION,
            "command": self.config.command.name(),
            "config": self.config,
            "seed": self.config.seed,
            "rng": RNG,
            "fields": self.fields,
            "started_unix": self.started_unix,
            "finished_unix": self.finished_unix,
            "truncated": self.truncated,
            "totals": {
                "pass": count(Status::Pass),
                "fail": count(Status::Fail),
                "skipped": count(Status::Skipped),
            },
            "verdicts": self.verdicts,
            "summary": self.summary,
            "rows": self.table.rows.len(),
        })
    }

    /// Writes `summary.json` and `rows.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&self.summary_json())?)?;
        fs::write(dir.join("rows.csv"), self.table.to_bytes()?)?;
        Ok(())
    }
}
