//! Result bundles: CSV tables, `summary.json` with oracle comparisons, and their verification.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const SUMMARY: &str = "summary.json";
pub const CONFIG_COPY: &str = "config.json";
pub const LOG: &str = "log.txt";

/// A named CSV payload. Numeric tables start with a `# config_hash=` line, then the header.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    /// Pre-rendered body for tables with their own layout.
    pub raw: Option<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new(), raw: None }
    }

    pub fn raw(name: impl Into<String>, body: String) -> Self {
        Self { name: name.into(), columns: Vec::new(), rows: Vec::new(), raw: Some(body) }
    }

    pub fn push(&mut self, row: Vec<f64>) -> usize {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn render(&self, hash: &str) -> String {
        if let Some(body) = &self.raw {
            return body.clone();
        }
        let mut out = format!("# config_hash={hash}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// How a measured value is compared with its oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `|m − o| ≤ tol·|o|`.
    Rel,
    /// `|m − o| ≤ tol`.
    Abs,
    /// `m ≥ o − tol·|o|`.
    AtLeast,
}

/// Table cells a check was read from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub table: String,
    pub row: usize,
    pub measured_column: String,
    #[serde(default)]
    pub oracle_column: Option<String>,
}

/// One `(measured, oracle, tolerance, pass)` quadruple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the computation produced a non-finite value.
    pub measured: Option<f64>,
    pub oracle: f64,
    pub tolerance: f64,
    pub mode: Mode,
    pub pass: bool,
    #[serde(default)]
    pub source: Option<Source>,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, oracle: f64, tolerance: f64, mode: Mode) -> Self {
        let measured = measured.is_finite().then_some(measured);
        let mut c = Self { name: name.into(), measured, oracle, tolerance, mode, pass: false, source: None };
        c.pass = c.evaluate();
        c
    }

    pub fn from_table(mut self, table: &str, row: usize, measured: &str, oracle: Option<&str>) -> Self {
        self.source = Some(Source {
            table: table.into(),
            row,
            measured_column: measured.into(),
            oracle_column: oracle.map(Into::into),
        });
        self
    }

    pub fn evaluate(&self) -> bool {
        let Some(m) = self.measured else { return false };
        let (o, t) = (self.oracle, self.tolerance);
        match self.mode {
            Mode::Rel => (m - o).abs() <= t * o.abs(),
            Mode::Abs => (m - o).abs() <= t,
            Mode::AtLeast => m >= o - t * o.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub pipeline: String,
    pub config_hash: String,
    pub seed: u64,
    pub sweep_variable: String,
    pub units: BTreeMap<String, String>,
    /// Set when some sweep points failed and their rows are missing.
    pub partial: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub tables: Vec<TableEntry>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

/// Everything a pipeline produces before it is written out.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub log: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn units() -> BTreeMap<String, String> {
    [
        ("frequency", "MHz (angular frequency divided by 2 pi)"),
        ("rate", "MHz (decay rate divided by 2 pi)"),
        ("time", "us"),
        ("photon_number", "dimensionless"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Writes tables, `summary.json`, the config copy and the log into `dir`.
pub fn write(dir: &Path, cfg: &ExperimentConfig, config_text: &str, outcome: &Outcome) -> anyhow::Result<Summary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let hash = cfg.hash();
    let mut entries = Vec::new();
    for t in &outcome.tables {
        let body = t.render(&hash);
        fs::write(dir.join(&t.name), &body).with_context(|| format!("writing {}", t.name))?;
        let rows = if t.raw.is_some() { body.lines().filter(|l| !l.starts_with('#')).count() - 1 } else { t.rows.len() };
        entries.push(TableEntry { name: t.name.clone(), rows, sha256: sha256_hex(body.as_bytes()) });
    }
    let partial = !outcome.failures.is_empty();
    let summary = Summary {
        schema_version: 1,
        pipeline: cfg.pipeline.name().into(),
        config_hash: hash,
        seed: cfg.seed,
        sweep_variable: cfg.pipeline.sweep_variable().into(),
        units: units(),
        partial,
        failures: outcome.failures.clone(),
        warnings: outcome.warnings.clone(),
        tables: entries,
        checks: outcome.checks.clone(),
        all_pass: !partial && outcome.checks.iter().all(|c| c.pass),
    };
    fs::write(dir.join(SUMMARY), serde_json::to_string_pretty(&summary)? + "\n")?;
    fs::write(dir.join(CONFIG_COPY), config_text)?;
    fs::write(dir.join(LOG), outcome.log.join("\n") + "\n")?;
    Ok(summary)
}

/// Header and rows of a CSV written by [`Table::render`] or the metapotential exporter.
fn parse_csv(text: &str) -> anyhow::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().context("table has no header")?.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().with_context(|| format!("row {k}: `{c}` is not a number")))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            bail!("row {k} has {} cells, header has {}", row.len(), header.len());
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Findings of [`verify`]; the bundle passes when `problems` is empty.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub problems: usize,
}

impl Report {
    fn ok(&mut self, msg: String) {
        self.lines.push(format!("ok   {msg}"));
    }

    fn fail(&mut self, msg: String) {
        self.problems += 1;
        self.lines.push(format!("FAIL {msg}"));
    }
}

/// Re-checks a bundle: config hash, table digests, every check verdict and the table
/// cells each check was read from. Errors mean the bundle is missing or unreadable.
pub fn verify(dir: &Path) -> anyhow::Result<Report> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let summary_path = dir.join(SUMMARY);
    if !summary_path.is_file() {
        bail!("{} has no {SUMMARY}", dir.display());
    }
    let summary: Summary = serde_json::from_str(&fs::read_to_string(&summary_path)?)
        .with_context(|| format!("{SUMMARY} is corrupt"))?;
    let mut report = Report::default();

    match fs::read_to_string(dir.join(CONFIG_COPY)) {
        Ok(text) => match ExperimentConfig::parse(&text) {
            Ok(cfg) if cfg.hash() == summary.config_hash => report.ok(format!("config hash {}", summary.config_hash)),
            Ok(cfg) => report.fail(format!("config hashes to {}, summary records {}", cfg.hash(), summary.config_hash)),
            Err(e) => report.fail(format!("config copy: {e}")),
        },
        Err(e) => report.fail(format!("config copy unreadable: {e}")),
    }

    let mut tables = BTreeMap::new();
    for t in &summary.tables {
        let text = match fs::read_to_string(dir.join(&t.name)) {
            Ok(text) => text,
            Err(e) => {
                report.fail(format!("table {}: {e}", t.name));
                continue;
            }
        };
        if sha256_hex(text.as_bytes()) != t.sha256 {
            report.fail(format!("table {} differs from its recorded digest", t.name));
        } else {
            report.ok(format!("table {} ({} rows)", t.name, t.rows));
        }
        match parse_csv(&text) {
            Ok(parsed) => {
                tables.insert(t.name.clone(), parsed);
            }
            Err(e) => report.fail(format!("table {}: {e}", t.name)),
        }
    }

    if summary.checks.is_empty() {
        report.fail("summary holds no oracle comparison".into());
    }
    for c in &summary.checks {
        let verdict = c.evaluate();
        if verdict != c.pass {
            report.fail(format!("check {}: recorded pass={} but re-evaluates to {verdict}", c.name, c.pass));
            continue;
        }
        if let Some(src) = &c.source {
            if let Err(e) = check_source(&tables, c, src) {
                report.fail(format!("check {}: {e}", c.name));
                continue;
            }
        }
        if verdict {
            report.ok(format!("check {}", c.name));
        } else {
            report.fail(format!("check {} outside tolerance (measured {:?}, oracle {:e})", c.name, c.measured, c.oracle));
        }
    }
    if summary.partial {
        report.fail(format!("partial bundle: {} sweep points failed", summary.failures.len()));
    }
    Ok(report)
}

fn check_source(tables: &BTreeMap<String, (Vec<String>, Vec<Vec<f64>>)>, c: &Check, src: &Source) -> anyhow::Result<()> {
    let (header, rows) = tables.get(&src.table).with_context(|| format!("table {} unavailable", src.table))?;
    let row = rows.get(src.row).with_context(|| format!("row {} missing from {}", src.row, src.table))?;
    let cell = |name: &str| -> anyhow::Result<f64> {
        let k = header.iter().position(|h| h == name).with_context(|| format!("no column {name} in {}", src.table))?;
        Ok(row[k])
    };
    let m = cell(&src.measured_column)?;
    if c.measured != Some(m) {
        bail!("table holds {m:e} but summary records {:?}", c.measured);
    }
    if let Some(col) = &src.oracle_column {
        let o = cell(col)?;
        if o != c.oracle {
            bail!("table oracle {o:e} but summary records {:e}", c.oracle);
        }
    }
    Ok(())
}
