//! CSV tables with a `#`-prefixed manifest header, plus the JSON sidecar.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::HarnessError;

pub const SOFTWARE: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// How every grid point derives its random numbers from the master seed.
pub const SUB_SEED_RULE: &str = "every grid point reuses the master seed (common random numbers); \
trial t draws from ChaCha8 stream t of that seed: channel row-major (re, im), then amplitudes, then phases";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Shortest round-tripping decimal, so values re-parse to the same bits.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Everything needed to rerun an experiment and get the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub software: &'static str,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub sub_seed_rule: &'static str,
    /// Per-node broadcast power actually used.
    pub p_s: f64,
    pub p_total: f64,
    pub snr_definition: &'static str,
    pub rows: usize,
    /// Headline results, e.g. measured crossovers.
    pub results: Vec<(String, String)>,
}

/// A finished experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub manifest: RunManifest,
    pub table: Table,
}

impl Report {
    pub fn new(cfg: &ExperimentConfig, p_s: f64, p_total: f64, table: Table, results: Vec<(String, String)>) -> Self {
        let manifest = RunManifest {
            software: SOFTWARE,
            experiment: cfg.experiment,
            config: cfg.clone(),
            master_seed: cfg.seed,
            sub_seed_rule: SUB_SEED_RULE,
            p_s,
            p_total,
            snr_definition: "snr_db = 10 log10(P_total / sigma_n^2)",
            rows: table.rows.len(),
            results,
        };
        Self { manifest, table }
    }

    pub fn result(&self, key: &str) -> Option<&str> {
        self.manifest.results.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// The CSV file contents. Contains nothing that varies between reruns.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let m = &self.manifest;
        let mut out = String::new();
        let mut line = |k: &str, v: &str| out.push_str(&format!("# {k}: {v}\n"));
        line("software", m.software);
        line("experiment", m.experiment.name());
        line("config", &serde_json::to_string(&m.config)?);
        line("master_seed", &m.master_seed.to_string());
        line("sub_seed_rule", m.sub_seed_rule);
        line("p_s", &num(m.p_s));
        line("p_total", &num(m.p_total));
        line("snr_definition", m.snr_definition);
        line("rows", &m.rows.to_string());
        for (k, v) in &m.results {
            line(k, v);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.table.columns)?;
        for row in &self.table.rows {
            w.write_record(row)?;
        }
        let body = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    /// Sidecar manifest with run-specific facts that stay out of the CSV.
    pub fn sidecar_json(&self, wall_clock_s: f64, workers: usize) -> Result<String, HarnessError> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            #[serde(flatten)]
            manifest: &'a RunManifest,
            wall_clock_s: f64,
            workers: usize,
        }
        Ok(serde_json::to_string_pretty(&Sidecar { manifest: &self.manifest, wall_clock_s, workers })?)
    }
}

/// `results.csv` -> `results.csv.manifest.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

/// Writes the CSV and its sidecar, creating parent directories.
pub fn write_report(report: &Report, path: &Path, wall_clock_s: f64, workers: usize) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, report.to_csv()?)?;
    std::fs::write(sidecar_path(path), report.sidecar_json(wall_clock_s, workers)?)?;
    Ok(())
}

/// Data rows of a CSV produced by [`Report::to_csv`], header row first.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<String>>, HarnessError> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    r.records().map(|rec| Ok(rec?.iter().map(str::to_string).collect())).collect()
}
