//! CSV and JSON result files with embedded run metadata.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::sweep::SweepRow;
use crate::error::Result;

/// Bumped whenever a column or JSON field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputMetadata {
    pub schema_version: u32,
    pub code_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Effective configuration after defaults and overrides.
    pub config: serde_json::Value,
}

impl OutputMetadata {
    pub fn new(config: serde_json::Value) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            schema_version: SCHEMA_VERSION,
            code_version: crate::VERSION.to_string(),
            timestamp,
            config,
        }
    }
}

pub fn csv_header() -> &'static str {
    "N,delta,f,gamma,B,solver,J,S,purity,converged,residual"
}

fn csv_line(row: &SweepRow) -> String {
    let p = &row.params;
    let (j, s, purity) = match &row.record {
        Some(r) => (r.current.to_string(), r.entropy.to_string(), r.purity.to_string()),
        None => ("NaN".into(), "NaN".into(), "NaN".into()),
    };
    let (converged, residual) = match &row.report {
        Some(r) => (r.converged.to_string(), r.residual.to_string()),
        None => ("false".into(), "NaN".into()),
    };
    format!(
        "{},{},{},{},{},{},{j},{s},{purity},{converged},{residual}",
        p.n_sites, p.interaction, p.bias, p.dephasing, p.staggered, row.solver
    )
}

/// `stem` with `suffix` appended, leaving any dots in the stem alone.
pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct JsonOutput<'a, T: Serialize> {
    metadata: &'a OutputMetadata,
    rows: &'a T,
}

/// Writes `<stem>.csv` (metadata as `#` lines, then `header` and `lines`) and
/// `<stem>.json` (metadata plus `rows`); returns both paths.
pub fn write_table<T: Serialize>(
    stem: &Path,
    meta: &OutputMetadata,
    header: &str,
    lines: &[String],
    rows: &T,
) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let csv_path = with_suffix(stem, ".csv");
    let json_path = with_suffix(stem, ".json");

    let mut csv = Vec::new();
    writeln!(csv, "# schema_version={}", meta.schema_version)?;
    writeln!(csv, "# code_version={}", meta.code_version)?;
    writeln!(csv, "# timestamp={}", meta.timestamp)?;
    writeln!(csv, "# config={}", serde_json::to_string(&meta.config)?)?;
    writeln!(csv, "{header}")?;
    for line in lines {
        writeln!(csv, "{line}")?;
    }
    fs::write(&csv_path, csv)?;
    fs::write(&json_path, serde_json::to_vec_pretty(&JsonOutput { metadata: meta, rows })?)?;
    Ok((csv_path, json_path))
}

/// Sweep rows in the standard column layout.
pub fn write_results(stem: &Path, meta: &OutputMetadata, rows: &[SweepRow]) -> Result<(PathBuf, PathBuf)> {
    let lines: Vec<String> = rows.iter().map(csv_line).collect();
    write_table(stem, meta, csv_header(), &lines, &rows)
}
