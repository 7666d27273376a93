//! Grid sweeps over chain parameters, parallel and resumable.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{with_suffix, write_results, OutputMetadata};
use super::{solve_point, SolverOptions};
use crate::error::{invalid, Result};
use crate::exact::{ConvergenceReport, ObservableRecord};
use crate::model::ChainParameters;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n_sites: Vec<usize>,
    pub interaction: Vec<f64>,
    pub bias: Vec<f64>,
    pub dephasing: Vec<f64>,
    pub staggered: Vec<f64>,
    pub coupling: f64,
    pub hopping: f64,
    pub solver: SolverOptions,
    /// Output path without extension; `.csv`, `.json` and `.partial.jsonl` are appended.
    pub output: PathBuf,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_sites: vec![6],
            interaction: vec![0.0, 1.0, 2.0],
            bias: vec![1.0],
            dephasing: vec![0.0, 0.05, 0.2],
            staggered: vec![0.0],
            coupling: 1.0,
            hopping: 1.0,
            solver: SolverOptions::default(),
            output: PathBuf::from("sweep"),
        }
    }
}

impl SweepConfig {
    /// All grid points in row-major order (N outermost, staggered innermost).
    pub fn points(&self) -> Result<Vec<ChainParameters>> {
        let axes = [
            ("n_sites", self.n_sites.len()),
            ("interaction", self.interaction.len()),
            ("bias", self.bias.len()),
            ("dephasing", self.dephasing.len()),
            ("staggered", self.staggered.len()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(invalid(format!("sweep axis `{name}` is empty")));
        }
        let mut out = Vec::new();
        for &n in &self.n_sites {
            for &d in &self.interaction {
                for &f in &self.bias {
                    for &g in &self.dephasing {
                        for &b in &self.staggered {
                            let p = ChainParameters::new(n, d, f, g)
                                .with_staggered(b)
                                .with_coupling(self.coupling)
                                .with_hopping(self.hopping);
                            p.validate()?;
                            out.push(p);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn partial_path(&self) -> PathBuf {
        with_suffix(&self.output, ".partial.jsonl")
    }
}

/// One sweep point; `error` is set and `record` empty when the solve failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: ChainParameters,
    pub solver: String,
    pub record: Option<ObservableRecord>,
    pub report: Option<ConvergenceReport>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.converged)
    }
}

fn key(p: &ChainParameters) -> String {
    serde_json::to_string(p).expect("parameters serialize")
}

fn load_partial(path: &Path) -> Result<Vec<SweepRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for line in BufReader::new(fs::File::open(path)?).lines() {
        let line = line?;
        // A run killed mid-write leaves a truncated last line; drop it.
        if let Ok(row) = serde_json::from_str::<SweepRow>(&line) {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Solves every grid point, appending each finished row to the partial file so
/// an interrupted sweep resumes where it stopped. Returns rows in grid order
/// after writing the CSV and JSON outputs.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let points = config.points()?;
    let partial = config.partial_path();
    if let Some(dir) = partial.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let wanted: HashSet<String> = points.iter().map(key).collect();
    let mut done: Vec<SweepRow> =
        load_partial(&partial)?.into_iter().filter(|r| wanted.contains(&key(&r.params))).collect();
    let done_keys: HashSet<String> = done.iter().map(|r| key(&r.params)).collect();
    let todo: Vec<ChainParameters> = points.iter().filter(|p| !done_keys.contains(&key(p))).copied().collect();
    // Rewrite the partial file without any truncated line before appending.
    let kept: String = done.iter().map(|r| serde_json::to_string(r).map(|l| l + "\n")).collect::<std::result::Result<_, _>>()?;
    fs::write(&partial, kept)?;

    let writer = Mutex::new(OpenOptions::new().create(true).append(true).open(&partial)?);
    let fresh: Vec<SweepRow> = todo
        .par_iter()
        .map(|p| -> Result<SweepRow> {
            let row = match solve_point(p, &config.solver) {
                Ok(pt) => SweepRow {
                    params: *p,
                    solver: pt.solver,
                    record: Some(pt.record),
                    report: Some(pt.report),
                    error: None,
                },
                Err(e) => SweepRow {
                    params: *p,
                    solver: if config.solver.uses_exact(p.n_sites) { "exact" } else { "mpo" }.into(),
                    record: None,
                    report: None,
                    error: Some(e.to_string()),
                },
            };
            let line = serde_json::to_string(&row)?;
            let mut w = writer.lock().expect("writer lock");
            writeln!(w, "{line}")?;
            w.flush()?;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    done.extend(fresh);

    let order: std::collections::HashMap<String, usize> =
        points.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
    done.sort_by_key(|r| order[&key(&r.params)]);
    let meta = OutputMetadata::new(serde_json::to_value(config)?);
    write_results(&config.output, &meta, &done)?;
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SolverChoice;

    fn small(dir: &Path) -> SweepConfig {
        SweepConfig {
            n_sites: vec![3],
            interaction: vec![0.0, 1.0],
            bias: vec![0.5],
            dephasing: vec![0.0, 0.1],
            solver: SolverOptions { solver: SolverChoice::Exact, ..Default::default() },
            output: dir.join("out/sweep"),
            ..Default::default()
        }
    }

    #[test]
    fn writes_outputs_in_grid_order() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(SweepRow::converged));
        assert_eq!(rows[1].params.dephasing, 0.1);
        assert_eq!(rows[2].params.interaction, 1.0);
        let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
        assert!(csv.starts_with("# schema_version=1"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
    }

    #[test]
    fn resumes_from_partial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let first = run_sweep(&cfg).unwrap();
        // Corrupt the stored current of one row; a resumed sweep must reuse it.
        let partial = cfg.partial_path();
        let mut rows = load_partial(&partial).unwrap();
        rows[0].record.as_mut().unwrap().current = 123.0;
        let text: String = rows.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        fs::write(&partial, text + "{\"trunc").unwrap();
        let again = run_sweep(&cfg).unwrap();
        assert_eq!(again.len(), first.len());
        assert!(again.iter().any(|r| r.record.as_ref().unwrap().current == 123.0));
    }

    #[test]
    fn rejects_empty_axis() {
        let cfg = SweepConfig { bias: vec![], ..Default::default() };
        assert!(cfg.points().is_err());
    }
}
