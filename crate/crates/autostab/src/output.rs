//! Result files: `result.csv`, `summary.json` and `plots/*.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{ConfigFile, Scenario};
use crate::runner::{Cell, Diagnostics, Failure, RunResult, Table};

/// Layout version of the files written by [`write_outputs`].
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub artifact_version: u32,
    pub tool_version: String,
    pub kind: String,
    pub figure: String,
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub rows: usize,
    pub files: Vec<String>,
    pub config: ConfigFile,
    pub resolved: Scenario,
    pub metrics: Map<String, Value>,
    pub diagnostics: Diagnostics,
    pub failures: Vec<Failure>,
}

pub fn table_to_csv(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Parses a result CSV; cells that read as numbers become numeric.
pub fn table_from_csv(text: &str) -> Result<Table> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = vec![];
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|s| match s.parse::<f64>() {
                    Ok(v) => Cell::Num(v),
                    Err(_) => Cell::text(s),
                })
                .collect(),
        );
    }
    Ok(Table { header, rows })
}

fn plot_csv(points: &[(f64, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["x", "y"])?;
    for (x, y) in points {
        w.write_record([Cell::Num(*x).to_string(), Cell::Num(*y).to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summarize(config: &ConfigFile, result: &RunResult, files: Vec<String>) -> Summary {
    let s = &result.scenario;
    Summary {
        artifact_version: ARTIFACT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: s.kind.label().to_string(),
        figure: s.kind.figure().to_string(),
        name: s.name.clone(),
        config_hash: s.config_hash(),
        seed: s.seed,
        rows: result.table.rows.len(),
        files,
        config: config.clone(),
        resolved: s.clone(),
        metrics: result.metrics.clone(),
        diagnostics: result.diagnostics,
        failures: result.failures.clone(),
    }
}

/// Writes every output of a run into `dir` and returns the summary.
pub fn write_outputs(dir: &Path, config: &ConfigFile, result: &RunResult) -> Result<Summary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |rel: &str, text: &str| -> Result<()> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    let mut files = vec!["result.csv".to_string()];
    write("result.csv", &table_to_csv(&result.table)?)?;
    for (name, text) in &result.files {
        write(name, text)?;
        files.push(name.clone());
    }
    for p in &result.plots {
        let rel = format!("plots/{}.csv", p.name);
        write(&rel, &plot_csv(&p.points)?)?;
        files.push(rel);
    }
    files.push("summary.json".into());
    let summary = summarize(config, result, files);
    write("summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok(summary)
}

/// Accepts a run directory or a file inside it and returns the directory.
pub fn result_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

pub fn load_result(path: &Path) -> Result<(Summary, Table)> {
    let dir = result_dir(path);
    let summary_path = dir.join("summary.json");
    let text = fs::read_to_string(&summary_path).with_context(|| format!("reading {}", summary_path.display()))?;
    let summary: Summary = serde_json::from_str(&text).with_context(|| format!("parsing {}", summary_path.display()))?;
    let csv_path = dir.join("result.csv");
    let text = fs::read_to_string(&csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    Ok((summary, table_from_csv(&text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let t = Table {
            header: vec!["family".into(), "x".into(), "status".into()],
            rows: vec![
                vec![Cell::text("psi_theta"), Cell::Num(0.1), Cell::text("ok")],
                vec![Cell::text("phi_theta"), Cell::Num(1e-12), Cell::text("failed")],
                vec![Cell::text("phi_theta"), Cell::Num(f64::NAN), Cell::text("failed")],
            ],
        };
        let text = table_to_csv(&t).unwrap();
        assert!(text.starts_with("family,x,status\npsi_theta,0.1,ok\nphi_theta,1e-12,failed\n"), "{text}");
        let back = table_from_csv(&text).unwrap();
        assert_eq!(back.header, t.header);
        assert_eq!(back.rows[..2], t.rows[..2]);
        assert!(back.rows[2][1].as_f64().unwrap().is_nan());
    }
}
