use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{Format, RunReport};

/// Fixed-width verdict table followed by faults.
pub fn render_text(report: &RunReport) -> String {
    let mut s = String::new();
    let p = &report.provenance;
    let _ = writeln!(s, "scenario {} ({} {}, schema {}, seed {})", report.scenario, p.tool, p.version, p.schema, p.seed);
    let width = report.checks.iter().map(|c| c.label.chars().count()).max().unwrap_or(5).max(5);
    let _ = writeln!(s, "{:>3}  {:<width$}  {:<22}  {:<16}  summary", "#", "label", "check", "verdict");
    for c in &report.checks {
        let verdict = match c.expect {
            Some(e) if c.computed != c.verdict || e != super::Verdict::Pass => format!("{} ({})", word(c.verdict), word(c.computed)),
            _ => word(c.verdict).to_string(),
        };
        let time = c.elapsed_ms.map_or(String::new(), |t| format!(" [{t:.0} ms]"));
        let _ = writeln!(s, "{:>3}  {:<width$}  {:<22}  {:<16}  {}{time}", c.index, c.label, c.kind, verdict, c.summary);
    }
    let _ = writeln!(
        s,
        "totals: {} pass, {} fail, {} inconclusive, {} vacuous",
        report.count(super::Verdict::Pass),
        report.count(super::Verdict::Fail),
        report.count(super::Verdict::Inconclusive),
        report.count(super::Verdict::Vacuous)
    );
    if !report.faults.is_empty() {
        let _ = writeln!(s, "faults:");
        for f in &report.faults {
            let _ = writeln!(s, "  {} {}: {}", f.index, f.label, f.message);
        }
    }
    s
}

fn word(v: super::Verdict) -> &'static str {
    match v {
        super::Verdict::Pass => "pass",
        super::Verdict::Fail => "fail",
        super::Verdict::Inconclusive => "inconclusive",
        super::Verdict::Vacuous => "vacuous",
    }
}

pub fn render_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// One row per check: index, label, kind, verdicts and summary.
pub fn render_csv_summary(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "label", "check", "verdict", "computed", "expect", "summary"]).expect("in-memory csv");
    for c in &report.checks {
        w.write_record([
            c.index.to_string(),
            c.label.clone(),
            c.kind.clone(),
            word(c.verdict).to_string(),
            word(c.computed).to_string(),
            c.expect.map_or(String::new(), |e| word(e).to_string()),
            c.summary.clone(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    Ok(path)
}

/// Writes the report into `dir` and returns the written paths.
///
/// `text` writes `report.txt`, `json` writes `report.json`, `csv` writes
/// `summary.csv` and one `check_NN_<table>.csv` per table of each check.
pub fn emit_report(report: &RunReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), message: e.to_string() })?;
    match format {
        Format::Text => Ok(vec![write(dir, "report.txt", &render_text(report))?]),
        Format::Json => {
            let mut r = report.clone();
            r.artifacts = vec!["report.json".to_string()];
            Ok(vec![write(dir, "report.json", &render_json(&r))?])
        }
        Format::Csv => {
            let mut out = vec![write(dir, "summary.csv", &render_csv_summary(report))?];
            for c in &report.checks {
                for (name, body) in &c.tables {
                    out.push(write(dir, &format!("check_{:02}_{name}.csv", c.index), body)?);
                }
            }
            Ok(out)
        }
    }
}
