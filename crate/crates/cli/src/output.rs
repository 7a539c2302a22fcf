//! `report.json`, the append-only `ledger.csv` and the optional data files.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::outcome::{Check, RunOutput};
use parex_core::report::RatioReport;

pub const SCHEMA: u32 = 1;

const LEDGER_HEADER: &str = "timestamp,config_hash,subcommand,kind,verdict,q,nu,scales,region,lhs,rhs,ratio,exponent,seed";

#[derive(Serialize)]
struct ReportFile<'a> {
    schema: u32,
    subcommand: &'a str,
    config_hash: &'a str,
    timestamp: u64,
    config: &'a Value,
    checks: &'a [Check],
    reports: &'a [RatioReport],
    data: &'a Value,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn ledger_rows(timestamp: u64, hash: &str, sub: &str, out: &RunOutput) -> Vec<String> {
    let mut rows = Vec::new();
    for r in &out.reports {
        let scales = r.scales.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        rows.push(
            [
                timestamp.to_string(),
                hash.into(),
                sub.into(),
                csv_field(&r.kind),
                "REPORT".into(),
                format!("{:e}", r.q),
                opt(r.nu),
                scales,
                csv_field(&r.region),
                format!("{:e}", r.lhs),
                format!("{:e}", r.rhs),
                format!("{:e}", r.ratio),
                opt(r.exponent),
                r.seed.to_string(),
            ]
            .join(","),
        );
    }
    for c in &out.checks {
        rows.push(
            [
                timestamp.to_string(),
                hash.into(),
                sub.into(),
                csv_field(&format!("check:{}", c.name)),
                c.verdict.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("{:e}", c.value),
                opt(c.tolerance),
                String::new(),
                String::new(),
                String::new(),
            ]
            .join(","),
        );
    }
    rows
}

/// Write every output of one run into `dir`.
pub fn write_all(dir: &Path, sub: &str, hash: &str, config: &Value, timestamp: u64, out: &RunOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let report = ReportFile {
        schema: SCHEMA,
        subcommand: sub,
        config_hash: hash,
        timestamp,
        config,
        checks: &out.checks,
        reports: &out.reports,
        data: &out.data,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    if let Some(f) = &out.field_csv {
        fs::write(dir.join("field.csv"), f)?;
    }
    if let Some(d) = &out.density_csv {
        fs::write(dir.join("density.csv"), d)?;
    }
    let path = dir.join("ledger.csv");
    let fresh = !path.exists();
    let mut ledger = OpenOptions::new().create(true).append(true).open(&path)?;
    if fresh {
        writeln!(ledger, "# schema={SCHEMA}")?;
        writeln!(ledger, "{LEDGER_HEADER}")?;
    }
    for row in ledger_rows(timestamp, hash, sub, out) {
        writeln!(ledger, "{row}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::Check;

    #[test]
    fn ledger_appends_with_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let out = RunOutput { checks: vec![Check::new("a,b", true, 1.0, Some(2.0), "x".into())], ..Default::default() };
        for ts in [1, 2] {
            write_all(dir.path(), "grid", "h", &Value::Null, ts, &out).unwrap();
        }
        let text = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains("\"check:a,b\",PASS"));
        assert_eq!(lines[2].split(',').count(), LEDGER_HEADER.split(',').count() + 1);
    }
}
