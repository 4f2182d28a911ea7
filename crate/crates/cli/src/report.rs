use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const HEADER: &str = "experiment,parameters,claim,measured,tolerance,status";

/// One asserted claim of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub parameters: String,
    pub claim: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_record(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                chars.next();
                out.last_mut().unwrap().push('"');
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(String::new()),
            c => out.last_mut().unwrap().push(c),
        }
    }
    out
}

impl ResultRow {
    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn to_record(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{}",
            field(&self.experiment),
            field(&self.parameters),
            field(&self.claim),
            self.measured,
            self.tolerance,
            self.status()
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f = split_record(line);
        let [experiment, parameters, claim, measured, tolerance, status] = f.as_slice() else {
            bail!("expected 6 fields, got {}", f.len());
        };
        let pass = match status.as_str() {
            "PASS" => true,
            "FAIL" => false,
            s => bail!("status must be PASS or FAIL, got '{s}'"),
        };
        Ok(Self {
            experiment: experiment.clone(),
            parameters: parameters.clone(),
            claim: claim.clone(),
            measured: measured.parse().with_context(|| format!("measured '{measured}'"))?,
            tolerance: tolerance.parse().with_context(|| format!("tolerance '{tolerance}'"))?,
            pass,
        })
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("{HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{}", r.to_record());
    }
    s
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading result file {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        _ => bail!("{}: missing header '{HEADER}'", path.display()),
    }
    lines
        .enumerate()
        .map(|(i, l)| ResultRow::parse(l).with_context(|| format!("{}: row {}", path.display(), i + 1)))
        .collect()
}

/// Concatenates the result rows of every file, in order.
pub fn emit_report(paths: &[impl AsRef<Path>]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_rows(p.as_ref())?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pass: bool) -> ResultRow {
        ResultRow {
            experiment: "region".into(),
            parameters: "d1=3,d2=3".into(),
            claim: "nonempty \"D\"".into(),
            measured: 12.0,
            tolerance: 0.0,
            pass,
        }
    }

    #[test]
    fn record_round_trip() {
        for pass in [true, false] {
            let r = row(pass);
            assert_eq!(ResultRow::parse(&r.to_record()).unwrap(), r);
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let none: [&Path; 0] = [];
        assert_eq!(to_csv(&emit_report(&none).unwrap()), format!("{HEADER}\n"));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(emit_report(&[Path::new("/nonexistent/result.csv")]).is_err());
    }
}
