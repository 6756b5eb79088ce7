//! Report plumbing: JSON emission and CSV tables.

use crate::error::Result;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Per-check numerical verdict with its extremal witness.
#[derive(Debug, Clone, Serialize)]
pub struct VerifierReport {
    /// which check this is (descriptive id, e.g. "metric_comparability")
    pub check: String,
    pub sample_count: usize,
    /// worst observed ratio against the allowed constant (≤ 1 means holds)
    pub worst_ratio: f64,
    pub verdict: CheckVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckVerdict {
    Holds,
    Violated,
    ResolutionLimited,
}

impl VerifierReport {
    /// A violation must exceed the combined discretization tolerance before
    /// it is reported as mathematical: below that it is resolution-limited.
    pub fn classify(check: &str, sample_count: usize, worst_ratio: f64, tolerance: f64) -> Self {
        let verdict = if worst_ratio <= 1.0 {
            CheckVerdict::Holds
        } else if worst_ratio <= tolerance {
            CheckVerdict::ResolutionLimited
        } else {
            CheckVerdict::Violated
        };
        Self {
            check: check.to_string(),
            sample_count,
            worst_ratio,
            verdict,
            witness: None,
            detail: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Serialize) -> Self {
        self.witness = serde_json::to_value(witness).ok();
        self
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = serde_json::to_value(detail).ok();
        self
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?.as_bytes())?;
    Ok(())
}

impl From<serde_json::Error> for crate::error::Error {
    fn from(e: serde_json::Error) -> Self {
        crate::error::Error::InvalidInput(format!("json: {e}"))
    }
}

/// Minimal CSV writer: header row plus numeric/string records.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { buf: header.join(",") + "\n", columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.buf.as_bytes())?;
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_thresholds() {
        let r = VerifierReport::classify("x", 10, 0.9, 1.2);
        assert_eq!(r.verdict, CheckVerdict::Holds);
        let r = VerifierReport::classify("x", 10, 1.1, 1.2);
        assert_eq!(r.verdict, CheckVerdict::ResolutionLimited);
        let r = VerifierReport::classify("x", 10, 1.5, 1.2);
        assert_eq!(r.verdict, CheckVerdict::Violated);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&["1".into(), "2".into()]);
        assert_eq!(c.as_str(), "a,b\n1,2\n");
    }
}
