//! Experiment reports: canonical JSON with a stable key order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datagen::SpectrumReport;
use crate::error::{Error, Result};

/// Residual statistics of one method on one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub cell: String,
    pub method: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// One entry per restart, seed or instance, depending on the cell.
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl MethodStats {
    /// Panics on an empty `residuals`.
    pub fn from_residuals(
        cell: impl Into<String>,
        method: impl Into<String>,
        residuals: Vec<f64>,
        iterations: Vec<usize>,
    ) -> Self {
        assert!(!residuals.is_empty(), "statistics of no residuals");
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let min = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            cell: cell.into(),
            method: method.into(),
            mean,
            min,
            max,
            residuals,
            iterations,
        }
    }
}

/// Singular values of one matrix in a cell, with the detected jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub cell: String,
    /// `"A"` for the input, `"X"` for the computed approximation.
    pub source: String,
    #[serde(flatten)]
    pub spectrum: SpectrumReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub cell: String,
    pub method: String,
    /// `(j, relative residual)` pairs.
    pub points: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spectra: Vec<SpectrumEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveEntry>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Serialize) {
        self.config.insert(key.to_owned(), to_value(value));
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_owned(), to_value(value));
    }

    pub fn method(&self, cell: &str, method: &str) -> Option<&MethodStats> {
        self.methods
            .iter()
            .find(|m| m.cell == cell && m.method == method)
    }

    /// Pretty, newline-terminated canonical form.
    pub fn to_canonical(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Single-line form for standard output.
    pub fn to_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).expect("report values are plain data")
}

pub fn parse_report(text: &str) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_report(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report.to_canonical()?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::detect_jump;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("table4", 9);
        r.echo("rows", 100);
        r.echo("ranks", [10, 20]);
        r.note("wall", 0.1 + 0.2);
        r.methods.push(MethodStats::from_residuals(
            "c",
            "HALS",
            vec![0.41, 0.4087, 1.0 / 3.0],
            vec![3, 4, 5],
        ));
        r.spectra.push(SpectrumEntry {
            cell: "c".into(),
            source: "X".into(),
            spectrum: detect_jump(&[3.0, 2.0, 1e-20]).unwrap(),
        });
        r.curves.push(CurveEntry {
            cell: "c".into(),
            method: "NLRM".into(),
            points: vec![(1, 0.5), (2, 1e-17)],
        });
        r
    }

    #[test]
    fn empty_report_has_config_only() {
        let mut r = ExperimentReport::new("approx", 0);
        r.echo("rank", 3);
        let text = r.to_canonical().unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["config", "experiment", "seed"]);
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let text = sample().to_canonical().unwrap();
        let parsed = parse_report(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(parsed.to_canonical().unwrap(), text);
        let line = sample().to_line().unwrap();
        assert!(!line.contains('\n'));
        assert_eq!(parse_report(&line).unwrap(), sample());
    }

    #[test]
    fn statistics() {
        let m = MethodStats::from_residuals("c", "MU", vec![3.0, 1.0, 2.0], vec![]);
        assert_eq!((m.mean, m.min, m.max), (2.0, 1.0, 3.0));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_report(&sample(), &p).unwrap();
        assert_eq!(read_report(&p).unwrap(), sample());
        assert!(write_report(&sample(), dir.path().join("missing/r.json")).is_err());
    }
}
