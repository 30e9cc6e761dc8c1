//! Experiment reports: a JSON document with sorted keys and fixed-precision
//! floats, plus the per-step table as CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA: &str = "shiftlab-report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    /// A computation with no thresholds attached.
    Computed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epsilon: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
}

impl StepRecord {
    pub fn new(step: usize, epsilon: Option<f64>) -> Self {
        Self {
            step,
            epsilon,
            metrics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_owned(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: String,
    /// Every parameter the run used, defaults and seed included.
    pub inputs: Value,
    pub per_step: Vec<StepRecord>,
    pub fitted_slope: Option<f64>,
    pub verdict: Verdict,
    /// Aggregates and flags that are not per step.
    pub summary: BTreeMap<String, Value>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, inputs: Value) -> Self {
        Self {
            schema: SCHEMA.to_owned(),
            experiment: experiment.to_owned(),
            inputs,
            per_step: Vec::new(),
            fitted_slope: None,
            verdict: Verdict::Computed,
            summary: BTreeMap::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_owned(), value.into());
    }

    /// Canonical JSON: keys sorted at every level, floats with 17 significant
    /// digits, one trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
        value.serialize(&mut ser)?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
    }

    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let keys: BTreeSet<&String> = self.per_step.iter().flat_map(|s| s.metrics.keys()).collect();
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_owned(), "epsilon".to_owned()];
        header.extend(keys.iter().map(|k| k.to_string()));
        wtr.write_record(&header)?;
        for s in &self.per_step {
            let mut row = vec![s.step.to_string(), s.epsilon.map(fmt_f64).unwrap_or_default()];
            row.extend(keys.iter().map(|k| s.metrics.get(*k).copied().map(fmt_f64).unwrap_or_default()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `<prefix>.report.json` and, if there are steps,
    /// `<prefix>.steps.csv`. Returns the paths written.
    pub fn write_artifacts(&self, prefix: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let json_path = with_suffix(prefix, ".report.json");
        std::fs::write(&json_path, self.to_json()?)?;
        written.push(json_path);
        if !self.per_step.is_empty() {
            let csv_path = with_suffix(prefix, ".steps.csv");
            self.write_steps_csv(std::fs::File::create(&csv_path)?)?;
            written.push(csv_path);
        }
        Ok(written)
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Compact JSON with every float written by [`fmt_f64`].
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo", json!({"seed": 42, "b": 0.1, "a": [1.0, 2]}));
        r.per_step.push(StepRecord::new(0, Some(0.1)).with("distance", 1.0 / 3.0));
        r.per_step.push(StepRecord::new(1, None).with("index", 1.0).with("distance", 0.25));
        r.fitted_slope = Some(1.0);
        r.verdict = Verdict::Pass;
        r
    }

    #[test]
    fn json_is_canonical() {
        let text = sample().to_json().unwrap();
        assert!(text.contains("\"distance\":3.3333333333333331e-1"));
        assert!(text.contains("\"inputs\":{\"a\":[1.0000000000000000e0,2],\"b\":1.0000000000000001e-1,\"seed\":42}"));
        assert!(text.find("\"experiment\"").unwrap() < text.find("\"fitted_slope\"").unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["schema"], SCHEMA);
        assert_eq!(back["verdict"], "pass");
        assert_eq!(text, sample().to_json().unwrap());
    }

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn steps_csv_has_union_of_metrics() {
        let mut buf = Vec::new();
        sample().write_steps_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,epsilon,distance,index");
        assert_eq!(lines[1], "0,1.0000000000000001e-1,3.3333333333333331e-1,");
        assert_eq!(lines[2], "1,,2.5000000000000000e-1,1.0000000000000000e0");
    }

    #[test]
    fn artifacts_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let written = sample().write_artifacts(&dir.path().join("out/run")).unwrap();
        assert_eq!(written.len(), 2);
        assert!(written[0].ends_with("run.report.json"));
        assert!(written[1].ends_with("run.steps.csv"));
    }
}
