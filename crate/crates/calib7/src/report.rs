//! Verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Summary statistics of a residual over a set of samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub count: usize,
    pub excluded: usize,
    pub max: f64,
    pub mean: f64,
    pub rms: f64,
}

impl ResidualStats {
    /// Stats over `values` in the given order, so reductions are reproducible.
    pub fn from_values(values: &[f64], excluded: usize) -> Self {
        if values.is_empty() {
            return ResidualStats { excluded, ..Default::default() };
        }
        let n = values.len() as f64;
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for &v in values {
            max = if v.is_nan() || max.is_nan() { f64::NAN } else { max.max(v) };
            sum += v;
            sq += v * v;
        }
        ResidualStats { count: values.len(), excluded, max, mean: sum / n, rms: (sq / n).sqrt() }
    }
}

/// Where a report's inputs came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
    pub version: String,
}

/// Result of one verification: residual statistics judged against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub passed: bool,
    pub tolerance: f64,
    pub residual: ResidualStats,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    pub provenance: Provenance,
}

impl Report {
    /// A report that passes iff `residual.max < tolerance` and nothing was flagged as failing.
    pub fn new(check: impl Into<String>, tolerance: f64, residual: ResidualStats) -> Self {
        let passed = residual.count > 0 && residual.max < tolerance;
        Report {
            check: check.into(),
            passed,
            tolerance,
            residual,
            metrics: BTreeMap::new(),
            flags: Vec::new(),
            provenance: Provenance { version: crate::VERSION.to_string(), ..Default::default() },
        }
    }

    pub fn from_values(check: impl Into<String>, tolerance: f64, values: &[f64], excluded: usize) -> Self {
        Report::new(check, tolerance, ResidualStats::from_values(values, excluded))
    }

    pub fn max(&self) -> f64 {
        self.residual.max
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn with_metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    /// Attach a flag that also forces the report to fail.
    pub fn fail_with(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self.passed = false;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.provenance.seed = Some(seed);
        self
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.provenance.params.insert(key.into(), v);
        self
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_and_pass() {
        let r = Report::from_values("x", 1e-3, &[1e-4, 3e-4, 2e-4], 1);
        assert!(r.passed);
        assert_eq!(r.residual.count, 3);
        assert_eq!(r.residual.excluded, 1);
        assert!((r.max() - 3e-4).abs() < 1e-18);
        assert!((r.residual.mean - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn empty_report_does_not_pass() {
        assert!(!Report::from_values("x", 1.0, &[], 4).passed);
    }

    #[test]
    fn nan_residual_fails() {
        assert!(!Report::from_values("x", 1.0, &[0.1, f64::NAN], 0).passed);
    }
}
