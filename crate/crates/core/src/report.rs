//! Residual records and check reports.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    /// Two sides that must agree; counts toward the verdict.
    Identity,
    /// Informational; never fails the check.
    Diagnostic,
    /// A contradiction that must be observed (or be vacuous).
    Obstruction,
    /// Not evaluated; `note` says why.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRecord {
    pub label: String,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub pass: bool,
    pub kind: RecordKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualRecord {
    pub fn skipped(label: impl Into<String>, reason: impl Into<String>) -> Self {
        ResidualRecord {
            label: label.into(),
            max_residual: 0.0,
            mean_residual: 0.0,
            samples: 0,
            tolerance: 0.0,
            pass: true,
            kind: RecordKind::Skipped,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn counts(&self) -> bool {
        matches!(self.kind, RecordKind::Identity | RecordKind::Obstruction)
    }
}

/// Running max/mean of absolute residuals.
#[derive(Debug, Clone, Default)]
pub struct Residuals {
    max: f64,
    sum: f64,
    count: usize,
    non_finite: bool,
}

impl Residuals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: f64) {
        let r = r.abs();
        if !r.is_finite() {
            self.non_finite = true;
        }
        self.max = self.max.max(r);
        self.sum += r;
        self.count += 1;
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = f64>) {
        for r in it {
            self.push(r);
        }
    }

    pub fn max(&self) -> f64 {
        if self.non_finite {
            f64::INFINITY
        } else {
            self.max
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else if self.non_finite {
            f64::INFINITY
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn record(&self, label: impl Into<String>, tolerance: f64, kind: RecordKind) -> ResidualRecord {
        ResidualRecord {
            label: label.into(),
            max_residual: self.max(),
            mean_residual: self.mean(),
            samples: self.count,
            tolerance,
            pass: self.max() <= tolerance,
            kind,
            note: None,
        }
    }

    pub fn identity(&self, label: impl Into<String>, tolerance: f64) -> ResidualRecord {
        self.record(label, tolerance, RecordKind::Identity)
    }

    pub fn diagnostic(&self, label: impl Into<String>, tolerance: f64) -> ResidualRecord {
        self.record(label, tolerance, RecordKind::Diagnostic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRow {
    pub sample: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub records: Vec<ResidualRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inequality: Vec<InequalityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inequality_tolerance: Option<f64>,
    pub metadata: BTreeMap<String, Value>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            pass: true,
            records: Vec::new(),
            inequality: Vec::new(),
            inequality_tolerance: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, record: ResidualRecord) {
        self.records.push(record);
        self.refresh();
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn set_inequality(&mut self, rows: Vec<InequalityRow>, tolerance: f64) {
        self.inequality = rows;
        self.inequality_tolerance = Some(tolerance);
        self.refresh();
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.inequality.iter().map(|r| r.margin).reduce(f64::min)
    }

    pub fn record(&self, label: &str) -> Option<&ResidualRecord> {
        self.records.iter().find(|r| r.label == label)
    }

    /// Records that count toward the verdict and failed.
    pub fn failures(&self) -> Vec<&ResidualRecord> {
        self.records.iter().filter(|r| r.counts() && !r.pass).collect()
    }

    fn refresh(&mut self) {
        let records_ok = self.records.iter().all(|r| !r.counts() || r.pass);
        let ineq_ok = match self.inequality_tolerance {
            Some(tol) => self.inequality.iter().all(|r| r.margin >= -tol),
            None => true,
        };
        self.pass = records_ok && ineq_ok;
    }

    /// Turn the record named `label` into a diagnostic.
    pub fn demote(&mut self, label: &str, note: &str) {
        for r in self.records.iter_mut().filter(|r| r.label == label) {
            r.kind = RecordKind::Diagnostic;
            r.note = Some(note.to_string());
        }
        self.refresh();
    }

    /// Tighten every identity tolerance (and the inequality tolerance) to at
    /// most the given values, re-evaluating pass flags.
    pub fn retolerance(&mut self, identity: Option<f64>, inequality: Option<f64>) {
        if let Some(tol) = identity {
            for r in self.records.iter_mut().filter(|r| r.kind == RecordKind::Identity) {
                r.tolerance = tol;
                r.pass = r.max_residual <= tol;
            }
        }
        if let (Some(tol), Some(_)) = (inequality, self.inequality_tolerance) {
            self.inequality_tolerance = Some(tol);
        }
        self.refresh();
    }
}
