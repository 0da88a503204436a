//! Experiment reports.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Flag,
    Fail,
    Error,
}

impl Verdict {
    /// Process exit status for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Flag => 1,
            Verdict::Fail => 2,
            Verdict::Error => 3,
        }
    }

    /// The worse of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        if other.exit_code() > self.exit_code() {
            other
        } else {
            self
        }
    }
}

/// A measured number with its tolerance and, when there is one, the
/// bound or target it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Option<f64>,
}

/// Tabular data written as one CSV file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Curve {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: Vec<(String, String)>,
    pub measurements: Vec<Measurement>,
    pub curves: Vec<Curve>,
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub notes: Vec<String>,
    /// Wall-clock seconds; kept out of the structured report so that
    /// reruns compare byte for byte.
    #[serde(skip)]
    pub runtime_seconds: Option<f64>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            parameters: Vec::new(),
            measurements: Vec::new(),
            curves: Vec::new(),
            verdict: Verdict::Pass,
            reason: None,
            notes: Vec::new(),
            runtime_seconds: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn measure(&mut self, name: &str, value: f64, tolerance: f64, bound: Option<f64>) -> &mut Self {
        self.measurements.push(Measurement {
            name: name.into(),
            value,
            tolerance,
            bound,
        });
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// Lowers the verdict to `v` (never raises it) and records why.
    pub fn downgrade(&mut self, v: Verdict, reason: impl Into<String>) -> &mut Self {
        if v.exit_code() > self.verdict.exit_code() {
            self.verdict = v;
            self.reason = Some(reason.into());
        }
        self
    }

    /// Error report for a failed run.
    pub fn error(experiment: &str, reason: impl Into<String>) -> Self {
        let mut r = ExperimentReport::new(experiment);
        r.verdict = Verdict::Error;
        r.reason = Some(reason.into());
        r
    }

    /// Applies the rule that a report without measurements is an error.
    pub fn finalize(mut self) -> Self {
        if self.measurements.is_empty() && self.verdict != Verdict::Error {
            self.verdict = Verdict::Error;
            self.reason = Some("no measurements were produced".into());
        }
        self
    }
}
