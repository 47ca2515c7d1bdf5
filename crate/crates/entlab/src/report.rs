//! Structured outcome of an inequality or claim check.

use serde::{Deserialize, Serialize};

/// A `log2 kappa` contribution counted with `multiplier` on the right side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaTerm {
    pub kappa: f64,
    pub multiplier: f64,
}

/// Both sides of a check, its slack and verdict.
///
/// `slack` is oriented so that a nonnegative value means the check holds;
/// `pass` is `slack >= -tolerance`. Diagnostic reports carry
/// `normative = false` and always pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa_terms: Vec<KappaTerm>,
    pub pass: bool,
    pub normative: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Report {
    /// Check of `lhs <= rhs`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        Report {
            name: name.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            kappa_terms: Vec::new(),
            pass: slack >= -tolerance,
            normative: true,
            note: None,
        }
    }

    /// Check of `lhs >= rhs`.
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = Report::le(name, rhs, lhs, tolerance);
        std::mem::swap(&mut r.lhs, &mut r.rhs);
        r
    }

    /// Check of `|lhs - rhs| <= tolerance`; slack is `tolerance - |lhs - rhs|`
    /// and the verdict uses no extra tolerance.
    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = tolerance - (lhs - rhs).abs();
        Report {
            name: name.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            kappa_terms: Vec::new(),
            pass: slack >= 0.0,
            normative: true,
            note: None,
        }
    }

    /// Check that `lo <= value <= hi`; `lhs` holds the value and `rhs` the
    /// nearer bound.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let slack = (value - lo).min(hi - value);
        let rhs = if value - lo < hi - value { lo } else { hi };
        Report {
            name: name.into(),
            lhs: value,
            rhs,
            slack,
            tolerance: 0.0,
            kappa_terms: Vec::new(),
            pass: slack >= 0.0,
            normative: true,
            note: Some(format!("band [{lo}, {hi}]")),
        }
    }

    /// Reported value with no verdict.
    pub fn diagnostic(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Report {
            name: name.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance: 0.0,
            kappa_terms: Vec::new(),
            pass: true,
            normative: false,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_kappa(mut self, kappa: f64, multiplier: f64) -> Self {
        self.kappa_terms.push(KappaTerm { kappa, multiplier });
        self
    }

    /// One JSON object per line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}
