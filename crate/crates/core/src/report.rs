//! Machine-readable verdicts for the numerical checks.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The premise of the property does not hold for these parameters; the
    /// property was not tested.
    HypothesisNotSatisfied,
    /// A strict inequality holds only within the strictness floor.
    IndistinguishableFromEquality,
}

impl Status {
    pub fn is_hard_failure(self) -> bool {
        self == Status::Fail
    }
}

/// Tolerances for bound checks: `atol + rtol·scale`, with `scale` a
/// spectral-norm estimate; strict inequalities must clear `strictness·scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
    pub strictness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { atol: 1e-9, rtol: 1e-8, strictness: 1e-10 }
    }
}

impl Tolerances {
    pub fn bound(&self, scale: f64) -> f64 {
        self.atol + self.rtol * scale
    }

    pub fn floor(&self, scale: f64) -> f64 {
        self.strictness * scale
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    /// Plain statement of the property that was tested.
    pub property: String,
    pub status: Status,
    /// Smallest margin (right side minus left side) over all assertions;
    /// negative values are violations.
    pub worst_slack: f64,
    pub samples: usize,
    pub details: Value,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        !self.status.is_hard_failure()
    }
}

/// Accumulates margins of one check into a verdict.
#[derive(Debug, Clone)]
pub struct Verdict {
    worst: f64,
    samples: usize,
    failed: bool,
    indistinct: bool,
    notes: Vec<String>,
}

impl Default for Verdict {
    fn default() -> Self {
        Verdict { worst: f64::INFINITY, samples: 0, failed: false, indistinct: false, notes: Vec::new() }
    }
}

impl Verdict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `lhs ≤ rhs` as the margin `rhs − lhs`; fails below `−tol`.
    pub fn at_most(&mut self, lhs: f64, rhs: f64, tol: f64, what: impl FnOnce() -> String) -> bool {
        let margin = rhs - lhs;
        self.samples += 1;
        self.worst = self.worst.min(margin);
        let ok = margin >= -tol && margin.is_finite();
        if !ok {
            self.failed = true;
            if self.notes.len() < 20 {
                self.notes.push(format!("{}: margin {margin:.3e} (tol {tol:.1e})", what()));
            }
        }
        ok
    }

    /// Records `lhs < rhs`: margins at or below `floor` but within `tol`
    /// count as indistinguishable from equality.
    pub fn strictly_below(&mut self, lhs: f64, rhs: f64, floor: f64, tol: f64, what: impl Fn() -> String) {
        if self.at_most(lhs, rhs, tol, &what) && rhs - lhs <= floor {
            self.indistinct = true;
            if self.notes.len() < 20 {
                self.notes.push(format!("{}: strict inequality within floor {floor:.1e}", what()));
            }
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn fail(&mut self, s: impl Into<String>) {
        self.failed = true;
        self.notes.push(s.into());
    }

    pub fn status(&self) -> Status {
        if self.failed {
            Status::Fail
        } else if self.indistinct {
            Status::IndistinguishableFromEquality
        } else {
            Status::Pass
        }
    }

    pub fn finish(self, check: &str, property: &str, details: Value) -> CheckReport {
        CheckReport {
            check: check.to_string(),
            property: property.to_string(),
            status: self.status(),
            worst_slack: if self.worst.is_finite() { self.worst } else { 0.0 },
            samples: self.samples,
            details,
            notes: self.notes,
        }
    }
}

/// Report for a property whose premise failed.
pub fn hypothesis_not_satisfied(check: &str, property: &str, reason: String, details: Value) -> CheckReport {
    CheckReport {
        check: check.to_string(),
        property: property.to_string(),
        status: Status::HypothesisNotSatisfied,
        worst_slack: 0.0,
        samples: 0,
        details,
        notes: vec![reason],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_statuses() {
        let mut v = Verdict::new();
        v.at_most(1.0, 2.0, 1e-9, || "a".into());
        assert_eq!(v.status(), Status::Pass);
        v.strictly_below(1.0, 1.0 + 1e-14, 1e-12, 1e-9, || "b".into());
        assert_eq!(v.status(), Status::IndistinguishableFromEquality);
        v.at_most(1.0, 0.5, 1e-9, || "c".into());
        assert_eq!(v.status(), Status::Fail);
        let r = v.finish("x", "y", Value::Null);
        assert!((r.worst_slack + 0.5).abs() < 1e-15);
        assert_eq!(r.samples, 3);
    }
}
