//! Structured results of one experiment or principle check.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub description: String,
    pub residual: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub description: String,
    pub extremal_value: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub hypotheses: Vec<Hypothesis>,
    pub conclusion: Conclusion,
    /// Allowed undershoot below zero for the conclusion's sign condition.
    pub tolerance: f64,
    /// Named scalar diagnostics (constants, timings, sweep values).
    #[serde(default)]
    pub metrics: Vec<(String, f64)>,
    #[serde(default)]
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        ExperimentReport {
            name: name.into(),
            hypotheses: Vec::new(),
            conclusion: Conclusion { description: String::new(), extremal_value: f64::NAN, verdict: Verdict::Inconclusive },
            tolerance,
            metrics: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn hypothesis(&mut self, description: impl Into<String>, residual: f64, satisfied: bool) {
        self.hypotheses.push(Hypothesis { description: description.into(), residual, satisfied });
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    pub fn get_metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.satisfied)
    }

    /// Sets the conclusion for a `value >= -tolerance` sign condition. The
    /// verdict is inconclusive whenever a hypothesis failed.
    pub fn conclude_nonnegative(&mut self, description: impl Into<String>, extremal_value: f64) {
        let verdict = if !self.hypotheses_hold() {
            Verdict::Inconclusive
        } else if extremal_value >= -self.tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        self.conclusion = Conclusion { description: description.into(), extremal_value, verdict };
    }

    pub fn verdict(&self) -> Verdict {
        self.conclusion.verdict
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_hypothesis_is_inconclusive() {
        let mut r = ExperimentReport::new("x", 1e-8);
        r.hypothesis("data >= 0", -1.0, false);
        r.conclude_nonnegative("min u", -1.0);
        assert_eq!(r.verdict(), Verdict::Inconclusive);
    }

    #[test]
    fn holds_respects_tolerance() {
        let mut r = ExperimentReport::new("x", 1e-8);
        r.hypothesis("ok", 0.0, true);
        r.conclude_nonnegative("min u", -1e-9);
        assert_eq!(r.verdict(), Verdict::Holds);
        r.conclude_nonnegative("min u", -1e-7);
        assert_eq!(r.verdict(), Verdict::Violated);
    }

    #[test]
    fn serializes_verdict_snake_case() {
        let mut r = ExperimentReport::new("x", 1e-8);
        r.conclude_nonnegative("min", 0.0);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"holds\""));
    }
}
