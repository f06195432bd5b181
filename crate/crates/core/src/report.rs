//! Machine-readable outcome of one checked inequality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Parameter or location value: a number or a label such as `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Num(v)
    }
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Num(v as f64)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

impl From<String> for Param {
    fn from(v: String) -> Self {
        Param::Text(v)
    }
}

impl From<crate::lattice::Exponent> for Param {
    fn from(p: crate::lattice::Exponent) -> Self {
        match p {
            crate::lattice::Exponent::Finite(v) => Param::Num(v),
            crate::lattice::Exponent::Infinity => Param::Text("inf".into()),
        }
    }
}

/// Claim identifiers understood by the reports.
pub const CLAIMS: &[&str] = &[
    "lemma-2.1",
    "cor-2.3",
    "lemma-2.4",
    "lemma-2.5",
    "lemma-2.6",
    "lemma-3.1",
    "thm-1.3-remark",
    "thm-1.3",
    "lemma-4.1",
    "prop-4.2",
    "thm-1.5",
    "lemma-4.3",
    "thm-1.6",
    "kg-energy",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub claim: String,
    pub parameters: BTreeMap<String, Param>,
    /// Largest achieved/bound ratio seen.
    pub worst_ratio: f64,
    pub worst_location: BTreeMap<String, Param>,
    pub fitted_constant: Option<f64>,
    pub tolerance: f64,
    /// False for measurement-only rows, which never fail a run.
    pub enforced: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Ratio check `worst_ratio ≤ 1 + tolerance`.
    pub fn ratio_check(claim: &str, tolerance: f64) -> Self {
        BoundReport {
            claim: claim.to_string(),
            parameters: BTreeMap::new(),
            worst_ratio: 0.0,
            worst_location: BTreeMap::new(),
            fitted_constant: None,
            tolerance,
            enforced: true,
            passed: true,
            notes: Vec::new(),
        }
    }

    pub fn measurement(claim: &str) -> Self {
        BoundReport {
            enforced: false,
            ..Self::ratio_check(claim, 0.0)
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Param>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Record one ratio; keeps the worst and its location. NaN counts as a violation.
    pub fn observe<I, K, V>(&mut self, ratio: f64, location: I)
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<Param>,
    {
        if ratio.is_nan() || ratio > self.worst_ratio || self.worst_location.is_empty() {
            self.worst_ratio = if ratio.is_nan() { f64::INFINITY } else { ratio.max(self.worst_ratio) };
            self.worst_location = location
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect();
        }
        self.passed = self.worst_ratio <= 1.0 + self.tolerance;
    }

    /// True unless an enforced check failed.
    pub fn ok(&self) -> bool {
        !self.enforced || self.passed
    }
}
