//! Named residual reports shared by every verification suite.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;

/// Aggregate of one residual family over a sample set.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualEntry {
    pub max: f64,
    pub mean: f64,
    pub n_samples: usize,
    pub tol: f64,
    pub pass: bool,
}

impl ResidualEntry {
    pub fn from_samples(values: &[f64], tol: f64) -> Self {
        let n = values.len();
        let max = values.iter().copied().fold(0.0, f64::max);
        let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
        ResidualEntry { max, mean, n_samples: n, tol, pass: max <= tol }
    }

    /// Entry that is zero by construction (components absent from the
    /// representation rather than computed).
    pub fn exact(n_samples: usize, tol: f64) -> Self {
        ResidualEntry { max: 0.0, mean: 0.0, n_samples, tol, pass: true }
    }
}

/// Ordered map of named residual entries. BTreeMap keeps serialization and
/// printing deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub entries: BTreeMap<String, ResidualEntry>,
}

impl ResidualReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, entry: ResidualEntry) {
        debug_assert!(entry.max >= entry.mean - 1e-300);
        self.entries.insert(name.to_string(), entry);
    }

    pub fn insert_samples(&mut self, name: &str, values: &[f64], tol: f64) {
        self.insert(name, ResidualEntry::from_samples(values, tol));
    }

    pub fn merge(&mut self, other: ResidualReport) {
        for (k, v) in other.entries {
            self.entries.insert(k, v);
        }
    }

    pub fn all_pass(&self) -> bool {
        self.entries.values().all(|e| e.pass)
    }

    pub fn failing(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, e)| !e.pass)
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn max_of(&self, name: &str) -> Option<f64> {
        self.entries.get(name).map(|e| e.max)
    }
}

/// Ratio observation with a 0/0 sentinel: when both sides are below the
/// sentinel threshold the ratio is reported as not applicable.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Ratio {
    Value(f64),
    NotApplicable,
    /// Denominator vanished while the numerator did not: a bound violation.
    Violation { numerator: f64, denominator: f64 },
}

impl Ratio {
    pub fn of(numerator: f64, denominator: f64, sentinel: f64) -> Self {
        if numerator < sentinel && denominator < sentinel {
            Ratio::NotApplicable
        } else if denominator < sentinel {
            Ratio::Violation { numerator, denominator }
        } else {
            Ratio::Value(numerator / denominator)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(*v),
            _ => None,
        }
    }

    /// Relative drift |a − b| / max(|a|, |b|) between two ratio observations.
    pub fn drift(&self, other: &Ratio) -> Option<f64> {
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => {
                let m = Float::max(Float::abs(a), Float::abs(b));
                if m == 0.0 {
                    Some(0.0)
                } else {
                    Some(Float::abs(a - b) / m)
                }
            }
            (None, None) => Some(0.0),
            _ => None,
        }
    }
}
