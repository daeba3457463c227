//! Report documents: schema `report_v1`, deterministic for a fixed
//! configuration and seed (the timing field is the only run-dependent part).

use harmonikos_core::report::{Ratio, ResidualReport};
use harmonikos_core::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA: &str = "report_v1";

pub fn cv(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn cvs(zs: &[C64]) -> Vec<[f64; 2]> {
    zs.iter().map(|&z| cv(z)).collect()
}

pub fn from_cv(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

/// One recorded reconstruction sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleRecord {
    /// x^{ia} entries, row-major over (i, a).
    pub x: Vec<[f64; 2]>,
    /// Harmonic entries [u¹₊, u²₊, u¹₋, u²₋].
    #[serde(rename = "U")]
    pub u: Vec<[f64; 2]>,
    /// A₊₊ coefficients.
    #[serde(rename = "App")]
    pub app: Vec<[f64; 2]>,
    /// F₊ₐ|₋ᵦ coefficients, row-major over (a, b) then the basis index.
    #[serde(rename = "F_pm")]
    pub f_pm: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub prepotential: String,
    pub realization: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SampleRecord>,
    pub residuals: ResidualReport,
    /// Command-specific payload (norms, ratios, convergence data, ...).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub extra: Value,
    pub pass: bool,
    pub timing_ms: u64,
}

impl Report {
    pub fn new(command: &str, config: RunConfig, prepotential: String, realization: &str) -> Self {
        Report {
            schema: SCHEMA.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            prepotential,
            realization: realization.to_string(),
            samples: Vec::new(),
            residuals: ResidualReport::new(),
            extra: Value::Null,
            pass: false,
            timing_ms: 0,
        }
    }

    pub fn finalize(&mut self, started: std::time::Instant) {
        self.pass = self.residuals.all_pass() && extra_gates_pass(&self.extra);
        self.timing_ms = started.elapsed().as_millis() as u64;
    }

    pub fn write(&self, path: Option<&str>) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        match path {
            Some(p) => std::fs::write(p, text + "\n")?,
            None => println!("{text}"),
        }
        Ok(())
    }
}

/// Any boolean named "pass" inside the extra payload participates in the
/// overall verdict.
fn extra_gates_pass(v: &Value) -> bool {
    match v {
        Value::Object(map) => map.iter().all(|(k, val)| {
            if k == "pass" {
                val.as_bool().unwrap_or(false)
            } else {
                extra_gates_pass(val)
            }
        }),
        Value::Array(items) => items.iter().all(extra_gates_pass),
        _ => true,
    }
}

pub fn ratio_json(r: &Ratio) -> Value {
    match r {
        Ratio::Value(v) => serde_json::json!({ "kind": "value", "value": v }),
        Ratio::NotApplicable => serde_json::json!({ "kind": "not_applicable" }),
        Ratio::Violation { numerator, denominator } => serde_json::json!({
            "kind": "violation",
            "numerator": numerator,
            "denominator": denominator,
            "pass": false,
        }),
    }
}
