use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::plan::ExperimentPlan;
use super::stats::SlopeFit;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Less,
    LessEq,
    GreaterEq,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::Less => value < threshold,
            Self::LessEq => value <= threshold,
            Self::GreaterEq => value >= threshold,
        }
    }
}

/// One pass/fail criterion: `value <comparison> threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        Self { name: name.into(), value, comparison, threshold, passed: comparison.holds(value, threshold) }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::Less, threshold)
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::LessEq, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::GreaterEq, threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub name: String,
    pub fit: SlopeFit,
    /// Per-horizon medians the fit was made on.
    pub medians: Vec<f64>,
}

/// Column-major table of per-replicate values, written as a CSV side file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config_hash: String,
    pub plan: ExperimentPlan,
    pub seeds: Vec<u64>,
    /// Summary statistics by name.
    pub stats: BTreeMap<String, f64>,
    pub slopes: Vec<SlopeRecord>,
    /// Reference exponents and constants by name.
    pub references: BTreeMap<String, f64>,
    /// Hard criteria; the experiment passes when all hold.
    pub checks: Vec<Check>,
    /// Diagnostics that are reported but never gate the result.
    pub diagnostics: Vec<Check>,
    pub notes: Vec<String>,
    pub replicates: Table,
    pub pass: bool,
    /// Excluded from determinism comparisons.
    pub wall_clock_seconds: f64,
}

/// SHA-256 of the plan's JSON encoding, hex.
pub fn config_hash(plan: &ExperimentPlan) -> String {
    let json = serde_json::to_string(plan).expect("plan serializes");
    let digest = Sha256::digest(json.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").expect("write to string");
    }
    hex
}

impl ExperimentReport {
    pub fn new(plan: &ExperimentPlan, seeds: Vec<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(plan),
            plan: plan.clone(),
            seeds,
            stats: BTreeMap::new(),
            slopes: Vec::new(),
            references: BTreeMap::new(),
            checks: Vec::new(),
            diagnostics: Vec::new(),
            notes: Vec::new(),
            replicates: Table::default(),
            pass: false,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn stat(&mut self, name: &str, value: f64) {
        self.stats.insert(name.to_string(), value);
    }

    pub fn reference(&mut self, name: &str, value: f64) {
        self.references.insert(name.to_string(), value);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn diagnostic(&mut self, check: Check) {
        self.diagnostics.push(check);
    }

    /// Sets `pass` from the stored checks.
    pub fn finish(&mut self) {
        self.pass = self.recompute_pass();
    }

    /// Pass flags re-derived from stored values and thresholds.
    pub fn recompute_flags(&self) -> Vec<bool> {
        self.checks.iter().map(|c| c.comparison.holds(c.value, c.threshold)).collect()
    }

    pub fn recompute_pass(&self) -> bool {
        !self.checks.is_empty() && self.recompute_flags().into_iter().all(|f| f)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::Data(format!("report serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Data(format!("report parse failed: {e}")))
    }

    /// JSON with the wall-clock field zeroed, for reproducibility comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        copy.to_json()
    }
}
