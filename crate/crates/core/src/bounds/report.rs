use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::evaluator::DPrime;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Martingale-difference bound.
    T21,
    /// General bound with the nonadapted correction.
    T22,
    /// Bounded variables, summable resolvent norms.
    T23a,
    /// Bounded variables, polynomially decaying resolvent norms.
    T23b,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTerm {
    pub name: String,
    pub value: f64,
}

impl NamedTerm {
    pub fn new(name: &str, value: f64) -> Self {
        Self { name: name.to_string(), value }
    }
}

/// One evaluated bound: `total` is the sum of `terms`; `per_m` holds the
/// series summands for `m = 1..=m_cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub n: u64,
    pub total: f64,
    pub terms: Vec<NamedTerm>,
    pub per_m: Vec<f64>,
    pub m_cutoff: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dprime: Option<DPrime>,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default)]
    pub truncation_l1: f64,
}

impl BoundReport {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes one CSV row per report: theorem, n, total, then every named term.
pub fn write_bounds_csv<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theorem", "n", "total", "term", "value", "m_cutoff"])?;
    for r in reports {
        let th = serde_json::to_value(r.theorem)?;
        let th = th.as_str().unwrap_or_default().to_string();
        for t in &r.terms {
            w.write_record([
                th.clone(),
                r.n.to_string(),
                r.total.to_string(),
                t.name.clone(),
                t.value.to_string(),
                r.m_cutoff.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
