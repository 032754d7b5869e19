use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{RunManifest, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedRow {
    pub process: String,
    pub f: String,
    pub seed: u64,
    pub n: usize,
    pub d1_normalized: Option<f64>,
    pub d1_unnormalized: Option<f64>,
    pub ks: Option<f64>,
    pub bound_t21: Option<f64>,
    pub bound_t22: Option<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub sources: Vec<PathBuf>,
    pub rows: Vec<MergedRow>,
}

impl MergedReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn expected_fields() -> BTreeSet<String> {
    [
        "schema_version",
        "library_version",
        "config",
        "sigma2",
        "moments",
        "rows",
        "rate_fit",
        "bounds",
        "seeds",
        "stages",
        "notes",
        "failure",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Parses one manifest, reporting missing or unexpected top-level fields and
/// schema-version mismatches by name.
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let obj = v.as_object().ok_or_else(|| Error::Schema(format!("{}: not a JSON object", path.display())))?;
    let have: BTreeSet<String> = obj.keys().cloned().collect();
    let want = expected_fields();
    let missing: Vec<_> = want.difference(&have).cloned().collect();
    let extra: Vec<_> = have.difference(&want).cloned().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Schema(format!(
            "{}: missing fields {missing:?}, unexpected fields {extra:?}",
            path.display()
        )));
    }
    let version = obj["schema_version"].as_u64();
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(Error::Schema(format!(
            "{}: field schema_version is {:?}, expected {SCHEMA_VERSION}",
            path.display(),
            version
        )));
    }
    serde_json::from_value(v).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Concatenates the per-`n` tables of several run manifests.
pub fn merge_reports(paths: &[PathBuf]) -> Result<MergedReport> {
    if paths.is_empty() {
        return Err(Error::Domain("no manifests given".into()));
    }
    let mut rows = Vec::new();
    for p in paths {
        let m = read_manifest(p)?;
        rows.extend(m.rows.into_iter().map(|r| MergedRow {
            process: r.process,
            f: r.observable,
            seed: r.seed,
            n: r.n,
            d1_normalized: r.d1_normalized,
            d1_unnormalized: r.d1_unnormalized,
            ks: r.ks,
            bound_t21: r.bound_t21,
            bound_t22: r.bound_t22,
            slope: r.slope,
        }));
    }
    Ok(MergedReport { sources: paths.to_vec(), rows })
}
