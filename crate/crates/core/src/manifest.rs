//! JSON manifest written at the end of a run.
//!
//! Keys are emitted in declaration order and every float is rounded to 9
//! significant digits, so identical runs produce identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::config::PipelineConfig;
use crate::error::{KdsError, Result};
use crate::ingest::{Label, QcReason};

/// Round to 9 significant digits.
pub fn round_sig9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig9(*v))
}

fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&round_sig9(*v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSlice {
    pub index: usize,
    #[serde(serialize_with = "ser_f64")]
    pub quantile: f64,
    /// Path relative to the output root.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanManifest {
    pub scan_id: String,
    pub source_id: Option<u32>,
    pub label: Label,
    pub accepted: bool,
    pub reasons: Vec<QcReason>,
    /// `[row_min, row_max, col_min, col_max]`
    pub crop: [usize; 4],
    pub full_frame: bool,
    #[serde(serialize_with = "ser_f64")]
    pub bandwidth: f64,
    pub degenerate_bandwidth: bool,
    pub areas: Vec<u64>,
    pub selected: Vec<SelectedSlice>,
    /// Non-fatal issues, e.g. skipped files or an empty mask volume.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub scan_id: String,
    pub source_id: Option<u32>,
    pub label: Label,
    pub reasons: Vec<QcReason>,
    pub slice_count: usize,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scans_found: usize,
    pub scans_accepted: usize,
    pub slices_in_accepted: u64,
    pub slices_selected: u64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub redundancy_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub scans: Vec<ScanManifest>,
    #[serde(default)]
    pub excluded: Vec<Exclusion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KdsError::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    std::fs::write(path, manifest.to_json()?).map_err(|e| KdsError::io(path, e))
}
