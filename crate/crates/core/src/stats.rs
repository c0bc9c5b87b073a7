//! Scan and slice tallies per source and label.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::config::Layout;
use crate::error::Result;
use crate::ingest::{discover_scans, list_slice_files, Label};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub scans: u64,
    pub slices: u64,
}

impl std::ops::AddAssign for Tally {
    fn add_assign(&mut self, rhs: Self) {
        self.scans += rhs.scans;
        self.slices += rhs.slices;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsRow {
    pub source_id: Option<u32>,
    pub label: Label,
    pub scans: u64,
    pub slices: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub split: String,
    cells: BTreeMap<(Option<u32>, Label), Tally>,
}

impl DatasetStats {
    /// Build from `(source, label, slice_count)` per scan, in any order.
    pub fn tally<I>(split: impl Into<String>, scans: I) -> Self
    where
        I: IntoIterator<Item = (Option<u32>, Label, u64)>,
    {
        let mut cells = BTreeMap::new();
        for (source, label, slices) in scans {
            *cells.entry((source, label)).or_insert_with(Tally::default) += Tally { scans: 1, slices };
        }
        Self {
            split: split.into(),
            cells,
        }
    }

    pub fn cell(&self, source: Option<u32>, label: Label) -> Tally {
        self.cells.get(&(source, label)).copied().unwrap_or_default()
    }

    pub fn sources(&self) -> Vec<Option<u32>> {
        let mut s: Vec<_> = self.cells.keys().map(|k| k.0).collect();
        s.dedup();
        s
    }

    pub fn source_total(&self, source: Option<u32>) -> Tally {
        let mut t = Tally::default();
        for (_, v) in self.cells.range((source, Label::Covid)..=(source, Label::Unknown)) {
            t += *v;
        }
        t
    }

    pub fn label_total(&self, label: Label) -> Tally {
        let mut t = Tally::default();
        for (_, v) in self.cells.iter().filter(|(k, _)| k.1 == label) {
            t += *v;
        }
        t
    }

    pub fn total(&self) -> Tally {
        let mut t = Tally::default();
        for v in self.cells.values() {
            t += *v;
        }
        t
    }

    pub fn rows(&self) -> Vec<StatsRow> {
        self.cells
            .iter()
            .map(|(&(source_id, label), t)| StatsRow {
                source_id,
                label,
                scans: t.scans,
                slices: t.slices,
            })
            .collect()
    }

    fn render_level(&self, out: &mut String, title: &str, pick: fn(Tally) -> u64) -> fmt::Result {
        let labels: Vec<Label> = [Label::Covid, Label::NonCovid, Label::Unknown]
            .into_iter()
            .filter(|&l| l != Label::Unknown || self.label_total(l).scans > 0)
            .collect();
        writeln!(out, "{title}")?;
        write!(out, "{:<8}", "Source")?;
        for l in &labels {
            write!(out, "{:>12}", l.as_str())?;
        }
        writeln!(out, "{:>12}", "total")?;
        for source in self.sources() {
            let name = source.map_or("-".to_string(), |s| s.to_string());
            write!(out, "{name:<8}")?;
            for &l in &labels {
                write!(out, "{:>12}", pick(self.cell(source, l)))?;
            }
            writeln!(out, "{:>12}", pick(self.source_total(source)))?;
        }
        write!(out, "{:<8}", "Total")?;
        for &l in &labels {
            write!(out, "{:>12}", pick(self.label_total(l)))?;
        }
        writeln!(out, "{:>12}", pick(self.total()))
    }

    /// Plain-text scan-level and slice-level tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.split.is_empty() {
            let _ = writeln!(out, "split: {}\n", self.split);
        }
        let _ = self.render_level(&mut out, "Scan-level counts", |t| t.scans);
        out.push('\n');
        let _ = self.render_level(&mut out, "Slice-level counts", |t| t.slices);
        out
    }
}

#[derive(Serialize)]
struct StatsJson<'a> {
    split: &'a str,
    rows: Vec<StatsRow>,
    total_scans: u64,
    total_slices: u64,
}

impl Serialize for DatasetStats {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let total = self.total();
        StatsJson {
            split: &self.split,
            rows: self.rows(),
            total_scans: total.scans,
            total_slices: total.slices,
        }
        .serialize(s)
    }
}

/// Count scans and slice files under `root` without decoding anything.
pub fn compute_stats(root: &Path, layout: Layout) -> Result<DatasetStats> {
    let split = root
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    let mut entries = Vec::new();
    for scan in discover_scans(root, layout)? {
        let slices = list_slice_files(&scan.dir)?.len() as u64;
        entries.push((scan.source_id, scan.label, slices));
    }
    Ok(DatasetStats::tally(split, entries))
}
