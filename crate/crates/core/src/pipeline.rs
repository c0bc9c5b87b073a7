//! End-to-end processing of a dataset directory.
//!
//! Scans are independent and run on a rayon pool; results are sorted by
//! scan id before the manifest is written, so the worker count never
//! changes the output bytes.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Layout, PipelineConfig};
use crate::error::{KdsError, Result};
use crate::filter::{apply_filter, FilterKernel};
use crate::image::SliceImage;
use crate::ingest::{
    check_consistency, discover_scans, load_scan, Label, QcReason, QcReport, ScanLocation,
    ScanVolume,
};
use crate::manifest::{
    round_sig9, write_manifest, Exclusion, Manifest, RunSummary, ScanManifest, SelectedSlice,
};
use crate::sampler::{redundancy_report, select_slices, SamplingPlan, Selection};
use crate::segment::{
    binarize, crop_and_resize, crop_box, fill_holes, lung_area_within, BinaryMask, CropBox,
};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything computed for one accepted scan short of writing files.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanAnalysis {
    pub crop: CropBox,
    /// The mask volume was empty and the whole frame is kept.
    pub full_frame: bool,
    pub areas: Vec<u64>,
    pub selection: Selection,
    pub warnings: Vec<String>,
}

pub fn plan_for(config: &PipelineConfig) -> SamplingPlan {
    SamplingPlan::new(config.n_select, config.sampler_mode).with_grid_size(config.kde_grid)
}

/// Filter, threshold and hole-fill one slice.
pub fn slice_mask(
    slice: &SliceImage,
    source: Option<u32>,
    config: &PipelineConfig,
    kernel: &FilterKernel,
) -> BinaryMask {
    let filtered = apply_filter(slice, config.filter_mode, kernel);
    let t = config.threshold_for(source, slice.depth());
    fill_holes(&binarize(&filtered, t))
}

/// Masks, crop, lung areas and slice selection for a QC-accepted scan.
pub fn analyze_scan(volume: &ScanVolume, config: &PipelineConfig) -> Result<ScanAnalysis> {
    let first = volume.slices.first().ok_or_else(|| KdsError::EmptyScan {
        scan_id: volume.scan_id.clone(),
        unreadable: volume.unreadable.len(),
    })?;
    let kernel = FilterKernel::uniform(config.kernel_radius);
    let masks: Vec<BinaryMask> = volume
        .slices
        .iter()
        .map(|s| slice_mask(s, volume.source_id, config, &kernel))
        .collect();

    let mut warnings: Vec<String> = volume
        .unreadable
        .iter()
        .map(|f| format!("unreadable file skipped: {f}"))
        .collect();
    let (crop, full_frame) = match crop_box(&masks) {
        Ok(b) => (b, false),
        Err(KdsError::EmptyMaskVolume) => {
            warnings.push("no foreground above threshold; keeping full frame".into());
            let (h, w) = first.dims();
            (CropBox::full_frame(h, w), true)
        }
        Err(e) => return Err(e),
    };
    let areas: Vec<u64> = masks.iter().map(|m| lung_area_within(m, &crop)).collect();
    let selection = select_slices(&areas, &plan_for(config))?;
    Ok(ScanAnalysis {
        crop,
        full_frame,
        areas,
        selection,
        warnings,
    })
}

/// Output directory of a scan, relative to the output root.
pub fn relative_scan_dir(loc: &ScanLocation, layout: Layout) -> PathBuf {
    match layout {
        Layout::Flat => PathBuf::from(&loc.scan_id),
        Layout::LabeledTree => {
            let source = loc.source_id.map_or("unknown".to_string(), |s| s.to_string());
            [source.as_str(), loc.label.as_str(), loc.scan_id.as_str()]
                .iter()
                .collect()
        }
    }
}

pub fn output_file_name(scan_id: &str, position: usize, index: usize) -> String {
    format!("{scan_id}_k{position}_s{index}.png")
}

fn to_slash(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn write_png(path: &Path, slice: &SliceImage) -> Result<()> {
    ::image::save_buffer_with_format(
        path,
        &slice.to_u8(),
        slice.width() as u32,
        slice.height() as u32,
        ::image::ExtendedColorType::L8,
        ::image::ImageFormat::Png,
    )
    .map_err(|source| KdsError::Encode {
        path: path.to_owned(),
        source,
    })
}

/// Write the selected slices and build the manifest entry.
fn export_scan(
    volume: &ScanVolume,
    analysis: &ScanAnalysis,
    config: &PipelineConfig,
    out_root: &Path,
    rel_dir: &Path,
) -> Result<ScanManifest> {
    let dir = out_root.join(rel_dir);
    std::fs::create_dir_all(&dir).map_err(|e| KdsError::io(&dir, e))?;
    let sel = &analysis.selection;
    let mut selected = Vec::with_capacity(sel.indices.len());
    for (position, (&index, &quantile)) in sel.indices.iter().zip(&sel.per_index_quantile).enumerate() {
        let name = output_file_name(&volume.scan_id, position, index);
        let resized = crop_and_resize(&volume.slices[index], &analysis.crop, config.out_size)?;
        write_png(&dir.join(&name), &resized)?;
        selected.push(SelectedSlice {
            index,
            quantile: round_sig9(quantile),
            file: to_slash(&rel_dir.join(&name)),
        });
    }
    Ok(ScanManifest {
        scan_id: volume.scan_id.clone(),
        source_id: volume.source_id,
        label: volume.label,
        accepted: true,
        reasons: vec![],
        crop: analysis.crop.to_array(),
        full_frame: analysis.full_frame,
        bandwidth: round_sig9(sel.bandwidth.h),
        degenerate_bandwidth: sel.bandwidth.degenerate,
        areas: analysis.areas.clone(),
        selected,
        warnings: analysis.warnings.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanOutcome {
    Accepted(ScanManifest),
    Excluded(Exclusion),
}

fn exclusion(loc: &ScanLocation, reasons: Vec<QcReason>, slice_count: usize, detail: Option<String>) -> Exclusion {
    let qc = QcReport::from_reasons(loc.scan_id.clone(), reasons);
    Exclusion {
        scan_id: loc.scan_id.clone(),
        source_id: loc.source_id,
        label: loc.label,
        reasons: qc.reasons,
        slice_count,
        detail,
    }
}

/// Run one scan. Only output failures are returned as errors; anything
/// wrong with the input becomes an exclusion.
pub fn process_scan(loc: &ScanLocation, config: &PipelineConfig, out_root: &Path) -> Result<ScanOutcome> {
    let mut volume = match load_scan(&loc.dir, &loc.scan_id) {
        Ok(v) => v,
        Err(KdsError::EmptyScan { unreadable, .. }) => {
            let mut reasons = vec![QcReason::EmptyScan];
            if unreadable > 0 {
                reasons.push(QcReason::UnreadableFile);
            }
            return Ok(ScanOutcome::Excluded(exclusion(loc, reasons, 0, None)));
        }
        Err(e) => {
            return Ok(ScanOutcome::Excluded(exclusion(
                loc,
                vec![QcReason::UnreadableFile],
                0,
                Some(e.to_string()),
            )))
        }
    };
    volume.source_id = loc.source_id;
    volume.label = loc.label;

    let qc = check_consistency(&volume);
    if !qc.accepted {
        return Ok(ScanOutcome::Excluded(exclusion(loc, qc.reasons, volume.len(), None)));
    }
    let analysis = analyze_scan(&volume, config)?;
    let rel_dir = relative_scan_dir(loc, config.layout);
    export_scan(&volume, &analysis, config, out_root, &rel_dir).map(ScanOutcome::Accepted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl RunReport {
    pub fn has_exclusions(&self) -> bool {
        !self.manifest.excluded.is_empty()
    }
}

fn sort_key(source: Option<u32>, label: Label, scan_id: &str) -> (String, Option<u32>, Label) {
    (scan_id.to_owned(), source, label)
}

/// Process every scan under `dataset_root` and write PNGs plus
/// `manifest.json` under `out_root`.
pub fn run_pipeline(
    dataset_root: &Path,
    config: &PipelineConfig,
    out_root: &Path,
    workers: usize,
) -> Result<RunReport> {
    config.validate()?;
    let locations = discover_scans(dataset_root, config.layout)?;
    std::fs::create_dir_all(out_root).map_err(|e| KdsError::io(out_root, e))?;
    log::info!("{} scans under {}", locations.len(), dataset_root.display());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| KdsError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<ScanOutcome> = pool.install(|| {
        locations
            .par_iter()
            .map(|loc| {
                let outcome = process_scan(loc, config, out_root);
                if let Ok(o) = &outcome {
                    let status = match o {
                        ScanOutcome::Accepted(_) => "accepted",
                        ScanOutcome::Excluded(_) => "excluded",
                    };
                    log::info!("scan {}: {status}", loc.scan_id);
                }
                outcome
            })
            .collect::<Result<_>>()
    })?;

    let mut scans = Vec::new();
    let mut excluded = Vec::new();
    for outcome in outcomes {
        match outcome {
            ScanOutcome::Accepted(m) => scans.push(m),
            ScanOutcome::Excluded(e) => excluded.push(e),
        }
    }
    scans.sort_by(|a, b| {
        sort_key(a.source_id, a.label, &a.scan_id).cmp(&sort_key(b.source_id, b.label, &b.scan_id))
    });
    excluded.sort_by(|a, b| {
        sort_key(a.source_id, a.label, &a.scan_id).cmp(&sort_key(b.source_id, b.label, &b.scan_id))
    });

    let slices_in_accepted: u64 = scans.iter().map(|s| s.areas.len() as u64).sum();
    let slices_selected: u64 = scans.iter().map(|s| s.selected.len() as u64).sum();
    let redundancy_percent = redundancy_report(slices_in_accepted, slices_selected)
        .ok()
        .map(round_sig9);
    let summary = RunSummary {
        scans_found: locations.len(),
        scans_accepted: scans.len(),
        slices_in_accepted,
        slices_selected,
        redundancy_percent,
    };

    let manifest = Manifest {
        config: config.clone(),
        scans,
        excluded,
        summary: Some(summary),
    };
    let manifest_path = out_root.join(MANIFEST_FILE);
    write_manifest(&manifest, &manifest_path)?;
    Ok(RunReport {
        manifest,
        manifest_path,
    })
}
