//! Scan discovery on disk, slice ordering and quality control.

use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};

use ::image::{DynamicImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::config::Layout;
use crate::error::{KdsError, Result};
use crate::image::{round_half_up, BitDepth, SliceImage};

/// Scans with fewer slices than this are excluded.
pub const MIN_SLICES: usize = 5;

pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Covid,
    NonCovid,
    Unknown,
}

impl Label {
    pub fn from_dir_name(name: &str) -> Option<Self> {
        match name {
            "covid" => Some(Label::Covid),
            "non-covid" => Some(Label::NonCovid),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Covid => "covid",
            Label::NonCovid => "non-covid",
            Label::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An ordered slice stack with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScanVolume {
    pub scan_id: String,
    pub source_id: Option<u32>,
    pub label: Label,
    pub slices: Vec<SliceImage>,
    /// File name of each entry in `slices`.
    pub slice_files: Vec<String>,
    /// Files that matched an image extension but failed to decode.
    pub unreadable: Vec<String>,
}

impl ScanVolume {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcReason {
    InconsistentDimensions,
    TooFewSlices,
    UnreadableFile,
    EmptyScan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcReport {
    pub scan_id: String,
    pub accepted: bool,
    pub reasons: Vec<QcReason>,
}

impl QcReport {
    pub fn from_reasons(scan_id: impl Into<String>, mut reasons: Vec<QcReason>) -> Self {
        reasons.sort();
        reasons.dedup();
        Self {
            scan_id: scan_id.into(),
            accepted: reasons.is_empty(),
            reasons,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Token<'a> {
    /// Digit run with leading zeros stripped.
    Num(&'a [u8]),
    Byte(u8),
}

fn tokens(s: &str) -> impl Iterator<Item = Token<'_>> {
    let bytes = s.as_bytes();
    let mut pos = 0;
    std::iter::from_fn(move || {
        let b = *bytes.get(pos)?;
        if !b.is_ascii_digit() {
            pos += 1;
            return Some(Token::Byte(b));
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        let run = &bytes[start..pos];
        let first_nonzero = run.iter().position(|&d| d != b'0').unwrap_or(run.len());
        Some(Token::Num(&run[first_nonzero..]))
    })
}

fn cmp_token(a: &Token<'_>, b: &Token<'_>) -> Ordering {
    match (a, b) {
        (Token::Num(x), Token::Num(y)) => x.len().cmp(&y.len()).then_with(|| x.cmp(y)),
        (Token::Byte(x), Token::Byte(y)) => x.cmp(y),
        // Every digit byte sorts on the same side of a non-digit byte.
        (Token::Num(_), Token::Byte(y)) => b'0'.cmp(y),
        (Token::Byte(x), Token::Num(_)) => x.cmp(&b'0'),
    }
}

/// Natural ordering: digit runs compare by numeric value, everything else
/// by byte. Names equal under that rule (`"3"` vs `"003"`) fall back to a
/// plain byte comparison so the order stays total.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut ta = tokens(a);
    let mut tb = tokens(b);
    loop {
        match (ta.next(), tb.next()) {
            (None, None) => return a.as_bytes().cmp(b.as_bytes()),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => match cmp_token(&x, &y) {
                Ordering::Equal => continue,
                ord => return ord,
            },
        }
    }
}

pub fn order_slices<S: AsRef<str>>(filenames: &[S]) -> Vec<String> {
    let mut names: Vec<String> = filenames.iter().map(|s| s.as_ref().to_owned()).collect();
    names.sort_by(|a, b| natural_cmp(a, b));
    names
}

pub fn has_image_extension(name: &str) -> bool {
    Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
        .unwrap_or(false)
}

/// Image file names directly inside `dir`, in natural order.
pub fn list_slice_files(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| KdsError::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| KdsError::io(dir, e))?;
        let file_type = entry.file_type().map_err(|e| KdsError::io(entry.path(), e))?;
        if !file_type.is_file() {
            continue;
        }
        if let Some(name) = entry.file_name().to_str() {
            if has_image_extension(name) {
                names.push(name.to_owned());
            }
        }
    }
    Ok(order_slices(&names))
}

#[inline]
fn luma(r: f64, g: f64, b: f64, max: f64) -> u16 {
    round_half_up(0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, max) as u16
}

/// Reduce a decoded image to one channel. Colour inputs use BT.601 luma.
pub fn to_grayscale(img: DynamicImage) -> Result<SliceImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => SliceImage::from_u8(w, h, buf.as_raw()),
        DynamicImage::ImageLumaA8(buf) => {
            let px: Vec<u8> = buf.pixels().map(|p| p.0[0]).collect();
            SliceImage::from_u8(w, h, &px)
        }
        DynamicImage::ImageLuma16(buf) => {
            SliceImage::new(w, h, BitDepth::Sixteen, buf.into_raw())
        }
        DynamicImage::ImageLumaA16(buf) => {
            let px = buf.pixels().map(|p| p.0[0]).collect();
            SliceImage::new(w, h, BitDepth::Sixteen, px)
        }
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            let px = img
                .to_rgb16()
                .pixels()
                .map(|p| {
                    let [r, g, b] = p.0;
                    luma(r as f64, g as f64, b as f64, u16::MAX as f64)
                })
                .collect();
            SliceImage::new(w, h, BitDepth::Sixteen, px)
        }
        other => {
            let px = other
                .to_rgb8()
                .pixels()
                .map(|p| {
                    let [r, g, b] = p.0;
                    luma(r as f64, g as f64, b as f64, 255.0)
                })
                .collect();
            SliceImage::new(w, h, BitDepth::Eight, px)
        }
    }
}

pub fn decode_slice(path: &Path) -> Result<SliceImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| KdsError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| KdsError::io(path, e))?;
    let img = reader.decode().map_err(|source| KdsError::Decode {
        path: path.to_owned(),
        source,
    })?;
    to_grayscale(img)
}

/// Source and label implied by a `<root>/<source>/<label>/<scan>` path.
pub fn infer_metadata(dir: &Path) -> (Option<u32>, Label) {
    let label_dir = dir.parent();
    let label = label_dir
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .and_then(Label::from_dir_name);
    match label {
        Some(label) => {
            let source = label_dir
                .and_then(|p| p.parent())
                .and_then(|p| p.file_name())
                .and_then(|n| n.to_str())
                .and_then(|n| n.parse().ok());
            (source, label)
        }
        None => (None, Label::Unknown),
    }
}

/// Where one scan lives on disk.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ScanLocation {
    pub source_id: Option<u32>,
    pub label: Label,
    pub scan_id: String,
    pub dir: PathBuf,
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| KdsError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| KdsError::io(dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        match entry.file_name().into_string() {
            Ok(name) => out.push((name, path)),
            Err(name) => log::warn!("skipping non-UTF-8 directory {name:?}"),
        }
    }
    out.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    Ok(out)
}

/// Enumerate scan directories under `root`.
///
/// In the labeled tree, directories that are not a numeric source id or
/// not a `covid`/`non-covid` label are skipped with a warning. The result
/// is sorted by source, label and natural scan id.
pub fn discover_scans(root: &Path, layout: Layout) -> Result<Vec<ScanLocation>> {
    let mut scans = Vec::new();
    match layout {
        Layout::Flat => {
            for (scan_id, dir) in sorted_subdirs(root)? {
                scans.push(ScanLocation {
                    source_id: None,
                    label: Label::Unknown,
                    scan_id,
                    dir,
                });
            }
        }
        Layout::LabeledTree => {
            for (source_name, source_dir) in sorted_subdirs(root)? {
                let Ok(source_id) = source_name.parse::<u32>() else {
                    log::warn!("skipping {}: not a source id", source_dir.display());
                    continue;
                };
                for (label_name, label_dir) in sorted_subdirs(&source_dir)? {
                    let Some(label) = Label::from_dir_name(&label_name) else {
                        log::warn!("skipping {}: not a label", label_dir.display());
                        continue;
                    };
                    for (scan_id, dir) in sorted_subdirs(&label_dir)? {
                        scans.push(ScanLocation {
                            source_id: Some(source_id),
                            label,
                            scan_id,
                            dir,
                        });
                    }
                }
            }
        }
    }
    Ok(scans)
}

/// Decode every image file in `dir`.
///
/// Files that fail to decode are listed in `unreadable` and skipped; the
/// scan is only an error when nothing decodes.
pub fn load_scan(dir: &Path, scan_id: &str) -> Result<ScanVolume> {
    let names = list_slice_files(dir)?;
    let mut slices = Vec::with_capacity(names.len());
    let mut slice_files = Vec::with_capacity(names.len());
    let mut unreadable = Vec::new();
    for name in names {
        match decode_slice(&dir.join(&name)) {
            Ok(slice) => {
                slices.push(slice);
                slice_files.push(name);
            }
            Err(e) => {
                log::warn!("scan {scan_id}: skipping {name}: {e}");
                unreadable.push(name);
            }
        }
    }
    if slices.is_empty() {
        return Err(KdsError::EmptyScan {
            scan_id: scan_id.to_owned(),
            unreadable: unreadable.len(),
        });
    }
    let (source_id, label) = infer_metadata(dir);
    Ok(ScanVolume {
        scan_id: scan_id.to_owned(),
        source_id,
        label,
        slices,
        slice_files,
        unreadable,
    })
}

/// Exclusion rules: every slice must share one size, and there must be at
/// least [`MIN_SLICES`] of them.
pub fn check_consistency(scan: &ScanVolume) -> QcReport {
    let mut reasons = Vec::new();
    if let Some(first) = scan.slices.first() {
        if scan.slices.iter().any(|s| s.dims() != first.dims()) {
            reasons.push(QcReason::InconsistentDimensions);
        }
    } else {
        reasons.push(QcReason::EmptyScan);
    }
    if scan.slices.len() < MIN_SLICES {
        reasons.push(QcReason::TooFewSlices);
    }
    QcReport::from_reasons(scan.scan_id.clone(), reasons)
}
