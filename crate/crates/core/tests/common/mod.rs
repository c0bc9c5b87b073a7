#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Synthetic axial slice: dark background, a bright elliptical body and two
/// dark lung fields whose size is controlled by `lung_scale` in `[0, 1]`.
pub fn phantom(h: usize, w: usize, lung_scale: f64, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cy, cx) = (h as f64 / 2.0, w as f64 / 2.0);
    let (ry, rx) = (h as f64 * 0.38, w as f64 * 0.42);
    let (ly, lx) = (ry * 0.7 * lung_scale, rx * 0.35 * lung_scale);
    let mut px = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let (y, x) = (i as f64 + 0.5, j as f64 + 0.5);
            let body = ((y - cy) / ry).powi(2) + ((x - cx) / rx).powi(2) <= 1.0;
            let lung = |ox: f64| {
                ly > 0.0 && lx > 0.0 && ((y - cy) / ly).powi(2) + ((x - ox) / lx).powi(2) <= 1.0
            };
            let noise: i32 = rng.gen_range(-12..=12);
            let base: i32 = if !body {
                15
            } else if lung(cx - rx * 0.45) || lung(cx + rx * 0.45) {
                35
            } else {
                170
            };
            px.push((base + noise).clamp(0, 255) as u8);
        }
    }
    px
}

pub fn write_png(path: &Path, w: usize, h: usize, px: &[u8]) {
    image::save_buffer_with_format(
        path,
        px,
        w as u32,
        h as u32,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .unwrap();
}

/// Write `n` phantom slices named `slice_<i>.png` (unpadded, so the on-disk
/// listing is not already in order).
pub fn write_scan(dir: &Path, n: usize, h: usize, w: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let scale = (std::f64::consts::PI * t).sin().max(0.05);
        let px = phantom(h, w, scale, seed * 1000 + i as u64);
        write_png(&dir.join(format!("slice_{i}.png")), w, h, &px);
    }
}

pub fn scan_dir(root: &Path, source: u32, label: &str, scan: &str) -> PathBuf {
    root.join(source.to_string()).join(label).join(scan)
}

/// All files under `dir` with their bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub fn count_pngs(dir: &Path) -> usize {
    snapshot(dir).iter().filter(|(p, _)| p.ends_with(".png")).count()
}
