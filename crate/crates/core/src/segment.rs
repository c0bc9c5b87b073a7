//! Threshold masking, hole filling, lung-area measurement and cropping.
//!
//! The threshold mask marks bright tissue. Dark lung parenchyma enclosed by
//! the body wall is absorbed into the foreground by hole filling, so the
//! filled mask covers the body including the lungs and its bounding box is
//! the region kept for export.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{KdsError, Result};
use crate::image::{FloatImage, SliceImage};

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    threshold: f64,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>, threshold: f64) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(KdsError::InvalidImage(format!(
                "{} mask bits do not fit {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
            threshold,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropBox {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl CropBox {
    pub fn full_frame(height: usize, width: usize) -> Self {
        Self {
            row_min: 0,
            row_max: height - 1,
            col_min: 0,
            col_max: width - 1,
        }
    }

    pub fn height(&self) -> usize {
        self.row_max - self.row_min + 1
    }

    pub fn width(&self) -> usize {
        self.col_max - self.col_min + 1
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row_min..=self.row_max).contains(&row) && (self.col_min..=self.col_max).contains(&col)
    }

    pub fn fits(&self, height: usize, width: usize) -> bool {
        self.row_min <= self.row_max
            && self.col_min <= self.col_max
            && self.row_max < height
            && self.col_max < width
    }

    /// `[row_min, row_max, col_min, col_max]`
    pub fn to_array(self) -> [usize; 4] {
        [self.row_min, self.row_max, self.col_min, self.col_max]
    }
}

/// 1 where `filtered >= t`.
pub fn binarize(filtered: &FloatImage, t: f64) -> BinaryMask {
    BinaryMask {
        width: filtered.width(),
        height: filtered.height(),
        bits: filtered.pixels().iter().map(|&v| v >= t).collect(),
        threshold: t,
    }
}

/// Set every background pixel that cannot reach the image border through
/// 4-connected background to foreground.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (h, w) = mask.dims();
    let mut outside = vec![false; h * w];
    let mut queue = VecDeque::new();
    let seed = |idx: usize, outside: &mut [bool], queue: &mut VecDeque<usize>| {
        if !mask.bits[idx] && !outside[idx] {
            outside[idx] = true;
            queue.push_back(idx);
        }
    };
    for j in 0..w {
        seed(j, &mut outside, &mut queue);
        seed((h - 1) * w + j, &mut outside, &mut queue);
    }
    for i in 0..h {
        seed(i * w, &mut outside, &mut queue);
        seed(i * w + w - 1, &mut outside, &mut queue);
    }
    while let Some(idx) = queue.pop_front() {
        let (i, j) = (idx / w, idx % w);
        if i > 0 {
            seed(idx - w, &mut outside, &mut queue);
        }
        if i + 1 < h {
            seed(idx + w, &mut outside, &mut queue);
        }
        if j > 0 {
            seed(idx - 1, &mut outside, &mut queue);
        }
        if j + 1 < w {
            seed(idx + 1, &mut outside, &mut queue);
        }
    }
    BinaryMask {
        width: w,
        height: h,
        bits: outside.into_iter().map(|o| !o).collect(),
        threshold: mask.threshold,
    }
}

pub fn lung_area(mask: &BinaryMask) -> u64 {
    mask.bits.iter().filter(|&&b| b).count() as u64
}

/// Foreground count restricted to `bbox`.
pub fn lung_area_within(mask: &BinaryMask, bbox: &CropBox) -> u64 {
    (bbox.row_min..=bbox.row_max)
        .map(|i| {
            let row = &mask.bits[i * mask.width..][bbox.col_min..=bbox.col_max];
            row.iter().filter(|&&b| b).count() as u64
        })
        .sum()
}

/// Smallest box holding every foreground pixel of every mask.
pub fn crop_box(masks: &[BinaryMask]) -> Result<CropBox> {
    let first = masks.first().ok_or(KdsError::EmptyMaskVolume)?;
    let (h, w) = first.dims();
    let mut bbox: Option<CropBox> = None;
    for m in masks {
        if m.dims() != (h, w) {
            return Err(KdsError::MaskDimensions(h, w, m.height, m.width));
        }
        for (idx, _) in m.bits.iter().enumerate().filter(|(_, &b)| b) {
            let (i, j) = (idx / w, idx % w);
            bbox = Some(match bbox {
                None => CropBox {
                    row_min: i,
                    row_max: i,
                    col_min: j,
                    col_max: j,
                },
                Some(b) => CropBox {
                    row_min: b.row_min.min(i),
                    row_max: b.row_max.max(i),
                    col_min: b.col_min.min(j),
                    col_max: b.col_max.max(j),
                },
            });
        }
    }
    bbox.ok_or(KdsError::EmptyMaskVolume)
}

/// Source-axis sample positions for `out` pixel centres over `len` inputs.
fn sample_axis(len: usize, out: usize) -> Vec<(usize, usize, f64)> {
    let scale = len as f64 / out as f64;
    let last = (len - 1) as f64;
    (0..out)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// Extract `bbox` and resample it bilinearly to `out_size x out_size`.
pub fn crop_and_resize(slice: &SliceImage, bbox: &CropBox, out_size: usize) -> Result<SliceImage> {
    let (h, w) = slice.dims();
    if !bbox.fits(h, w) {
        return Err(KdsError::InvalidImage(format!(
            "crop box {:?} outside {h}x{w} slice",
            bbox.to_array()
        )));
    }
    if out_size == 0 {
        return Err(KdsError::InvalidImage("output size must be positive".into()));
    }
    let rows = sample_axis(bbox.height(), out_size);
    let cols = sample_axis(bbox.width(), out_size);
    let at = |r: usize, c: usize| slice.get(bbox.row_min + r, bbox.col_min + c) as f64;
    let mut out = Vec::with_capacity(out_size * out_size);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = at(r0, c0) * (1.0 - fx) + at(r0, c1) * fx;
            let bottom = at(r1, c0) * (1.0 - fx) + at(r1, c1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(FloatImage::new(out_size, out_size, out)?.quantize(slice.depth()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::BitDepth;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, ones: &[(usize, usize)]) -> BinaryMask {
        let mut bits = vec![false; w * h];
        for &(i, j) in ones {
            bits[i * w + j] = true;
        }
        BinaryMask::new(w, h, bits, 0.0).unwrap()
    }

    #[test]
    fn binarize_boundary_maps_to_one() {
        let f = FloatImage::new(2, 2, vec![10.0, 200.0, 99.0, 100.0]).unwrap();
        let m = binarize(&f, 100.0);
        assert_eq!(m.bits(), &[false, true, false, true]);
        assert_eq!(lung_area(&m), 2);
        assert_eq!(m.threshold(), 100.0);

        let dark = FloatImage::new(2, 1, vec![1.0, 99.999]).unwrap();
        assert_eq!(lung_area(&binarize(&dark, 100.0)), 0);
    }

    #[test]
    fn fill_ring_center() {
        let ring: Vec<(usize, usize)> = (1..4)
            .flat_map(|i| (1..4).map(move |j| (i, j)))
            .filter(|&p| p != (2, 2))
            .collect();
        let filled = fill_holes(&mask(5, 5, &ring));
        assert!(filled.get(2, 2));
        assert!(!filled.get(0, 0));
        assert_eq!(lung_area(&filled), 9);
    }

    #[test]
    fn fill_trivial_cases() {
        let all = BinaryMask::new(3, 3, vec![true; 9], 1.0).unwrap();
        assert_eq!(fill_holes(&all), all);
        let mut bits = vec![true; 9];
        bits[1] = false;
        let border_hole = BinaryMask::new(3, 3, bits, 1.0).unwrap();
        assert_eq!(fill_holes(&border_hole), border_hole);
    }

    #[test]
    fn crop_box_examples() {
        let b = crop_box(&[mask(8, 8, &[(3, 5)])]).unwrap();
        assert_eq!(b.to_array(), [3, 3, 5, 5]);

        let full = BinaryMask::new(4, 3, vec![true; 12], 0.0).unwrap();
        assert_eq!(crop_box(&[full.clone(), full]).unwrap(), CropBox::full_frame(3, 4));

        let b = crop_box(&[mask(8, 8, &[(1, 1)]), mask(8, 8, &[(6, 2)])]).unwrap();
        assert_eq!(b.to_array(), [1, 6, 1, 2]);
    }

    #[test]
    fn crop_box_errors() {
        assert!(matches!(
            crop_box(&[mask(4, 4, &[])]),
            Err(KdsError::EmptyMaskVolume)
        ));
        assert!(matches!(crop_box(&[]), Err(KdsError::EmptyMaskVolume)));
        assert!(matches!(
            crop_box(&[mask(4, 4, &[(0, 0)]), mask(5, 4, &[(0, 0)])]),
            Err(KdsError::MaskDimensions(..))
        ));
    }

    #[test]
    fn area_within_box() {
        let m = mask(6, 6, &[(0, 0), (2, 2), (3, 4), (5, 5)]);
        let b = CropBox {
            row_min: 1,
            row_max: 4,
            col_min: 1,
            col_max: 4,
        };
        assert_eq!(lung_area_within(&m, &b), 2);
    }

    #[test]
    fn resize_constant() {
        let s = SliceImage::filled(40, 30, BitDepth::Eight, 77).unwrap();
        let b = CropBox {
            row_min: 3,
            row_max: 20,
            col_min: 5,
            col_max: 9,
        };
        let out = crop_and_resize(&s, &b, 256).unwrap();
        assert_eq!(out.dims(), (256, 256));
        assert!(out.pixels().iter().all(|&v| v == 77));
    }

    #[test]
    fn resize_identity() {
        let px: Vec<u16> = (0..300 * 260).map(|i| (i * 7 % 251) as u16).collect();
        let s = SliceImage::new(260, 300, BitDepth::Eight, px).unwrap();
        let b = CropBox {
            row_min: 10,
            row_max: 265,
            col_min: 2,
            col_max: 257,
        };
        let out = crop_and_resize(&s, &b, 256).unwrap();
        for i in 0..256 {
            for j in 0..256 {
                assert_eq!(out.get(i, j), s.get(i + 10, j + 2));
            }
        }
    }

    #[test]
    fn resize_two_by_two() {
        let s = SliceImage::from_u8(2, 2, &[0, 100, 100, 200]).unwrap();
        let out = crop_and_resize(&s, &CropBox::full_frame(2, 2), 256).unwrap();
        assert_eq!(out.get(0, 0), 0);
        assert_eq!(out.get(0, 255), 100);
        assert_eq!(out.get(255, 0), 100);
        assert_eq!(out.get(255, 255), 200);
        // Pixel 127 samples 0.49609375: 100*(a+b) = 99.21875 -> 99.
        assert_eq!(out.get(127, 127), 99);
        assert!((out.get(128, 128) as i32 - 100).abs() <= 1);
    }

    #[test]
    fn resize_rejects_box_outside() {
        let s = SliceImage::filled(4, 4, BitDepth::Eight, 1).unwrap();
        let b = CropBox {
            row_min: 0,
            row_max: 4,
            col_min: 0,
            col_max: 1,
        };
        assert!(crop_and_resize(&s, &b, 8).is_err());
    }

    #[test]
    fn resize_keeps_sixteen_bit_depth() {
        let s = SliceImage::new(2, 1, BitDepth::Sixteen, vec![1000, 60000]).unwrap();
        let out = crop_and_resize(&s, &CropBox::full_frame(1, 2), 8).unwrap();
        assert_eq!(out.depth(), BitDepth::Sixteen);
        assert_eq!(out.get(0, 0), 1000);
        assert_eq!(out.get(0, 7), 60000);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |bits| BinaryMask::new(w, h, bits, 0.0).unwrap())
        })
    }

    proptest! {
        #[test]
        fn binarize_monotone_in_threshold(
            px in proptest::collection::vec(0.0f64..255.0, 30),
            t1 in 0.0f64..255.0,
            dt in 0.0f64..100.0,
        ) {
            let f = FloatImage::new(6, 5, px).unwrap();
            let lo = binarize(&f, t1);
            let hi = binarize(&f, t1 + dt);
            for (a, b) in lo.bits().iter().zip(hi.bits()) {
                prop_assert!(*a || !*b);
            }
        }

        #[test]
        fn fill_holes_idempotent_and_extensive(m in arb_mask()) {
            let once = fill_holes(&m);
            prop_assert_eq!(&fill_holes(&once), &once);
            for (a, b) in m.bits().iter().zip(once.bits()) {
                prop_assert!(!*a || *b);
            }
            prop_assert!(lung_area(&once) >= lung_area(&m));
        }

        #[test]
        fn crop_box_is_minimal(m in arb_mask()) {
            if let Ok(b) = crop_box(std::slice::from_ref(&m)) {
                let (h, w) = m.dims();
                let ones: Vec<(usize, usize)> = (0..h)
                    .flat_map(|i| (0..w).map(move |j| (i, j)))
                    .filter(|&(i, j)| m.get(i, j))
                    .collect();
                prop_assert!(ones.iter().all(|&(i, j)| b.contains(i, j)));
                prop_assert!(ones.iter().any(|&(i, _)| i == b.row_min));
                prop_assert!(ones.iter().any(|&(i, _)| i == b.row_max));
                prop_assert!(ones.iter().any(|&(_, j)| j == b.col_min));
                prop_assert!(ones.iter().any(|&(_, j)| j == b.col_max));
            } else {
                prop_assert_eq!(lung_area(&m), 0);
            }
        }

        #[test]
        fn resize_output_within_region_range(
            px in proptest::collection::vec(0u16..=255, 9 * 7),
            out in 1usize..40,
        ) {
            let s = SliceImage::new(9, 7, BitDepth::Eight, px).unwrap();
            let b = CropBox { row_min: 1, row_max: 5, col_min: 2, col_max: 8 };
            let region: Vec<u16> = (1..=5).flat_map(|i| (2..=8).map(move |j| (i, j)))
                .map(|(i, j)| s.get(i, j)).collect();
            let lo = *region.iter().min().unwrap();
            let hi = *region.iter().max().unwrap();
            let r = crop_and_resize(&s, &b, out).unwrap();
            prop_assert!(r.pixels().iter().all(|&v| lo <= v && v <= hi));
        }
    }
}
