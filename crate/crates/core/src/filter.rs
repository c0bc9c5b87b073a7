//! Noise suppression ahead of thresholding.
//!
//! Both filters pad by replicating the nearest edge pixel, so borders are
//! never darkened by an implicit zero frame.

use std::collections::VecDeque;

use crate::config::FilterMode;
use crate::error::{KdsError, Result};
use crate::image::{FloatImage, SliceImage};

/// A `(2k+1)x(2k+1)` grid of non-negative weights with a positive sum.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    radius: usize,
    weights: Vec<f64>,
}

impl FilterKernel {
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(KdsError::InvalidKernel(format!(
                "radius {radius} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(KdsError::InvalidKernel(
                "weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(KdsError::InvalidKernel("weights sum to zero".into()));
        }
        Ok(Self { radius, weights })
    }

    /// Box kernel.
    pub fn uniform(radius: usize) -> Self {
        let side = 2 * radius + 1;
        Self {
            radius,
            weights: vec![1.0; side * side],
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(p, q)`, both in `-k..=k`.
    pub fn weight(&self, p: isize, q: isize) -> f64 {
        let k = self.radius as isize;
        self.weights[((p + k) * (2 * k + 1) + (q + k)) as usize]
    }
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Normalized weighted mean over each pixel's neighbourhood.
pub fn weighted_mean_filter(slice: &SliceImage, kernel: &FilterKernel) -> FloatImage {
    let (h, w) = slice.dims();
    let k = kernel.radius() as isize;
    let side = kernel.side();
    let norm: f64 = kernel.weights().iter().sum();
    let src = slice.pixels();
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h as isize {
        for j in 0..w as isize {
            let mut acc = 0.0;
            for p in -k..=k {
                let row = clamp_index(i + p, h) * w;
                let wrow = &kernel.weights()[((p + k) as usize) * side..][..side];
                for (q, &wt) in (-k..=k).zip(wrow) {
                    acc += wt * src[row + clamp_index(j + q, w)] as f64;
                }
            }
            out.push(acc / norm);
        }
    }
    FloatImage::new(w, h, out).expect("dimensions come from a valid slice")
}

/// Sliding minimum over one line with `radius` replicated samples on each end.
fn line_min(line: &[u16], radius: usize, out: &mut [u16]) {
    let n = line.len() as isize;
    let r = radius as isize;
    let at = |i: isize| line[clamp_index(i, line.len())];
    // Monotone deque of padded positions whose values increase front to back.
    let mut window: VecDeque<isize> = VecDeque::new();
    let mut next = -r;
    for i in 0..n {
        while next <= i + r {
            let v = at(next);
            while window.back().is_some_and(|&b| at(b) >= v) {
                window.pop_back();
            }
            window.push_back(next);
            next += 1;
        }
        while window.front().is_some_and(|&f| f < i - r) {
            window.pop_front();
        }
        out[i as usize] = at(*window.front().expect("window is never empty"));
    }
}

/// Minimum over the `(2k+1)x(2k+1)` neighbourhood, computed as a row pass
/// followed by a column pass.
pub fn min_filter(slice: &SliceImage, k: usize) -> SliceImage {
    let (h, w) = slice.dims();
    if k == 0 {
        return slice.clone();
    }
    let mut rows = vec![0u16; h * w];
    for (src, dst) in slice.pixels().chunks(w).zip(rows.chunks_mut(w)) {
        line_min(src, k, dst);
    }
    let mut out = vec![0u16; h * w];
    let mut column = vec![0u16; h];
    let mut column_out = vec![0u16; h];
    for j in 0..w {
        for i in 0..h {
            column[i] = rows[i * w + j];
        }
        line_min(&column, k, &mut column_out);
        for i in 0..h {
            out[i * w + j] = column_out[i];
        }
    }
    SliceImage::new(w, h, slice.depth(), out).expect("same shape and range as input")
}

/// Run the filter selected by `mode`. The minimum filter uses the kernel's
/// radius and ignores its weights.
pub fn apply_filter(slice: &SliceImage, mode: FilterMode, kernel: &FilterKernel) -> FloatImage {
    match mode {
        FilterMode::Minimum => min_filter(slice, kernel.radius()).to_float(),
        FilterMode::WeightedMean => weighted_mean_filter(slice, kernel),
    }
}
