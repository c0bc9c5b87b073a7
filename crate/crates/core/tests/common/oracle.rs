//! Brute-force references, kept independent of the library's code paths.

use kds::segment::BinaryMask;
use kds::SliceImage;

fn padded(s: &SliceImage, k: usize) -> (Vec<f64>, usize) {
    let (h, w) = s.dims();
    let (ph, pw) = (h + 2 * k, w + 2 * k);
    let mut out = vec![0.0; ph * pw];
    for i in 0..ph {
        for j in 0..pw {
            let si = (i as isize - k as isize).clamp(0, h as isize - 1) as usize;
            let sj = (j as isize - k as isize).clamp(0, w as isize - 1) as usize;
            out[i * pw + j] = s.get(si, sj) as f64;
        }
    }
    (out, pw)
}

/// Replicate-padded copy followed by a direct weighted sum.
pub fn weighted_mean(s: &SliceImage, k: usize, weights: &[f64]) -> Vec<f64> {
    let (h, w) = s.dims();
    let (pad, pw) = padded(s, k);
    let side = 2 * k + 1;
    let total: f64 = weights.iter().sum();
    let mut out = vec![];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for p in 0..side {
                for q in 0..side {
                    acc += weights[p * side + q] * pad[(i + p) * pw + j + q];
                }
            }
            out.push(acc / total);
        }
    }
    out
}

/// Per-pixel minimum over the replicate-padded window.
pub fn minimum(s: &SliceImage, k: usize) -> Vec<u16> {
    let (h, w) = s.dims();
    let (pad, pw) = padded(s, k);
    let side = 2 * k + 1;
    let mut out = vec![];
    for i in 0..h {
        for j in 0..w {
            let mut m = f64::INFINITY;
            for p in 0..side {
                for q in 0..side {
                    m = m.min(pad[(i + p) * pw + j + q]);
                }
            }
            out.push(m as u16);
        }
    }
    out
}

/// Fixpoint relaxation: background is outside if on the border or next to
/// an outside pixel; iterate until nothing changes.
pub fn fill_holes(m: &BinaryMask) -> Vec<bool> {
    let (h, w) = m.dims();
    let mut outside = vec![false; h * w];
    loop {
        let mut changed = false;
        for i in 0..h {
            for j in 0..w {
                if m.get(i, j) || outside[i * w + j] {
                    continue;
                }
                let border = i == 0 || j == 0 || i == h - 1 || j == w - 1;
                let near = (i > 0 && outside[(i - 1) * w + j])
                    || (i + 1 < h && outside[(i + 1) * w + j])
                    || (j > 0 && outside[i * w + j - 1])
                    || (j + 1 < w && outside[i * w + j + 1]);
                if border || near {
                    outside[i * w + j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    outside.into_iter().map(|o| !o).collect()
}
