//! One-dimensional Gaussian kernel density estimation on a fixed grid.
//!
//! The density is evaluated on `grid_size` equally spaced points spanning
//! three bandwidths beyond the sample range and then divided by its own
//! trapezoid integral. Any constant prefactor of the estimator therefore
//! cancels, and neither the kernel's normalizing constant nor a `1/(n h)`
//! factor is applied. The CDF is the cumulative trapezoid integral of the
//! normalized density, pinned to exactly 0 and 1 at the grid ends.

use crate::error::{KdsError, Result};

/// Default number of grid points.
pub const DEFAULT_GRID_SIZE: usize = 100;

/// Coefficient of the rule-of-thumb bandwidth `h = 1.06 σ n^(-1/5)`.
pub const BANDWIDTH_COEFFICIENT: f64 = 1.06;

/// Grid half-margin beyond the sample range, in bandwidths.
const GRID_MARGIN: f64 = 3.0;

/// Sample values with non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    weights: Vec<f64>,
    weighted: bool,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(KdsError::InsufficientSamples(0));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KdsError::InvalidInput("sample values must be finite".into()));
        }
        Ok(Self {
            values,
            weights: vec![1.0 / n as f64; n],
            weighted: false,
        })
    }

    /// Weighted samples. Weights are rescaled to sum to one; if they are all
    /// zero every sample gets the same weight.
    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(KdsError::InvalidInput(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(KdsError::InvalidInput(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let mut set = Self::new(values)?;
        if total > 0.0 {
            set.weights = weights.iter().map(|w| w / total).collect();
            set.weighted = true;
        }
        Ok(set)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        if self.weighted {
            self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
        } else {
            self.values.iter().sum::<f64>() / self.len() as f64
        }
    }

    /// Sample count, or Kish's effective size `1 / Σw²` for weighted sets.
    pub fn effective_len(&self) -> f64 {
        if self.weighted {
            1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
        } else {
            self.len() as f64
        }
    }

    /// Unbiased standard deviation: the `n - 1` denominator, or its
    /// reliability-weight analogue `1 - Σw²`. `None` when undefined.
    pub fn std_dev(&self) -> Option<f64> {
        let mean = self.mean();
        if self.weighted {
            let sum_sq: f64 = self.weights.iter().map(|w| w * w).sum();
            let denom = 1.0 - sum_sq;
            if denom <= f64::EPSILON {
                return None;
            }
            let ss: f64 = self
                .values
                .iter()
                .zip(&self.weights)
                .map(|(v, w)| w * (v - mean) * (v - mean))
                .sum();
            Some((ss / denom).sqrt())
        } else {
            if self.len() < 2 {
                return None;
            }
            let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
            Some((ss / (self.len() - 1) as f64).sqrt())
        }
    }

    /// True when every sample carrying weight has the same value.
    fn is_constant(&self) -> bool {
        let mut live = self
            .values
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, _)| *v);
        match live.next() {
            Some(first) => live.all(|v| v == first),
            None => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub h: f64,
    /// Set when the spread is zero and the fallback width was used.
    pub degenerate: bool,
}

impl Bandwidth {
    /// Width used when the samples have no spread.
    pub fn fallback(samples: &SampleSet) -> Self {
        Self {
            h: (0.01 * samples.mean().abs()).max(1.0),
            degenerate: true,
        }
    }
}

/// `h = 1.06 σ n^(-1/5)` with the unbiased standard deviation.
pub fn scott_bandwidth(samples: &SampleSet) -> Result<Bandwidth> {
    if samples.len() < 2 {
        return Err(KdsError::InsufficientSamples(samples.len()));
    }
    if samples.is_constant() {
        return Ok(Bandwidth::fallback(samples));
    }
    match samples.std_dev() {
        Some(sigma) if sigma > 0.0 => Ok(Bandwidth {
            h: BANDWIDTH_COEFFICIENT * sigma * samples.effective_len().powf(-0.2),
            degenerate: false,
        }),
        _ => Ok(Bandwidth::fallback(samples)),
    }
}

/// [`scott_bandwidth`], falling back to the degenerate width for a single
/// sample instead of failing.
pub fn bandwidth_or_fallback(samples: &SampleSet) -> Bandwidth {
    scott_bandwidth(samples).unwrap_or_else(|_| Bandwidth::fallback(samples))
}

/// `exp(-(x - x')² / (2 σ²))`
#[inline]
pub fn gaussian_kernel(x: f64, x_prime: f64, variance: f64) -> f64 {
    let d = x - x_prime;
    (-d * d / (2.0 * variance)).exp()
}

fn trapezoid(grid: &[f64], ys: &[f64]) -> f64 {
    grid.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Cumulative trapezoid integral of `density`, scaled to end at exactly 1.
pub fn cdf(grid: &[f64], density: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (x, y) in grid.windows(2).zip(density.windows(2)) {
        acc += 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
        out.push(acc);
    }
    let total = acc;
    if total > 0.0 {
        for c in &mut out {
            *c /= total;
        }
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    samples: SampleSet,
    bandwidth: Bandwidth,
    grid: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    /// Trapezoid integral of the raw kernel sum over the grid.
    normalizer: f64,
}

/// Evaluate the kernel sum on `grid_size` points over
/// `[min - 3h, max + 3h]` and normalize it to unit area.
pub fn estimate_density(
    samples: &SampleSet,
    bandwidth: Bandwidth,
    grid_size: usize,
) -> Result<KdeModel> {
    let h = bandwidth.h;
    if !(h.is_finite() && h > 0.0) {
        return Err(KdsError::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    if grid_size < 2 {
        return Err(KdsError::InvalidInput("grid needs at least 2 points".into()));
    }
    let lo = samples.min() - GRID_MARGIN * h;
    let hi = samples.max() + GRID_MARGIN * h;
    let step = (hi - lo) / (grid_size - 1) as f64;
    let mut grid: Vec<f64> = (0..grid_size).map(|j| lo + j as f64 * step).collect();
    grid[grid_size - 1] = hi;

    let variance = h * h / 2.0;
    let raw: Vec<f64> = grid
        .iter()
        .map(|&g| raw_sum(samples, g, variance))
        .collect();
    let normalizer = trapezoid(&grid, &raw);
    if !(normalizer > 0.0) {
        return Err(KdsError::InvalidInput("density vanished on the grid".into()));
    }
    let density: Vec<f64> = raw.iter().map(|r| r / normalizer).collect();
    let cdf = cdf(&grid, &density);
    Ok(KdeModel {
        samples: samples.clone(),
        bandwidth,
        grid,
        density,
        cdf,
        normalizer,
    })
}

#[inline]
fn raw_sum(samples: &SampleSet, x: f64, variance: f64) -> f64 {
    samples
        .values
        .iter()
        .zip(&samples.weights)
        .map(|(&xi, &w)| w * gaussian_kernel(x, xi, variance))
        .sum()
}

impl KdeModel {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn h(&self) -> f64 {
        self.bandwidth.h
    }

    /// `σ² = h² / 2`
    pub fn kernel_variance(&self) -> f64 {
        self.bandwidth.h * self.bandwidth.h / 2.0
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    /// Normalized density at an arbitrary point, off-grid included.
    pub fn evaluate(&self, x: f64) -> f64 {
        raw_sum(&self.samples, x, self.kernel_variance()) / self.normalizer
    }

    /// Piecewise-linear interpolant of the tabulated CDF.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let last = self.grid.len() - 1;
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[last] {
            return 1.0;
        }
        let j = self.grid.partition_point(|&g| g <= x).min(last);
        let (x0, x1) = (self.grid[j - 1], self.grid[j]);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// Inverse of [`cdf_at`](Self::cdf_at). On flat stretches the leftmost
    /// abscissa reaching `p` wins.
    pub fn quantile(&self, p: f64) -> f64 {
        let last = self.grid.len() - 1;
        if p <= 0.0 {
            return self.grid[0];
        }
        if p >= 1.0 {
            return self.grid[last];
        }
        let j = self.cdf.partition_point(|&c| c < p).clamp(1, last);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let (x0, x1) = (self.grid[j - 1], self.grid[j]);
        if c1 <= c0 {
            return x0;
        }
        x0 + (x1 - x0) * (p - c0) / (c1 - c0)
    }
}
