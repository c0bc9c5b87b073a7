//! Kernel-density slice sampling.
//!
//! The lung-area distribution of a scan is estimated with [`crate::kde`],
//! its CDF is cut into equal-probability intervals, and each interval
//! contributes representatives in proportion to its probability mass.
//! Within an interval the representative targets the CDF midpoint and the
//! slice closest to that target is taken.

use crate::config::SamplerMode;
use crate::error::{KdsError, Result};
use crate::image::round_half_up;
use crate::kde::{self, Bandwidth, KdeModel, SampleSet};

pub const DEFAULT_SLICES: usize = 8;
pub const DEFAULT_INTERVALS: usize = 8;

/// Remainders closer than this are treated as tied.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    n_select: usize,
    breakpoints: Vec<f64>,
    mode: SamplerMode,
    grid_size: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self::new(DEFAULT_SLICES, SamplerMode::AreaQuantile)
    }
}

impl SamplingPlan {
    /// Equal-percentile intervals `k / 8`.
    pub fn new(n_select: usize, mode: SamplerMode) -> Self {
        Self {
            n_select: n_select.max(1),
            breakpoints: (0..=DEFAULT_INTERVALS)
                .map(|k| k as f64 / DEFAULT_INTERVALS as f64)
                .collect(),
            mode,
            grid_size: kde::DEFAULT_GRID_SIZE,
        }
    }

    /// Custom CDF breakpoints; they must rise strictly from 0 to 1.
    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Result<Self> {
        let valid = breakpoints.len() >= 2
            && breakpoints.first() == Some(&0.0)
            && breakpoints.last() == Some(&1.0)
            && breakpoints.windows(2).all(|w| w[0] < w[1]);
        if !valid {
            return Err(KdsError::InvalidInput(
                "breakpoints must increase strictly from 0 to 1".into(),
            ));
        }
        self.breakpoints = breakpoints;
        Ok(self)
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn n_select(&self) -> usize {
        self.n_select
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Ascending; repeats only when the scan has fewer slices than requested.
    pub indices: Vec<usize>,
    /// CDF level whose target each index was matched to.
    pub per_index_quantile: Vec<f64>,
    pub bandwidth: Bandwidth,
}

/// Largest-remainder apportionment of `seats` proportional to `masses`.
/// Ties on the remainder go to the lower index.
pub fn apportion(masses: &[f64], seats: usize) -> Vec<usize> {
    let total: f64 = masses.iter().map(|m| m.max(0.0)).sum();
    if masses.is_empty() {
        return vec![];
    }
    let quotas: Vec<f64> = if total > 0.0 {
        masses
            .iter()
            .map(|m| seats as f64 * m.max(0.0) / total)
            .collect()
    } else {
        vec![seats as f64 / masses.len() as f64; masses.len()]
    };
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + TIE_EPS).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    // Quantize so near-equal remainders compare equal and fall back to index.
    let key = |k: usize| ((quotas[k] - counts[k] as f64) / TIE_EPS).round() as i64;
    order.sort_by_key(|&k| (-key(k), k));
    for &k in order.iter().cycle().take(seats.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// CDF mass between consecutive interval boundaries on the value axis.
pub fn interval_masses(model: &KdeModel, plan: &SamplingPlan) -> Vec<f64> {
    let bounds: Vec<f64> = plan
        .breakpoints()
        .iter()
        .map(|&p| model.cdf_at(model.quantile(p)))
        .collect();
    bounds.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

/// Number of representatives drawn from each interval.
pub fn allocate_counts(model: &KdeModel, plan: &SamplingPlan) -> Vec<usize> {
    apportion(&interval_masses(model, plan), plan.n_select())
}

/// CDF levels to target: `count` evenly spaced midpoints in each interval.
fn target_levels(plan: &SamplingPlan, counts: &[usize]) -> Vec<f64> {
    let bp = plan.breakpoints();
    counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| {
            let (lo, hi) = (bp[k], bp[k + 1]);
            (0..c).map(move |j| lo + (j as f64 + 0.5) / c as f64 * (hi - lo))
        })
        .collect()
}

fn nearest(values: &[f64], target: f64, taken: Option<&[bool]>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if taken.is_some_and(|t| t[i]) {
            continue;
        }
        let d = (v - target).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Choose `plan.n_select()` slices from a per-slice lung-area series.
pub fn select_slices(areas: &[u64], plan: &SamplingPlan) -> Result<Selection> {
    let n = areas.len();
    if n == 0 {
        return Err(KdsError::EmptySeries);
    }
    let samples = match plan.mode() {
        SamplerMode::AreaQuantile => SampleSet::new(areas.iter().map(|&a| a as f64).collect())?,
        SamplerMode::IndexWeighted => SampleSet::weighted(
            (0..n).map(|i| i as f64).collect(),
            areas.iter().map(|&a| a as f64).collect(),
        )?,
    };
    let bandwidth = kde::bandwidth_or_fallback(&samples);
    let model = kde::estimate_density(&samples, bandwidth, plan.grid_size())?;
    let counts = allocate_counts(&model, plan);
    let levels = target_levels(plan, &counts);

    // Position of each slice on the axis the quantiles live on.
    let values: Vec<f64> = match plan.mode() {
        SamplerMode::AreaQuantile => areas.iter().map(|&a| a as f64).collect(),
        SamplerMode::IndexWeighted => (0..n).map(|i| i as f64).collect(),
    };
    let targets: Vec<f64> = levels
        .iter()
        .map(|&p| {
            let q = model.quantile(p);
            match plan.mode() {
                SamplerMode::AreaQuantile => q,
                SamplerMode::IndexWeighted => round_half_up(q).clamp(0.0, (n - 1) as f64),
            }
        })
        .collect();

    let n_select = plan.n_select();
    let mut picks: Vec<usize> = if n >= n_select {
        let mut taken = vec![false; n];
        targets
            .iter()
            .map(|&t| {
                let i = nearest(&values, t, Some(&taken)).expect("n >= n_select leaves a free slice");
                taken[i] = true;
                i
            })
            .collect()
    } else {
        // Every slice once; the spare seats follow how often the KDE
        // targets landed on each slice.
        let mut hits = vec![0.0; n];
        for &t in &targets {
            hits[nearest(&values, t, None).expect("series is non-empty")] += 1.0;
        }
        let extra = apportion(&hits, n_select - n);
        (0..n)
            .flat_map(|i| std::iter::repeat_n(i, 1 + extra[i]))
            .collect()
    };

    // Pair slices with levels in matching order so that representatives
    // never cross: the k-th lowest level gets the k-th lowest slice value.
    picks.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut paired: Vec<(usize, f64)> = picks.into_iter().zip(levels).collect();
    paired.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    Ok(Selection {
        indices: paired.iter().map(|p| p.0).collect(),
        per_index_quantile: paired.iter().map(|p| p.1).collect(),
        bandwidth,
    })
}

/// Percentage of slices dropped by sampling.
pub fn redundancy_report(total_slices: u64, selected: u64) -> Result<f64> {
    if total_slices == 0 || selected > total_slices {
        return Err(KdsError::InvalidInput(format!(
            "need 0 <= selected <= total and total > 0, got {selected} of {total_slices}"
        )));
    }
    Ok(100.0 * (1.0 - selected as f64 / total_slices as f64))
}
