use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KdsError, Result};
use crate::image::BitDepth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FilterMode {
    #[default]
    #[serde(rename = "min")]
    Minimum,
    #[serde(rename = "mean")]
    WeightedMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SamplerMode {
    /// KDE over the lung-area values themselves.
    #[default]
    #[serde(rename = "area")]
    AreaQuantile,
    /// KDE over slice indices, each weighted by its share of the total area.
    #[serde(rename = "index")]
    IndexWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Layout {
    /// `<root>/<source_id>/<label>/<scan_id>/*`
    #[default]
    #[serde(rename = "tree")]
    LabeledTree,
    /// `<root>/<scan_id>/*`
    #[serde(rename = "flat")]
    Flat,
}

/// Every pipeline parameter. Thresholds are on the 8-bit scale and are
/// rescaled for 16-bit slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub filter_mode: FilterMode,
    pub kernel_radius: usize,
    pub threshold: f64,
    pub out_size: usize,
    pub n_select: usize,
    pub kde_grid: usize,
    pub sampler_mode: SamplerMode,
    pub layout: Layout,
    pub source_thresholds: BTreeMap<u32, f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter_mode: FilterMode::Minimum,
            kernel_radius: 1,
            threshold: 100.0,
            out_size: 256,
            n_select: 8,
            kde_grid: 100,
            sampler_mode: SamplerMode::AreaQuantile,
            layout: Layout::LabeledTree,
            source_thresholds: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KdsError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(KdsError::Config(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        positive("kernel_radius", self.kernel_radius)?;
        positive("n_select", self.n_select)?;
        if self.out_size < 8 {
            return Err(KdsError::Config("out_size must be at least 8".into()));
        }
        if self.kde_grid < 2 {
            return Err(KdsError::Config("kde_grid must be at least 2".into()));
        }
        let thresholds = std::iter::once(&self.threshold).chain(self.source_thresholds.values());
        for t in thresholds {
            if !t.is_finite() || *t <= 0.0 {
                return Err(KdsError::Config(format!("threshold {t} must be positive")));
            }
        }
        Ok(())
    }

    /// Threshold for a slice from `source` at `depth`, in that depth's units.
    pub fn threshold_for(&self, source: Option<u32>, depth: BitDepth) -> f64 {
        let t = source
            .and_then(|s| self.source_thresholds.get(&s))
            .copied()
            .unwrap_or(self.threshold);
        t * depth.scale_from_8bit()
    }
}
