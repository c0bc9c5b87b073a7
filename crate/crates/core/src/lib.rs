//! Chest-CT slice-stack preprocessing.
//!
//! A scan is a directory of same-sized grayscale slices. Each scan goes
//! through quality control, noise filtering, threshold masking with hole
//! filling, a volume-wide crop, and finally kernel-density slice sampling
//! which keeps a fixed number of representative slices (8 by default).
//!
//! The stages are exposed as independent modules so they can be used
//! without the orchestration in [`pipeline`].

pub mod config;
pub mod error;
pub mod filter;
pub mod image;
pub mod ingest;
pub mod kde;
pub mod manifest;
pub mod pipeline;
pub mod sampler;
pub mod segment;
pub mod stats;

pub use config::{FilterMode, Layout, PipelineConfig, SamplerMode};
pub use error::{KdsError, Result};
pub use image::{BitDepth, FloatImage, SliceImage};
pub use ingest::{check_consistency, load_scan, order_slices, Label, QcReason, QcReport, ScanVolume};
pub use kde::{KdeModel, SampleSet};
pub use sampler::{SamplingPlan, Selection};
pub use segment::{BinaryMask, CropBox};
