//! In-memory slice representations.
//!
//! [`SliceImage`] holds integer samples at a declared bit depth and is what
//! ingestion produces and export consumes. [`FloatImage`] carries filter
//! output at full precision so thresholding never sees quantized values.

use crate::error::{KdsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }

    /// Factor that maps a value on the 8-bit scale onto this depth.
    pub fn scale_from_8bit(self) -> f64 {
        self.max_value() as f64 / 255.0
    }
}

/// Row-major grayscale slice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SliceImage {
    width: usize,
    height: usize,
    depth: BitDepth,
    pixels: Vec<u16>,
}

impl SliceImage {
    pub fn new(width: usize, height: usize, depth: BitDepth, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(KdsError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(KdsError::InvalidImage(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        let max = depth.max_value();
        if let Some(v) = pixels.iter().find(|&&v| v > max) {
            return Err(KdsError::InvalidImage(format!(
                "sample {v} exceeds {depth:?} range"
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            pixels,
        })
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            BitDepth::Eight,
            pixels.iter().map(|&v| v as u16).collect(),
        )
    }

    pub fn filled(width: usize, height: usize, depth: BitDepth, value: u16) -> Result<Self> {
        Self::new(width, height, depth, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Samples rescaled to 8 bits, rounding half up.
    pub fn to_u8(&self) -> Vec<u8> {
        match self.depth {
            BitDepth::Eight => self.pixels.iter().map(|&v| v as u8).collect(),
            BitDepth::Sixteen => self
                .pixels
                .iter()
                .map(|&v| ((v as u32 * 255 + 32767) / 65535) as u8)
                .collect(),
        }
    }
}

/// Row-major real-valued image.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(KdsError::InvalidImage(format!(
                "{} samples do not fit {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
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

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Round half up and clamp into `depth`.
    pub fn quantize(&self, depth: BitDepth) -> SliceImage {
        let max = depth.max_value() as f64;
        SliceImage {
            width: self.width,
            height: self.height,
            depth,
            pixels: self
                .pixels
                .iter()
                .map(|&v| round_half_up(v).clamp(0.0, max) as u16)
                .collect(),
        }
    }
}

#[inline]
pub(crate) fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}
