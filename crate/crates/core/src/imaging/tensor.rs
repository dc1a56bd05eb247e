use serde::{Deserialize, Serialize};

use crate::defense::IndexRange;
use crate::error::{Error, Result};
use crate::ingest::TraceKey;

pub const CHANNELS: usize = 3;
pub const DEFAULT_IMAGE_SIZE: usize = 224;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    LineChart,
    HeatMap,
    ScatterPlot,
    Gaf,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::LineChart,
        Representation::HeatMap,
        Representation::ScatterPlot,
        Representation::Gaf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::LineChart => "line_chart",
            Representation::HeatMap => "heat_map",
            Representation::ScatterPlot => "scatter_plot",
            Representation::Gaf => "gaf",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceWindow {
    pub trace: TraceKey,
    pub range: IndexRange,
}

/// Channel-major `3 × height × width` image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    pub representation: Representation,
    pub source_window: Option<SourceWindow>,
}

impl ImageTensor {
    pub fn zeros(height: usize, width: usize, representation: Representation) -> Self {
        ImageTensor {
            height,
            width,
            pixels: vec![0.0; CHANNELS * height * width],
            representation,
            source_window: None,
        }
    }

    pub fn from_pixels(
        height: usize,
        width: usize,
        pixels: Vec<f64>,
        representation: Representation,
    ) -> Result<Self> {
        if pixels.len() != CHANNELS * height * width {
            return Err(Error::contract(format!(
                "{} pixel values for a {height}×{width} RGB image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::contract(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(ImageTensor {
            height,
            width,
            pixels,
            representation,
            source_window: None,
        })
    }

    pub fn with_source(mut self, source: SourceWindow) -> Self {
        self.source_window = Some(source);
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    fn offset(&self, c: usize, row: usize, col: usize) -> usize {
        (c * self.height + row) * self.width + col
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f64 {
        self.pixels[self.offset(c, row, col)]
    }

    pub fn set(&mut self, c: usize, row: usize, col: usize, v: f64) {
        let i = self.offset(c, row, col);
        self.pixels[i] = v.clamp(0.0, 1.0);
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.pixels[c * n..(c + 1) * n]
    }

    /// RGB triple at a pixel.
    pub fn rgb(&self, row: usize, col: usize) -> [f64; 3] {
        [self.get(0, row, col), self.get(1, row, col), self.get(2, row, col)]
    }

    /// Interleaved 8-bit RGB, row-major.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CHANNELS * self.height * self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                for ch in 0..CHANNELS {
                    out.push((self.get(ch, r, c) * 255.0).round() as u8);
                }
            }
        }
        out
    }

    pub fn from_rgb8(height: usize, width: usize, bytes: &[u8], representation: Representation) -> Result<Self> {
        if bytes.len() != CHANNELS * height * width {
            return Err(Error::Format(format!(
                "{} bytes for a {height}×{width} RGB image",
                bytes.len()
            )));
        }
        let mut img = ImageTensor::zeros(height, width, representation);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..CHANNELS {
                    let v = bytes[(r * width + c) * CHANNELS + ch] as f64 / 255.0;
                    img.set(ch, r, c, v);
                }
            }
        }
        Ok(img)
    }
}
