//! Gramian angular summation fields and the multi-granularity composite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{is_absent, resample, RateTrace};
use crate::matrix::Matrix;

use super::tensor::{ImageTensor, Representation, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GafVariant {
    #[default]
    Summation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GafConfig {
    pub gaf_num: usize,
    /// Multiples of the trace granularity, finest first.
    pub granularities: Vec<u32>,
    /// Samples per field at every granularity.
    pub points: usize,
    pub variant: GafVariant,
}

impl Default for GafConfig {
    fn default() -> Self {
        GafConfig {
            gaf_num: 4,
            granularities: vec![1, 5, 15, 60],
            points: 60,
            variant: GafVariant::Summation,
        }
    }
}

impl GafConfig {
    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4].contains(&self.gaf_num) {
            return Err(Error::contract(format!("gaf_num {} is not 1, 2 or 4", self.gaf_num)));
        }
        if self.granularities.len() < self.gaf_num {
            return Err(Error::contract(format!(
                "{} granularities for {} fields",
                self.granularities.len(),
                self.gaf_num
            )));
        }
        if self.granularities[0] == 0 || self.granularities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("granularities must be positive and strictly increasing"));
        }
        if self.points < 2 {
            return Err(Error::contract("a field needs at least 2 points"));
        }
        Ok(())
    }

    /// (rows, cols) of the tile grid.
    pub fn grid(&self) -> (usize, usize) {
        match self.gaf_num {
            1 => (1, 1),
            2 => (1, 2),
            _ => (2, 2),
        }
    }
}

/// Min-max rescale to `[-1, 1]`; a constant series maps to 0.
pub fn gaf_rescale(series: &[f64]) -> Vec<f64> {
    let clean: Vec<f64> = series.iter().map(|&x| if is_absent(x) { 0.0 } else { x }).collect();
    let lo = clean.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = clean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; clean.len()];
    }
    clean
        .iter()
        .map(|&x| (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0))
        .collect()
}

pub fn gaf_matrix(series: &[f64]) -> Result<Matrix> {
    if series.len() < 2 {
        return Err(Error::contract(format!(
            "a Gramian field needs at least 2 samples, got {}",
            series.len()
        )));
    }
    let phi: Vec<f64> = gaf_rescale(series).into_iter().map(f64::acos).collect();
    let n = phi.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (phi[i] + phi[j]).cos();
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    Ok(g)
}

/// The `points`-sample window at `multiplier` × the trace granularity,
/// centred on base index `center`. Windows that would run off either end are
/// shifted inwards.
pub fn gaf_window(trace: &RateTrace, center: usize, multiplier: u32, points: usize) -> Result<Vec<f64>> {
    if center >= trace.len() {
        return Err(Error::contract(format!(
            "centre {center} outside a {}-sample trace",
            trace.len()
        )));
    }
    let m = multiplier as usize;
    let coarse_len = trace.len() / m;
    if coarse_len < points {
        return Err(Error::contract(format!(
            "trace of {} samples is too short for {points} points at {multiplier}×",
            trace.len()
        )));
    }
    let start = (center / m).saturating_sub(points / 2).min(coarse_len - points);
    let base = &trace.rates()[start * m..(start + points) * m];
    let piece = RateTrace::from_key(
        trace.key().clone(),
        trace.granularity_s(),
        trace.epoch_of(start * m),
        base.to_vec(),
    )?;
    let coarse = resample(&piece, trace.granularity_s() * multiplier)?;
    Ok(coarse.rates().to_vec())
}

/// Nearest-neighbour upscale of `g` into a `h × w` block of pixel values `(G+1)/2`.
pub fn render_tile(g: &Matrix, h: usize, w: usize) -> Vec<f64> {
    let n = g.rows();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(((g.get(r * n / h, c * n / w) + 1.0) / 2.0).clamp(0.0, 1.0));
        }
    }
    out
}

pub fn encode_gaf_composite(trace: &RateTrace, center: usize, cfg: &GafConfig, size: usize) -> Result<ImageTensor> {
    cfg.validate()?;
    let (gr, gc) = cfg.grid();
    if size < 2 || size % gr != 0 || size % gc != 0 {
        return Err(Error::contract(format!("image size {size} does not tile {gr}×{gc}")));
    }
    let (th, tw) = (size / gr, size / gc);
    let mut img = ImageTensor::zeros(size, size, Representation::Gaf);
    for k in 0..cfg.gaf_num {
        let window = gaf_window(trace, center, cfg.granularities[k], cfg.points)?;
        let tile = render_tile(&gaf_matrix(&window)?, th, tw);
        let (r0, c0) = ((k / gc) * th, (k % gc) * tw);
        for r in 0..th {
            for c in 0..tw {
                for ch in 0..CHANNELS {
                    img.set(ch, r0 + r, c0 + c, tile[r * tw + c]);
                }
            }
        }
    }
    Ok(img)
}
