//! Line chart, heat map and scatter plot rasterizers.
//!
//! All three share one coordinate system: sample `i` of an `L`-sample
//! window sits at column `round(i (S-1) / (L-1))`, and a rate `v` sits at
//! row `(S-1) - round(v / ymax (S-1))`, where `ymax` is the largest rate in
//! either direction (or 1 for an all-zero window). Inbound traffic is drawn
//! in the red channel and outbound in the blue channel.

use crate::error::{Error, Result};
use crate::ingest::is_absent;

use super::tensor::{ImageTensor, Representation};

fn check(inbound: &[f64], outbound: &[f64], size: usize) -> Result<()> {
    if inbound.is_empty() || inbound.len() != outbound.len() {
        return Err(Error::contract(format!(
            "window needs equal, non-empty directions (got {} and {})",
            inbound.len(),
            outbound.len()
        )));
    }
    if size < 2 {
        return Err(Error::contract("image size must be at least 2"));
    }
    Ok(())
}

fn clean(x: f64) -> f64 {
    if is_absent(x) || x < 0.0 {
        0.0
    } else {
        x
    }
}

/// Largest rate across both directions; 1 when the window is all zero.
pub fn y_scale(inbound: &[f64], outbound: &[f64]) -> f64 {
    let m = inbound
        .iter()
        .chain(outbound)
        .copied()
        .map(clean)
        .fold(0.0, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

pub fn column_of(i: usize, len: usize, size: usize) -> usize {
    if len <= 1 {
        0
    } else {
        ((i * (size - 1)) as f64 / (len - 1) as f64).round() as usize
    }
}

pub fn row_of(v: f64, ymax: f64, size: usize) -> usize {
    let h = (size - 1) as f64;
    let up = (clean(v) / ymax * h).round().min(h) as usize;
    size - 1 - up
}

fn bresenham(img: &mut ImageTensor, ch: usize, (r0, c0): (usize, usize), (r1, c1): (usize, usize)) {
    let (mut x, mut y) = (c0 as i64, r0 as i64);
    let (x1, y1) = (c1 as i64, r1 as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.set(ch, y as usize, x as usize, 1.0);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn points(series: &[f64], ymax: f64, size: usize) -> Vec<(usize, usize)> {
    series
        .iter()
        .enumerate()
        .map(|(i, &v)| (row_of(v, ymax, size), column_of(i, series.len(), size)))
        .collect()
}

pub fn encode_line_chart(inbound: &[f64], outbound: &[f64], size: usize) -> Result<ImageTensor> {
    check(inbound, outbound, size)?;
    let ymax = y_scale(inbound, outbound);
    let mut img = ImageTensor::zeros(size, size, Representation::LineChart);
    for (ch, series) in [(0, inbound), (2, outbound)] {
        let pts = points(series, ymax, size);
        if pts.len() == 1 {
            img.set(ch, pts[0].0, pts[0].1, 1.0);
        }
        for w in pts.windows(2) {
            bresenham(&mut img, ch, w[0], w[1]);
        }
    }
    Ok(img)
}

pub fn encode_scatter(inbound: &[f64], outbound: &[f64], size: usize) -> Result<ImageTensor> {
    check(inbound, outbound, size)?;
    let ymax = y_scale(inbound, outbound);
    let mut img = ImageTensor::zeros(size, size, Representation::ScatterPlot);
    for (ch, series) in [(0, inbound), (2, outbound)] {
        for (r, c) in points(series, ymax, size) {
            img.set(ch, r, c, 1.0);
        }
    }
    Ok(img)
}

/// Sample range feeding heat-map column `col`: the columns split the window
/// evenly, and a column narrower than one sample takes the sample under it.
pub fn heat_bin(col: usize, len: usize, size: usize) -> (usize, usize) {
    let a = col * len / size;
    let b = ((col + 1) * len / size).max(a + 1).min(len);
    (a, b)
}

/// Each column holds the mean rate of its time bin divided by the window
/// maximum. Colormap: red = inbound, blue = outbound, green = their mean.
pub fn encode_heat_map(inbound: &[f64], outbound: &[f64], size: usize) -> Result<ImageTensor> {
    check(inbound, outbound, size)?;
    let ymax = y_scale(inbound, outbound);
    let len = inbound.len();
    let mut img = ImageTensor::zeros(size, size, Representation::HeatMap);
    for col in 0..size {
        let (a, b) = heat_bin(col, len, size);
        let mean = |s: &[f64]| s[a..b].iter().copied().map(clean).sum::<f64>() / (b - a) as f64 / ymax;
        let i = mean(inbound);
        let o = mean(outbound);
        let rgb = [i, (i + o) / 2.0, o];
        for row in 0..size {
            for (ch, v) in rgb.iter().enumerate() {
                img.set(ch, row, col, *v);
            }
        }
    }
    Ok(img)
}
