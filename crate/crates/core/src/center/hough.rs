//! Circular Hough baseline.
//!
//! Rotary blur smears edges into arcs concentric with the rotation center.
//! Edge pixels come from the absolute 4-neighbor Laplacian binarized by an
//! Otsu threshold. Every edge pixel votes for the radius cell it lies in as
//! seen from each candidate; a candidate's score is the energy `Σ votes²` of
//! its radius accumulator, which peaks when the arcs are concentric.

use rayon::prelude::*;

use crate::center::geometric::SearchBox;
use crate::center::{argmin_first, candidates, CenterEstimate, EstimateMethod};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Smallest radius that receives votes.
pub const MIN_RADIUS: usize = 4;

/// Width of one radius cell, pixels.
pub const RADIUS_BIN: f64 = 0.25;

const OTSU_BINS: usize = 256;

/// Absolute 4-neighbor Laplacian; border and invalid-neighborhood pixels are 0.
pub fn abs_laplacian(img: &GrayImage) -> Vec<f64> {
    let (w, h) = img.dimensions();
    let mut out = vec![0.0; w * h];
    if w < 3 || h < 3 {
        return out;
    }
    out.par_chunks_mut(w).enumerate().skip(1).take(h - 2).for_each(|(y, row)| {
        for (x, cell) in row.iter_mut().enumerate().take(w - 1).skip(1) {
            let nb = [(x, y), (x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)];
            if nb.iter().all(|&(i, j)| img.is_valid(i, j)) {
                let v = img.get(x - 1, y) + img.get(x + 1, y) + img.get(x, y - 1) + img.get(x, y + 1)
                    - 4.0 * img.get(x, y);
                *cell = v.abs();
            }
        }
    });
    out
}

/// Otsu threshold over a 256-bin histogram spanning `[0, max]`.
///
/// Returns the upper edge of the last background bin, or `None` when all
/// values are equal.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max.is_nan() || max <= 0.0 {
        return None;
    }
    let mut hist = [0usize; OTSU_BINS];
    for &v in values {
        let b = ((v / max) * OTSU_BINS as f64) as usize;
        hist[b.min(OTSU_BINS - 1)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, &c) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best.0 {
            best = (between, i);
        }
    }
    best.0.is_finite().then(|| (best.1 + 1) as f64 / OTSU_BINS as f64 * max)
}

/// Edge pixels of the binarized Laplacian response.
pub fn edge_pixels(img: &GrayImage) -> Result<Vec<(f64, f64)>> {
    let (w, _) = img.dimensions();
    let lap = abs_laplacian(img);
    let thr = otsu_threshold(&lap)
        .ok_or_else(|| Error::Estimation("Laplacian response is identically zero: empty binary image".into()))?;
    let edges: Vec<(f64, f64)> = lap
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= thr)
        .map(|(i, _)| ((i % w) as f64, (i / w) as f64))
        .collect();
    if edges.is_empty() {
        return Err(Error::Estimation("empty binary image".into()));
    }
    Ok(edges)
}

/// Picks the candidate with the most concentrated radius accumulator; ties
/// go to the smallest `(y, x)`.
pub fn estimate_center_hough(blurred: &GrayImage, search: &SearchBox) -> Result<CenterEstimate> {
    let cands = candidates(search);
    if cands.is_empty() {
        return Err(Error::InvalidParameter("empty candidate region".into()));
    }
    let edges = edge_pixels(blurred)?;
    let (w, h) = blurred.dimensions();
    let cells = ((w as f64).hypot(h as f64) / RADIUS_BIN).ceil() as usize + 2;
    let scores: Vec<f64> = cands
        .par_iter()
        .map(|c| {
            let mut acc = vec![0u64; cells];
            for &(x, y) in &edges {
                let r = (x - c.x).hypot(y - c.y);
                if r >= MIN_RADIUS as f64 {
                    if let Some(cell) = acc.get_mut((r / RADIUS_BIN).round() as usize) {
                        *cell += 1;
                    }
                }
            }
            -(acc.iter().map(|&v| v * v).sum::<u64>() as f64)
        })
        .collect();
    let best = argmin_first(&scores).ok_or_else(|| Error::Estimation("no candidate scored".into()))?;
    Ok(CenterEstimate::new(cands[best], EstimateMethod::Hough))
}
