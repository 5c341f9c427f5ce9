//! Dark-object segmentation and subpixel localization.
//!
//! Objects are 4-connected regions of valid pixels darker than a threshold.
//! Edges are located by linear interpolation of the threshold crossing;
//! centroids weight each pixel by how far it lies below the threshold.

use std::collections::VecDeque;

use crate::image::{Axis, GrayImage, Rect, SubpixelPoint};

/// Intensity that separates dark objects from the background.
pub const DARK_THRESHOLD: f64 = 0.5;

/// Connected set of dark pixels.
#[derive(Debug, Clone)]
pub struct Component {
    pub pixels: Vec<(usize, usize)>,
    pub bbox: Rect,
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Direction in which an object's extremal edge is sought.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Largest coordinate along the axis (right or bottom).
    Max(Axis),
    /// Smallest coordinate along the axis (left or top).
    Min(Axis),
}

/// Dark components inside `region`, largest first.
pub fn dark_components(img: &GrayImage, region: Rect, threshold: f64) -> Vec<Component> {
    let (w, h) = img.dimensions();
    let x_end = (region.x + region.w).min(w);
    let y_end = (region.y + region.h).min(h);
    let is_dark = |x: usize, y: usize| img.is_valid(x, y) && img.get(x, y) < threshold;
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y0 in region.y..y_end {
        for x0 in region.x..x_end {
            if seen[y0 * w + x0] || !is_dark(x0, y0) {
                continue;
            }
            let mut pixels = Vec::new();
            let mut queue = VecDeque::from([(x0, y0)]);
            seen[y0 * w + x0] = true;
            let (mut lx, mut ly, mut hx, mut hy) = (x0, y0, x0, y0);
            while let Some((x, y)) = queue.pop_front() {
                pixels.push((x, y));
                lx = lx.min(x);
                hx = hx.max(x);
                ly = ly.min(y);
                hy = hy.max(y);
                let mut push = |nx: usize, ny: usize| {
                    if nx >= region.x && nx < x_end && ny >= region.y && ny < y_end {
                        let i = ny * w + nx;
                        if !seen[i] && is_dark(nx, ny) {
                            seen[i] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                };
                if x > 0 {
                    push(x - 1, y);
                }
                push(x + 1, y);
                if y > 0 {
                    push(x, y - 1);
                }
                push(x, y + 1);
            }
            out.push(Component {
                pixels,
                bbox: Rect::new(lx, ly, hx - lx + 1, hy - ly + 1),
            });
        }
    }
    out.sort_by_key(|c| std::cmp::Reverse(c.len()));
    out
}

/// Subpixel position of the component's extremal edge on `side`.
///
/// The extremal pixels are those furthest towards `side`; the scan runs
/// along the axis through the middle one of them and linearly interpolates
/// where the intensity crosses `threshold` between the last dark pixel and
/// its outward neighbor.
pub fn extremal_edge(img: &GrayImage, comp: &Component, side: Side, threshold: f64) -> Option<f64> {
    let (axis, sign) = match side {
        Side::Max(a) => (a, 1isize),
        Side::Min(a) => (a, -1isize),
    };
    let along = |p: &(usize, usize)| match axis {
        Axis::X => p.0,
        Axis::Y => p.1,
    };
    let across = |p: &(usize, usize)| match axis {
        Axis::X => p.1,
        Axis::Y => p.0,
    };
    let extreme = if sign > 0 {
        comp.pixels.iter().map(along).max()?
    } else {
        comp.pixels.iter().map(along).min()?
    };
    let mut lanes: Vec<usize> = comp
        .pixels
        .iter()
        .filter(|p| along(p) == extreme)
        .map(across)
        .collect();
    lanes.sort_unstable();
    let lane = lanes[lanes.len() / 2];
    let pixel = |a: usize| match axis {
        Axis::X => (a, lane),
        Axis::Y => (lane, a),
    };
    let next = extreme as isize + sign;
    let limit = match axis {
        Axis::X => img.width(),
        Axis::Y => img.height(),
    } as isize;
    if next < 0 || next >= limit {
        return None;
    }
    let (x0, y0) = pixel(extreme);
    let (x1, y1) = pixel(next as usize);
    if !img.is_valid(x1, y1) {
        return None;
    }
    let v0 = img.get(x0, y0);
    let v1 = img.get(x1, y1);
    if v1 <= v0 {
        return Some(extreme as f64);
    }
    let t = ((threshold - v0) / (v1 - v0)).clamp(0.0, 1.0);
    Some(extreme as f64 + sign as f64 * t)
}

/// Centroid weighted by `threshold - value` over the component.
pub fn weighted_centroid(img: &GrayImage, comp: &Component, threshold: f64) -> Option<SubpixelPoint> {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for &(x, y) in &comp.pixels {
        let wgt = threshold - img.get(x, y);
        sx += wgt * x as f64;
        sy += wgt * y as f64;
        sw += wgt;
    }
    (sw > 0.0).then(|| SubpixelPoint::new(sx / sw, sy / sw))
}
