//! Image quality metrics and the masks they are evaluated on.

use crate::error::{Error, Result};
use crate::image::{GrayImage, Rect, SubpixelPoint};

/// Peak signal-to-noise ratio in dB over the pixels where `mask` is true.
///
/// Full scale is 1.0. Identical inputs yield `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage, mask: &[bool]) -> Result<f64> {
    let mse = mse(a, b, mask)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

pub fn mse(a: &GrayImage, b: &GrayImage, mask: &[bool]) -> Result<f64> {
    check_dims(a, b)?;
    if mask.len() != a.data().len() {
        return Err(Error::InvalidParameter(format!(
            "mask has {} entries for {} pixels",
            mask.len(),
            a.data().len()
        )));
    }
    let (sum, n) = a
        .data()
        .iter()
        .zip(b.data())
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((x, y), _)| (s + (x - y) * (x - y), n + 1));
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// Mean absolute error over masked pixels.
pub fn mean_abs_error(a: &GrayImage, b: &GrayImage, mask: &[bool]) -> Result<f64> {
    check_dims(a, b)?;
    let (sum, n) = a
        .data()
        .iter()
        .zip(b.data())
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((x, y), _)| (s + (x - y).abs(), n + 1));
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    Ok(())
}

/// Pixels whose distance to `center` lies in `[r_min, r_max]`.
pub fn annulus_mask(width: usize, height: usize, center: SubpixelPoint, r_min: f64, r_max: f64) -> Vec<bool> {
    let mut mask = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let r = (x as f64 - center.x).hypot(y as f64 - center.y);
            mask.push(r >= r_min && r <= r_max);
        }
    }
    mask
}

/// Element-wise conjunction of a mask with the validity of each image.
pub fn and_valid(mut mask: Vec<bool>, images: &[&GrayImage]) -> Vec<bool> {
    for img in images {
        if let Some(m) = img.valid_mask() {
            for (a, &b) in mask.iter_mut().zip(m) {
                *a &= b;
            }
        }
    }
    mask
}

/// Radius of the largest circle about `center` that stays inside the frame.
pub fn inscribed_radius(width: usize, height: usize, center: SubpixelPoint) -> f64 {
    let left = center.x;
    let top = center.y;
    let right = width as f64 - 1.0 - center.x;
    let bottom = height as f64 - 1.0 - center.y;
    left.min(top).min(right).min(bottom).max(0.0)
}

/// Distance from `center` to the farthest pixel center of the frame.
pub fn farthest_corner(width: usize, height: usize, center: SubpixelPoint) -> f64 {
    let xs = [0.0, width as f64 - 1.0];
    let ys = [0.0, height as f64 - 1.0];
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x - center.x).hypot(y - center.y)))
        .fold(0.0, f64::max)
}

/// Mean local standard deviation (5x5 windows) over the given rectangles.
///
/// Windows are centered on every pixel of every rectangle and clipped to the
/// image. Flat regions of a clean image score 0; ripples raise the score.
pub fn ringing_index(img: &GrayImage, flat_regions: &[Rect]) -> Result<f64> {
    const HALF: usize = 2;
    let (w, h) = img.dimensions();
    let mut total = 0.0;
    let mut count = 0usize;
    for r in flat_regions {
        if r.w == 0 || r.h == 0 || r.x + r.w > w || r.y + r.h > h {
            return Err(Error::RegionOutOfBounds {
                x: r.x,
                y: r.y,
                w: r.w,
                h: r.h,
                width: w,
                height: h,
            });
        }
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                let (mut s, mut s2, mut n) = (0.0, 0.0, 0.0);
                for yy in y.saturating_sub(HALF)..(y + HALF + 1).min(h) {
                    for xx in x.saturating_sub(HALF)..(x + HALF + 1).min(w) {
                        let v = img.get(xx, yy);
                        s += v;
                        s2 += v * v;
                        n += 1.0;
                    }
                }
                let mean = s / n;
                total += (s2 / n - mean * mean).max(0.0).sqrt();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(total / count as f64)
}

/// Tiles of `tile` x `tile` pixels whose value range in `reference` is at most
/// `tolerance` and whose pixels all satisfy `keep`.
pub fn find_flat_regions(
    reference: &GrayImage,
    tile: usize,
    tolerance: f64,
    keep: &[bool],
) -> Vec<Rect> {
    let (w, h) = reference.dimensions();
    let mut out = Vec::new();
    if tile == 0 {
        return out;
    }
    for ty in (0..h.saturating_sub(tile - 1)).step_by(tile) {
        for tx in (0..w.saturating_sub(tile - 1)).step_by(tile) {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut inside = true;
            'tile: for y in ty..ty + tile {
                for x in tx..tx + tile {
                    if !keep[y * w + x] {
                        inside = false;
                        break 'tile;
                    }
                    let v = reference.get(x, y);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if inside && hi - lo <= tolerance {
                out.push(Rect::new(tx, ty, tile, tile));
            }
        }
    }
    out
}
