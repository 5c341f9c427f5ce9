//! Grayscale raster, subpixel sampling and rotation warps.
//!
//! Coordinates follow the pixel-center convention: `x` grows rightward, `y`
//! grows downward and `(0, 0)` is the center of the top-left pixel. A positive
//! rotation angle moves `(1, 0)` towards `(0, 1)`, which is clockwise on
//! screen because the y axis points down.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Continuous pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubpixelPoint {
    pub x: f64,
    pub y: f64,
}

impl SubpixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn distance(&self, other: &SubpixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Coordinate along `axis`.
    pub fn along(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }

    /// Copy with the `axis` coordinate replaced.
    pub fn with(&self, axis: Axis, value: f64) -> Self {
        match axis {
            Axis::X => Self::new(value, self.y),
            Axis::Y => Self::new(self.x, value),
        }
    }
}

/// Image axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Maps `p` through the rotation by `angle` about `center`.
///
/// `center` is an exact fixed point: `p - center` is zero there, so the
/// result is bit-identical to `center` for every angle.
pub fn rotate_point(p: SubpixelPoint, center: SubpixelPoint, angle: f64) -> SubpixelPoint {
    let (s, c) = angle.sin_cos();
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    SubpixelPoint::new(center.x + c * dx - s * dy, center.y + s * dx + c * dy)
}

/// Axis-aligned box drawn around a candidate rotation center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBox {
    pub center: SubpixelPoint,
    pub half_width: f64,
    pub half_height: f64,
}

impl ReferenceBox {
    pub fn new(center: SubpixelPoint, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reference box needs positive half extents, got {half_width} x {half_height}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            half_height,
        })
    }

    pub fn half_extent(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.half_width,
            Axis::Y => self.half_height,
        }
    }

    /// Left edge for `Axis::X`, top edge for `Axis::Y`.
    pub fn near_edge(&self, axis: Axis) -> f64 {
        self.center.along(axis) - self.half_extent(axis)
    }

    /// Right edge for `Axis::X`, bottom edge for `Axis::Y`.
    pub fn far_edge(&self, axis: Axis) -> f64 {
        self.center.along(axis) + self.half_extent(axis)
    }
}

/// Integer pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    /// Rectangle spanning the float bounds, clipped to a `width` x `height` raster.
    pub fn clipped(x0: f64, y0: f64, x1: f64, y1: f64, width: usize, height: usize) -> Rect {
        let cx0 = x0.floor().clamp(0.0, width as f64) as usize;
        let cy0 = y0.floor().clamp(0.0, height as f64) as usize;
        let cx1 = (x1.ceil() + 1.0).clamp(0.0, width as f64) as usize;
        let cy1 = (y1.ceil() + 1.0).clamp(0.0, height as f64) as usize;
        Rect::new(cx0, cy0, cx1.saturating_sub(cx0), cy1.saturating_sub(cy0))
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }
}

/// Row-major luminance raster with values in `[0, 1]`.
///
/// `valid` is `None` when every pixel is valid. Warps that sample outside
/// their source attach a mask with `false` at those pixels and store `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid: Option<Vec<bool>>,
}

impl GrayImage {
    /// Black image with a full valid mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value.clamp(0.0, 1.0); width * height],
            valid: None,
        }
    }

    /// Wraps row-major `data`, checking the length and the `[0, 1]` range.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "buffer of {} values does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::InvalidParameter(format!(
                "luminance {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            valid: None,
        })
    }

    /// Builds an image from `f(x, y)`; results are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; width * height];
        if width > 0 {
            data.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
                for (x, v) in row.iter_mut().enumerate() {
                    *v = clamp_unit(f(x, y));
                }
            });
        }
        Self {
            width,
            height,
            data,
            valid: None,
        }
    }

    /// Assembles an image from raw parts, clamping values and dropping an all-true mask.
    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        mut data: Vec<f64>,
        valid: Option<Vec<bool>>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height);
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        let valid = valid.filter(|m| m.iter().any(|&b| !b));
        if let Some(m) = &valid {
            debug_assert_eq!(m.len(), width * height);
        }
        Self {
            width,
            height,
            data,
            valid,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid
            .as_ref()
            .is_none_or(|m| m[y * self.width + x])
    }

    /// Explicit mask, `None` when every pixel is valid.
    pub fn valid_mask(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    /// Per-pixel validity as a dense vector.
    pub fn validity(&self) -> Vec<bool> {
        match &self.valid {
            Some(m) => m.clone(),
            None => vec![true; self.data.len()],
        }
    }

    pub fn all_valid(&self) -> bool {
        self.valid.is_none()
    }

    /// Replaces the validity mask (`false` pixels are also zeroed).
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.data.len() {
            return Err(Error::InvalidParameter("mask length mismatch".into()));
        }
        for (v, &ok) in self.data.iter_mut().zip(&mask) {
            if !ok {
                *v = 0.0;
            }
        }
        self.valid = Some(mask).filter(|m| m.iter().any(|&b| !b));
        Ok(self)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Bilinear interpolation at `p`.
    ///
    /// Returns `None` when a neighbor that carries nonzero weight lies outside
    /// the raster. Integer coordinates need only the pixel itself, so every
    /// lattice point of the image, borders included, samples exactly.
    pub fn sample_bilinear(&self, p: SubpixelPoint) -> Option<f64> {
        let (x0, x1, fx) = support(p.x, self.width)?;
        let (y0, y1, fy) = support(p.y, self.height)?;
        Some(self.blend(x0, x1, fx, y0, y1, fy))
    }

    /// As [`sample_bilinear`](Self::sample_bilinear), additionally requiring
    /// every weighted neighbor to be valid in this image's mask.
    pub fn sample_valid(&self, p: SubpixelPoint) -> Option<f64> {
        let (x0, x1, fx) = support(p.x, self.width)?;
        let (y0, y1, fy) = support(p.y, self.height)?;
        if let Some(m) = &self.valid {
            let w = self.width;
            if !(m[y0 * w + x0] && m[y0 * w + x1] && m[y1 * w + x0] && m[y1 * w + x1]) {
                return None;
            }
        }
        Some(self.blend(x0, x1, fx, y0, y1, fy))
    }

    #[inline]
    fn blend(&self, x0: usize, x1: usize, fx: f64, y0: usize, y1: usize, fy: f64) -> f64 {
        let w = self.width;
        let top = self.data[y0 * w + x0] * (1.0 - fx) + self.data[y0 * w + x1] * fx;
        let bottom = self.data[y1 * w + x0] * (1.0 - fx) + self.data[y1 * w + x1] * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Converts to 8-bit with round-to-nearest.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    /// Converts to 16-bit with round-to-nearest.
    pub fn to_u16(&self) -> Vec<u16> {
        self.data
            .iter()
            .map(|v| (v * 65535.0).round() as u16)
            .collect()
    }
}

#[inline]
fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Lower index, upper index and fractional weight along one axis.
#[inline]
fn support(c: f64, len: usize) -> Option<(usize, usize, f64)> {
    if !c.is_finite() || c < 0.0 || len == 0 {
        return None;
    }
    let f = c.floor();
    let i0 = f as usize;
    let frac = c - f;
    if i0 >= len {
        return None;
    }
    if frac == 0.0 {
        return Some((i0, i0, 0.0));
    }
    if i0 + 1 >= len {
        return None;
    }
    Some((i0, i0 + 1, frac))
}

/// Pull-warps `src` into a `width` x `height` image.
///
/// `map` sends an output pixel coordinate to its source coordinate. Only
/// pixels inside `region` (the whole output when `None`) are rendered; the
/// rest are marked invalid.
pub fn warp<F>(src: &GrayImage, width: usize, height: usize, region: Option<Rect>, map: F) -> GrayImage
where
    F: Fn(SubpixelPoint) -> SubpixelPoint + Sync,
{
    let region = region.unwrap_or(Rect::new(0, 0, width, height));
    let mut data = vec![0.0; width * height];
    let mut valid = vec![false; width * height];
    if width > 0 {
        data.par_chunks_mut(width)
            .zip(valid.par_chunks_mut(width))
            .enumerate()
            .for_each(|(y, (row, vrow))| {
                if y < region.y || y >= region.y + region.h {
                    return;
                }
                let x_end = (region.x + region.w).min(width);
                for x in region.x..x_end {
                    let q = SubpixelPoint::new(x as f64, y as f64);
                    if let Some(v) = src.sample_valid(map(q)) {
                        row[x] = v;
                        vrow[x] = true;
                    }
                }
            });
    }
    GrayImage::from_parts(width, height, data, Some(valid))
}

/// Rotates `img` by `angle` radians about `center`.
///
/// Output pixel `q` takes the input value at `R(-angle)(q - center) + center`.
/// Out-of-bounds samples are stored as `0` with the mask set to `false`.
pub fn rotate_about(img: &GrayImage, center: SubpixelPoint, angle: f64) -> GrayImage {
    warp(img, img.width, img.height, None, |q| {
        rotate_point(q, center, -angle)
    })
}
