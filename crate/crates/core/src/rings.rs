//! Polar ring decomposition about a rotation center.
//!
//! Along a circle centered on the rotation center, rotary blur is an ordinary
//! 1D cyclic convolution. Rings sit at integer radii with
//! `N_r = max(8, round(2πr))` equiangular samples, so neighboring samples are
//! about one pixel of arc apart. Sample `k` lies at angle `2πk / N_r`, measured
//! from the +x axis towards +y.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, SubpixelPoint};

/// Number of samples on the ring of radius `radius`.
pub fn ring_sample_count(radius: usize) -> usize {
    ((TAU * radius as f64).round() as usize).max(8)
}

/// Box-kernel support in ring samples for a blur sweeping `blur_angle`.
///
/// With `N_r ≈ 2πr` this is `≈ r · blur_angle`: blur extent grows linearly
/// with the radius.
pub fn ring_kernel_length(blur_angle: f64, sample_count: usize) -> f64 {
    blur_angle * sample_count as f64 / TAU
}

/// Cyclic 1D sequence sampled along one circle.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSequence {
    pub radius: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl RingSequence {
    /// Fully valid sequence from raw values.
    pub fn from_values(radius: usize, values: Vec<f64>) -> Self {
        let valid = vec![true; values.len()];
        Self {
            radius,
            values,
            valid,
        }
    }

    pub fn sample_count(&self) -> usize {
        self.values.len()
    }

    /// Value at cyclic index `k`.
    pub fn at(&self, k: isize) -> f64 {
        let n = self.values.len() as isize;
        self.values[k.rem_euclid(n) as usize]
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    pub fn any_valid(&self) -> bool {
        self.valid.iter().any(|&v| v)
    }

    pub fn kernel_length(&self, blur_angle: f64) -> f64 {
        ring_kernel_length(blur_angle, self.sample_count())
    }

    /// Mean of the valid samples, `None` when nothing is valid.
    pub fn mean(&self) -> Option<f64> {
        let (s, n) = self
            .values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
        (n > 0).then(|| s / n as f64)
    }
}

/// Rings at radii `1..=r_max` about a common center, plus the center sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RingStack {
    pub center: SubpixelPoint,
    /// `rings[i]` has radius `i + 1`.
    pub rings: Vec<RingSequence>,
    pub center_value: f64,
    pub center_valid: bool,
}

impl RingStack {
    pub fn r_max(&self) -> usize {
        self.rings.len()
    }

    pub fn ring(&self, radius: usize) -> Option<&RingSequence> {
        radius.checked_sub(1).and_then(|i| self.rings.get(i))
    }

    /// Dumps `radius,sample,value` rows, radius 0 being the center sample.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map = |e: csv::Error| Error::Codec {
            path: "ring csv".into(),
            message: e.to_string(),
        };
        w.write_record(["radius", "sample", "value"]).map_err(map)?;
        w.write_record(["0", "0", &self.center_value.to_string()])
            .map_err(map)?;
        for ring in &self.rings {
            for (k, v) in ring.values.iter().enumerate() {
                w.write_record([ring.radius.to_string(), k.to_string(), v.to_string()])
                    .map_err(map)?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: "ring csv".into(),
            source,
        })
    }
}

pub fn decompose_rings(img: &GrayImage, center: SubpixelPoint, r_max: usize) -> Result<RingStack> {
    if r_max < 1 {
        return Err(Error::InvalidParameter("r_max must be at least 1".into()));
    }
    if !center.is_finite() {
        return Err(Error::InvalidParameter("ring center must be finite".into()));
    }
    let rings = (1..=r_max)
        .into_par_iter()
        .map(|r| {
            let n = ring_sample_count(r);
            let mut values = Vec::with_capacity(n);
            let mut valid = Vec::with_capacity(n);
            for k in 0..n {
                let (s, c) = (TAU * k as f64 / n as f64).sin_cos();
                let p = SubpixelPoint::new(center.x + r as f64 * c, center.y + r as f64 * s);
                match img.sample_valid(p) {
                    Some(v) => {
                        values.push(v);
                        valid.push(true);
                    }
                    None => {
                        values.push(0.0);
                        valid.push(false);
                    }
                }
            }
            RingSequence {
                radius: r,
                values,
                valid,
            }
        })
        .collect();
    let center_sample = img.sample_valid(center);
    Ok(RingStack {
        center,
        rings,
        center_value: center_sample.unwrap_or(0.0),
        center_valid: center_sample.is_some(),
    })
}

/// Pull-resamples a ring stack back onto a `width` x `height` raster.
///
/// Each pixel interpolates linearly between the two rings bracketing its
/// radius and, within each ring, between the two samples bracketing its
/// angle. Pixels beyond the outermost ring or touching an invalid sample are
/// marked invalid.
pub fn recompose(stack: &RingStack, width: usize, height: usize) -> Result<GrayImage> {
    if stack.rings.is_empty() {
        return Err(Error::InvalidParameter("ring stack is empty".into()));
    }
    let c = stack.center;
    let r_max = stack.r_max() as f64;
    let mut data = vec![0.0; width * height];
    let mut valid = vec![false; width * height];
    if width == 0 {
        return Ok(GrayImage::from_parts(width, height, data, Some(valid)));
    }
    data.par_chunks_mut(width)
        .zip(valid.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (row, vrow))| {
            for x in 0..width {
                let dx = x as f64 - c.x;
                let dy = y as f64 - c.y;
                let r = dx.hypot(dy);
                if r > r_max {
                    continue;
                }
                let phi = dy.atan2(dx).rem_euclid(TAU);
                let r0 = r.floor() as usize;
                let t = r - r0 as f64;
                let Some(v0) = ring_value(stack, r0, phi) else {
                    continue;
                };
                let v = if t > 0.0 {
                    match ring_value(stack, r0 + 1, phi) {
                        Some(v1) => (1.0 - t) * v0 + t * v1,
                        None => continue,
                    }
                } else {
                    v0
                };
                row[x] = v;
                vrow[x] = true;
            }
        });
    Ok(GrayImage::from_parts(width, height, data, Some(valid)))
}

/// Angular interpolation on ring `radius` (0 = center sample).
fn ring_value(stack: &RingStack, radius: usize, phi: f64) -> Option<f64> {
    if radius == 0 {
        return stack.center_valid.then_some(stack.center_value);
    }
    let ring = stack.ring(radius)?;
    let n = ring.sample_count();
    let s = phi / TAU * n as f64;
    let k = s.floor();
    let f = s - k;
    let k0 = (k as usize) % n;
    let k1 = (k0 + 1) % n;
    if !ring.valid[k0] || (f > 0.0 && !ring.valid[k1]) {
        return None;
    }
    Some((1.0 - f) * ring.values[k0] + f * ring.values[k1])
}
