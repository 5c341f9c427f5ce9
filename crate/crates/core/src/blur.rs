//! Forward model: rotary motion blur and additive sensor noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, SubpixelPoint};
use crate::metrics::farthest_corner;

/// Parameters of a rotary blur exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurSpec {
    pub center: SubpixelPoint,
    /// Total angle swept during the exposure, radians.
    pub blur_angle: f64,
    /// Number of rotated copies averaged to approximate the exposure integral.
    pub angular_samples: usize,
    /// Noise standard deviation as a fraction of full scale.
    pub noise_sigma: f64,
}

impl BlurSpec {
    pub fn new(
        center: SubpixelPoint,
        blur_angle: f64,
        angular_samples: usize,
        noise_sigma: f64,
    ) -> Result<Self> {
        let spec = Self {
            center,
            blur_angle,
            angular_samples,
            noise_sigma,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Picks `angular_samples` so the arc step at the farthest in-frame pixel
    /// is at most half a pixel: `ceil(2 * blur_angle * r_max) + 1`.
    pub fn for_frame(
        center: SubpixelPoint,
        blur_angle: f64,
        noise_sigma: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let r_max = farthest_corner(width, height, center);
        let n = if blur_angle.is_finite() && blur_angle > 0.0 {
            ((2.0 * blur_angle * r_max).ceil() as usize + 1).max(2)
        } else {
            2
        };
        Self::new(center, blur_angle, n, noise_sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::InvalidParameter("blur center must be finite".into()));
        }
        if !(self.blur_angle > 0.0 && self.blur_angle < std::f64::consts::TAU) {
            return Err(Error::InvalidParameter(format!(
                "blur angle must lie in (0, 2π) rad, got {}",
                self.blur_angle
            )));
        }
        if self.angular_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "angular_samples must be at least 2, got {}",
                self.angular_samples
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Averages `angular_samples` copies of `sharp` rotated about `spec.center`
/// at evenly spaced angles from 0 to `spec.blur_angle` inclusive.
///
/// A pixel is valid only if every rotated copy sampled it in bounds. Noise is
/// not applied here; see [`add_gaussian_noise`] and [`degrade`].
pub fn synthesize_rmb(sharp: &GrayImage, spec: &BlurSpec) -> Result<GrayImage> {
    spec.validate()?;
    if sharp.is_empty() {
        return Err(Error::InvalidParameter("sharp image is empty".into()));
    }
    let (w, h) = sharp.dimensions();
    let n = spec.angular_samples;
    let step = spec.blur_angle / (n - 1) as f64;
    // Inverse rotation R(-theta_k) for each copy.
    let rot: Vec<(f64, f64)> = (0..n).map(|k| (-(k as f64) * step).sin_cos()).collect();
    let c = spec.center;

    let mut data = vec![0.0; w * h];
    let mut valid = vec![true; w * h];
    data.par_chunks_mut(w)
        .zip(valid.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row, vrow))| {
            let dy = y as f64 - c.y;
            for x in 0..w {
                let dx = x as f64 - c.x;
                let mut acc = 0.0;
                let mut ok = true;
                for &(s, co) in &rot {
                    let p = SubpixelPoint::new(c.x + co * dx - s * dy, c.y + s * dx + co * dy);
                    match sharp.sample_valid(p) {
                        Some(v) => acc += v,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    row[x] = acc / n as f64;
                } else {
                    vrow[x] = false;
                }
            }
        });
    Ok(GrayImage::from_parts(w, h, data, Some(valid)))
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sigma`
/// (full scale 1.0) and clamps to `[0, 1]`. Deterministic for a given seed;
/// `sigma == 0` returns an identical image.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = img
        .data()
        .iter()
        .map(|&v| v + normal.sample(&mut rng))
        .collect();
    let out = GrayImage::from_parts(img.width(), img.height(), data, None);
    match img.valid_mask() {
        Some(mask) => out.with_mask(mask.to_vec()),
        None => Ok(out),
    }
}

/// Blur followed by noise at `spec.noise_sigma`.
pub fn degrade(sharp: &GrayImage, spec: &BlurSpec, seed: u64) -> Result<GrayImage> {
    let blurred = synthesize_rmb(sharp, spec)?;
    add_gaussian_noise(&blurred, spec.noise_sigma, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::rotate_about;

    fn texture(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.2 * (x / 5.0).sin() * (y / 7.0).cos() + 0.15 * ((x - y) / 11.0).cos()
        })
    }

    fn mae_on(a: &GrayImage, b: &GrayImage) -> f64 {
        let (mut s, mut n) = (0.0, 0usize);
        for y in 0..a.height() {
            for x in 0..a.width() {
                if a.is_valid(x, y) && b.is_valid(x, y) {
                    s += (a.get(x, y) - b.get(x, y)).abs();
                    n += 1;
                }
            }
        }
        s / n as f64
    }

    #[test]
    fn spec_validation() {
        let c = SubpixelPoint::new(1.0, 1.0);
        assert!(BlurSpec::new(c, 0.0, 4, 0.0).is_err());
        assert!(BlurSpec::new(c, std::f64::consts::TAU, 4, 0.0).is_err());
        assert!(BlurSpec::new(c, 0.2, 1, 0.0).is_err());
        assert!(BlurSpec::new(c, 0.2, 2, -0.1).is_err());
        assert!(BlurSpec::new(c, 0.2, 2, 0.01).is_ok());
    }

    #[test]
    fn default_sample_count_rule() {
        let c = SubpixelPoint::new(0.0, 0.0);
        let spec = BlurSpec::for_frame(c, 0.25, 0.0, 4, 5).unwrap();
        // r_max = 5 (corner (3, 4)); ceil(2 * 0.25 * 5) + 1 = 4.
        assert_eq!(spec.angular_samples, 4);
    }

    #[test]
    fn degenerate_angle_is_identity() {
        let img = texture(64, 48);
        let spec = BlurSpec::new(SubpixelPoint::new(31.5, 22.2), 1e-9, 2, 0.0).unwrap();
        let out = synthesize_rmb(&img, &spec).unwrap();
        assert!(mae_on(&out, &img) < 1e-6);
    }

    #[test]
    fn symmetric_image_unchanged() {
        let c = SubpixelPoint::new(40.0, 36.0);
        let img = GrayImage::from_fn(81, 73, |x, y| {
            let r = (x as f64 - c.x).hypot(y as f64 - c.y);
            0.5 + 0.4 * (r / 6.0).sin()
        });
        let spec = BlurSpec::for_frame(c, 0.6, 0.0, 81, 73).unwrap();
        let out = synthesize_rmb(&img, &spec).unwrap();
        assert!(mae_on(&out, &img) < 0.01);
    }

    #[test]
    fn center_pixel_is_fixed() {
        let img = texture(41, 41);
        let spec = BlurSpec::for_frame(SubpixelPoint::new(20.0, 20.0), 1.0, 0.0, 41, 41).unwrap();
        let out = synthesize_rmb(&img, &spec).unwrap();
        assert!((out.get(20, 20) - img.get(20, 20)).abs() < 1e-12);
    }

    #[test]
    fn output_within_input_range() {
        let img = texture(50, 50);
        let (lo, hi) = img
            .data()
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let spec = BlurSpec::for_frame(SubpixelPoint::new(24.3, 26.1), 0.8, 0.0, 50, 50).unwrap();
        let out = synthesize_rmb(&img, &spec).unwrap();
        for y in 0..50 {
            for x in 0..50 {
                if out.is_valid(x, y) {
                    let v = out.get(x, y);
                    assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn mean_preserved_on_central_disc() {
        let c = SubpixelPoint::new(64.0, 64.0);
        let img = texture(129, 129);
        let spec = BlurSpec::for_frame(c, 0.5, 0.0, 129, 129).unwrap();
        let out = synthesize_rmb(&img, &spec).unwrap();
        let disc = crate::metrics::annulus_mask(129, 129, c, 0.0, 60.0);
        let mean = |im: &GrayImage| {
            let (s, n) = im
                .data()
                .iter()
                .zip(&disc)
                .filter(|(_, &m)| m)
                .fold((0.0, 0.0), |(s, n), (v, _)| (s + v, n + 1.0));
            s / n
        };
        let (m0, m1) = (mean(&img), mean(&out));
        assert!(((m1 - m0) / m0).abs() < 0.005, "{m0} vs {m1}");
    }

    #[test]
    fn blur_commutes_with_rotation() {
        let c = SubpixelPoint::new(48.4, 47.7);
        let img = texture(97, 97);
        let spec = BlurSpec::for_frame(c, 0.4, 0.0, 97, 97).unwrap();
        let phi = 0.9;
        let a = synthesize_rmb(&rotate_about(&img, c, phi), &spec).unwrap();
        let b = rotate_about(&synthesize_rmb(&img, &spec).unwrap(), c, phi);
        assert!(mae_on(&a, &b) < 0.02);
    }

    #[test]
    fn noise_zero_is_identical() {
        let img = texture(16, 16);
        assert_eq!(add_gaussian_noise(&img, 0.0, 7).unwrap(), img);
    }

    #[test]
    fn noise_statistics_and_determinism() {
        let img = GrayImage::filled(512, 512, 0.5);
        let a = add_gaussian_noise(&img, 0.01, 42).unwrap();
        let b = add_gaussian_noise(&img, 0.01, 42).unwrap();
        assert_eq!(a, b);
        let n = a.data().len() as f64;
        let mean = a.data().iter().sum::<f64>() / n;
        let var = a.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        assert!((0.009..=0.011).contains(&sd), "sd {sd}");
        let c = add_gaussian_noise(&img, 0.01, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_clamps() {
        let img = GrayImage::filled(64, 64, 0.0);
        let out = add_gaussian_noise(&img, 0.5, 1).unwrap();
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
