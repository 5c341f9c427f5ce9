//! Deterministic synthetic test images.
//!
//! Every pattern leaves part of the frame flat so that ringing can be
//! measured against a featureless reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Soft Gaussian blobs on a flat background.
    Blobs,
    /// Antialiased discs, squares and bars.
    Shapes,
    /// Low-frequency plane waves confined to a few windows.
    Waves,
    /// Band-limited value noise over the whole frame.
    Texture,
    /// Small bright dots on a dark background; blur turns them into arcs.
    Dots,
    /// Point-like Gaussian stars on a dark sky; blur turns them into thin trails.
    Stars,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::Blobs,
        Pattern::Shapes,
        Pattern::Waves,
        Pattern::Texture,
        Pattern::Dots,
        Pattern::Stars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Blobs => "blobs",
            Pattern::Shapes => "shapes",
            Pattern::Waves => "waves",
            Pattern::Texture => "texture",
            Pattern::Dots => "dots",
            Pattern::Stars => "stars",
        }
    }

    pub fn render(self, width: usize, height: usize, seed: u64) -> GrayImage {
        match self {
            Pattern::Blobs => blobs(width, height, seed),
            Pattern::Shapes => shapes(width, height, seed),
            Pattern::Waves => waves(width, height, seed),
            Pattern::Texture => texture(width, height, seed, 6.0),
            Pattern::Dots => dots(width, height, seed),
            Pattern::Stars => stars(width, height, seed),
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pattern '{s}'")))
    }
}

/// Linear ramp from 1 inside to 0 outside over `width` pixels around `edge`.
fn soft_step(distance_inside: f64, width: f64) -> f64 {
    (distance_inside / width + 0.5).clamp(0.0, 1.0)
}

fn blobs(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb10b);
    let scale = w.min(h) as f64;
    let n = 14;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            let x = rng.random_range(0.1..0.9) * w as f64;
            let y = rng.random_range(0.1..0.9) * h as f64;
            let s = rng.random_range(0.02..0.05) * scale;
            let a = rng.random_range(-0.35..0.4);
            (x, y, s, a)
        })
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let mut v = 0.45;
        for &(bx, by, s, a) in &blobs {
            let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
            let g = (-d2 / (2.0 * s * s)).exp();
            if g > 1e-4 {
                v += a * g;
            }
        }
        v
    })
}

fn shapes(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a9e);
    let scale = w.min(h) as f64;
    #[derive(Clone, Copy)]
    enum Shape {
        Disc(f64, f64, f64),
        Square(f64, f64, f64),
        Bar(f64, f64, f64, f64),
    }
    let mut items = Vec::new();
    for i in 0..12 {
        let x = rng.random_range(0.12..0.88) * w as f64;
        let y = rng.random_range(0.12..0.88) * h as f64;
        let s = rng.random_range(0.025..0.06) * scale;
        let level = rng.random_range(0.05..0.95);
        let shape = match i % 3 {
            0 => Shape::Disc(x, y, s),
            1 => Shape::Square(x, y, s),
            _ => Shape::Bar(x, y, s * 2.0, s * 0.35),
        };
        items.push((shape, level));
    }
    GrayImage::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let mut v = 0.5;
        for &(shape, level) in &items {
            let inside = match shape {
                Shape::Disc(cx, cy, r) => r - (px - cx).hypot(py - cy),
                Shape::Square(cx, cy, s) => s - (px - cx).abs().max((py - cy).abs()),
                Shape::Bar(cx, cy, hw, hh) => (hw - (px - cx).abs()).min(hh - (py - cy).abs()),
            };
            let a = soft_step(inside, 1.5);
            v = v * (1.0 - a) + level * a;
        }
        v
    })
}

fn waves(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3a7e);
    let scale = w.min(h) as f64;
    let windows: Vec<(f64, f64, f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let cx = rng.random_range(0.15..0.85) * w as f64;
            let cy = rng.random_range(0.15..0.85) * h as f64;
            let r = rng.random_range(0.08..0.14) * scale;
            let period = rng.random_range(7.0..16.0);
            let dir: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let amp = rng.random_range(0.15..0.3);
            (cx, cy, r, period, dir, amp)
        })
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let mut v = 0.5;
        for &(cx, cy, r, period, dir, amp) in &windows {
            let d = (px - cx).hypot(py - cy);
            if d < r {
                // Raised-cosine window keeps the texture smooth at its border.
                let win = 0.5 * (1.0 + (std::f64::consts::PI * d / r).cos());
                let phase = (px * dir.cos() + py * dir.sin()) * std::f64::consts::TAU / period;
                v += amp * win * phase.sin();
            }
        }
        v
    })
}

/// Bilinearly interpolated value noise on a `cell`-pixel grid, smoothed by a
/// smoothstep so the result is continuous with continuous slope per cell.
pub fn texture(w: usize, h: usize, seed: u64, cell: f64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e47);
    let gw = (w as f64 / cell).ceil() as usize + 2;
    let gh = (h as f64 / cell).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(0.15..0.85)).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    GrayImage::from_fn(w, h, |x, y| {
        let gx = x as f64 / cell;
        let gy = y as f64 / cell;
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (smooth(gx - ix as f64), smooth(gy - iy as f64));
        let at = |i: usize, j: usize| grid[j * gw + i];
        let top = at(ix, iy) * (1.0 - fx) + at(ix + 1, iy) * fx;
        let bottom = at(ix, iy + 1) * (1.0 - fx) + at(ix + 1, iy + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

fn dots(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd075);
    let n = 40;
    let pts: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(0.05..0.95) * w as f64,
                rng.random_range(0.05..0.95) * h as f64,
                rng.random_range(1.5..3.0),
            )
        })
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let mut v: f64 = 0.1;
        for &(cx, cy, r) in &pts {
            let d = (px - cx).hypot(py - cy);
            if d < r + 1.0 {
                v = v.max(0.1 + 0.8 * soft_step(r - d, 1.0));
            }
        }
        v
    })
}

fn stars(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57a2);
    // About 150 stars per 256 x 256 pixels.
    let n = ((w * h) as f64 * 150.0 / 65536.0).round() as usize;
    let sigma: f64 = 0.7;
    let pts: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(0.4..0.9),
            )
        })
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let mut v = 0.05;
        for &(cx, cy, a) in &pts {
            let d2 = (px - cx).powi(2) + (py - cy).powi(2);
            if d2 < 25.0 * sigma * sigma {
                v += a * (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
        v
    })
}
