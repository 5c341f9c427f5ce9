//! Blur-extent baseline: the center is the candidate whose rings show blur
//! extents proportional to their radius.
//!
//! Extents are read from the autocorrelation of the first difference.
//! Differencing a box-blurred sequence leaves `(s[j] - s[j-L])/L`, whose
//! autocorrelation dips at lag `L`. Each ring is split into angular sectors
//! and every sector yields one extent: off center the arc length seen by a
//! sector drifts with `δ·cos φ`, a drift that cancels over a whole ring.
//! The candidate score is the mean absolute deviation of the sector extents
//! from the line `θ·N_r/2π` fixed by the known blur angle.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::center::geometric::SearchBox;
use crate::center::{argmin_first, candidates, CenterEstimate, EstimateMethod};
use crate::error::{Error, Result};
use crate::image::{GrayImage, SubpixelPoint};
use crate::metrics::inscribed_radius;
use crate::rings::{decompose_rings, ring_kernel_length, ring_sample_count};

/// Shortest extent, in samples, that a ring must carry to be scored.
pub const MIN_EXTENT: f64 = 2.0;

/// First-difference energy per sample below which a ring is flat.
const FLAT_ENERGY: f64 = 1e-10;

/// Sector length in units of the expected extent.
const SECTOR_SPAN: f64 = 3.0;

/// Most sectors per ring.
const MAX_SECTORS: usize = 16;

/// Sectors per ring for a blur angle: as many as fit `SECTOR_SPAN` extents.
pub fn sectors_for(blur_angle: f64) -> usize {
    ((TAU / (SECTOR_SPAN * blur_angle)).floor() as usize).clamp(1, MAX_SECTORS)
}

/// Refines an integer minimum by a parabola through its neighbors.
fn parabolic(l: f64, c: f64, r: f64) -> f64 {
    let denom = l - 2.0 * c + r;
    if denom > 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Blur extent of an open segment of first differences.
///
/// Uses the unbiased linear autocorrelation `Σ d[j]d[j+k] / (m-k)` over lags
/// `1..=m/2`.
fn segment_extent(diff: &[f64]) -> Option<f64> {
    let m = diff.len();
    if m < 6 {
        return None;
    }
    let energy = diff.iter().map(|d| d * d).sum::<f64>() / m as f64;
    if energy < FLAT_ENERGY {
        return None;
    }
    let half = m / 2;
    let ac: Vec<f64> = (0..=half + 1)
        .map(|k| diff[..m - k].iter().zip(&diff[k..]).map(|(a, b)| a * b).sum::<f64>() / (m - k) as f64)
        .collect();
    let lag = (1..=half).min_by(|&a, &b| ac[a].total_cmp(&ac[b]))?;
    if ac[lag] >= 0.0 {
        return None;
    }
    Some(lag as f64 + parabolic(ac[lag - 1], ac[lag], ac[lag + 1]))
}

/// Blur extents of `sectors` equal angular sectors of a cyclic ring.
///
/// Flat sectors and sectors without a negative autocorrelation lobe are
/// skipped.
pub fn sector_extents(values: &[f64], sectors: usize) -> Vec<f64> {
    let n = values.len();
    let diff: Vec<f64> = (0..n).map(|j| values[j] - values[(j + n - 1) % n]).collect();
    (0..sectors)
        .filter_map(|s| segment_extent(&diff[s * n / sectors..(s + 1) * n / sectors]))
        .collect()
}

/// Blur extent of one ring in samples, or `None` for a flat ring.
///
/// The extent is the lag in `1..=N/2` where the autocorrelation of the
/// cyclic first difference is most negative, refined by a parabola through
/// its neighbors.
pub fn ring_blur_extent(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(values[j] - values[(j + n - 1) % n], 0.0))
        .collect();
    let energy: f64 = buf.iter().map(|c| c.re * c.re).sum::<f64>() / n as f64;
    if energy < FLAT_ENERGY {
        return None;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let ac: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let half = n / 2;
    let lag = (1..=half).min_by(|&a, &b| ac[a].total_cmp(&ac[b]))?;
    Some(lag as f64 + parabolic(ac[lag - 1], ac[lag], ac[(lag + 1) % n]))
}

/// Score of one candidate over rings `r_lo..=r_hi`, or `None` when no ring
/// carries usable texture.
fn candidate_score(img: &GrayImage, center: SubpixelPoint, r_lo: usize, r_hi: usize, blur_angle: f64) -> Result<Option<f64>> {
    let stack = decompose_rings(img, center, r_hi)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for ring in &stack.rings[r_lo - 1..] {
        if !ring.all_valid() {
            continue;
        }
        let expected = ring_kernel_length(blur_angle, ring.sample_count());
        for extent in sector_extents(&ring.values, sectors_for(blur_angle)) {
            sum += (extent - expected).abs();
            count += 1;
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Scores every integer candidate and returns the best one; ties go to the
/// smallest `(y, x)`.
pub fn estimate_center_hong(blurred: &GrayImage, search: &SearchBox, blur_angle: f64) -> Result<CenterEstimate> {
    if !(blur_angle > 0.0 && blur_angle < TAU) {
        return Err(Error::InvalidParameter(format!(
            "blur angle {blur_angle} outside (0, 2π)"
        )));
    }
    let cands = candidates(search);
    if cands.is_empty() {
        return Err(Error::InvalidParameter("empty candidate region".into()));
    }
    let (w, h) = blurred.dimensions();
    let r_hi = cands
        .iter()
        .map(|&c| inscribed_radius(w, h, c))
        .fold(f64::INFINITY, f64::min)
        .floor();
    // Smallest radius whose ring extent reaches MIN_EXTENT samples.
    let r_lo = (1..)
        .find(|&r| ring_kernel_length(blur_angle, ring_sample_count(r)) >= MIN_EXTENT)
        .unwrap_or(1);
    if r_hi.is_nan() || r_hi < 1.0 || (r_hi as usize) < r_lo {
        return Err(Error::Estimation(
            "candidate region leaves no ring long enough to show the blur".into(),
        ));
    }
    let r_hi = r_hi as usize;
    let scores: Vec<f64> = cands
        .par_iter()
        .map(|&c| Ok(candidate_score(blurred, c, r_lo, r_hi, blur_angle)?.unwrap_or(f64::NAN)))
        .collect::<Result<_>>()?;
    let best = argmin_first(&scores)
        .ok_or_else(|| Error::Estimation("no blur extent estimable: every ring is flat".into()))?;
    Ok(CenterEstimate::new(cands[best], EstimateMethod::Hong))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deconv::{box_kernel, circular_convolve};

    #[test]
    fn extent_of_boxed_impulses() {
        let n = 200;
        let mut s = vec![0.0; n];
        for i in [3, 50, 97, 161] {
            s[i] = 1.0;
        }
        for len in [3.0, 7.0, 12.0, 20.0] {
            let b = circular_convolve(&s, &box_kernel(len, n).unwrap());
            let e = ring_blur_extent(&b).unwrap();
            assert!((e - len).abs() < 0.5, "{len}: {e}");
        }
    }

    #[test]
    fn flat_ring_has_no_extent() {
        assert_eq!(ring_blur_extent(&[0.3; 64]), None);
    }

    #[test]
    fn constant_image_is_an_error() {
        let img = GrayImage::filled(64, 64, 0.4);
        let err = estimate_center_hong(&img, &SearchBox::around((32, 32), 2), 0.2).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)));
        assert_eq!(err.exit_code(), 3);
    }
}
