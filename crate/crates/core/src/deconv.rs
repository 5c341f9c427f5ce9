//! Cyclic 1D deconvolution of ring sequences and the ring-wise deblurring pipeline.
//!
//! All three solvers are diagonal in the DFT basis of the ring:
//!
//! - Wiener: `X = conj(K) B / (|K|² + nsr)`
//! - modified Wiener: `X = B / K` where `|K| >= threshold`, `X = B` elsewhere
//! - second-order difference prior: `X = conj(K) B / (|K|² + λ|D|²)` with
//!   `d = (1, -2, 1)` applied cyclically
//!
//! Kernels start at tap 0: a blurred sample `b[j]` averages `s[j - t]` for
//! `t = 0..L`, i.e. the blur trails the sharp signal towards increasing angle.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::{GrayImage, SubpixelPoint};
use crate::metrics::farthest_corner;
use crate::rings::{decompose_rings, recompose, RingSequence};

/// Nonnegative cyclic kernel with unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicKernel {
    /// Continuous support in samples.
    pub length: f64,
    /// Weights for offsets `0..taps.len()`.
    pub taps: Vec<f64>,
}

impl CyclicKernel {
    pub fn identity() -> Self {
        Self {
            length: 1.0,
            taps: vec![1.0],
        }
    }

    /// DFT of the kernel zero-padded to `n` samples.
    pub fn spectrum(&self, n: usize) -> Result<Vec<Complex64>> {
        if self.taps.len() > n {
            return Err(Error::InvalidParameter(format!(
                "kernel with {} taps does not fit a ring of {n} samples",
                self.taps.len()
            )));
        }
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(self.taps.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        Ok(buf)
    }
}

/// Fractional box of continuous length `length`: `floor(length)` taps of
/// `1/length` followed by one tap of `frac(length)/length`.
pub fn box_kernel(length: f64, ring_size: usize) -> Result<CyclicKernel> {
    if !(length > 0.0 && length <= ring_size as f64) {
        return Err(Error::InvalidParameter(format!(
            "box length {length} outside (0, {ring_size}]"
        )));
    }
    let full = length.floor() as usize;
    let frac = length - full as f64;
    let mut taps = vec![1.0 / length; full];
    if frac > 0.0 {
        taps.push(frac / length);
    }
    Ok(CyclicKernel { length, taps })
}

/// Direct cyclic convolution `(k ⊛ x)[j] = Σ_t k[t] x[j - t]`.
pub fn circular_convolve(values: &[f64], kernel: &CyclicKernel) -> Vec<f64> {
    let n = values.len() as isize;
    (0..n)
        .map(|j| {
            kernel
                .taps
                .iter()
                .enumerate()
                .map(|(t, w)| w * values[(j - t as isize).rem_euclid(n) as usize])
                .sum()
        })
        .collect()
}

/// Deconvolution method with its regularization knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Wiener,
    MWiener,
    #[default]
    Sdp,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wiener" => Ok(Method::Wiener),
            "mwiener" | "m-wiener" => Ok(Method::MWiener),
            "sdp" => Ok(Method::Sdp),
            other => Err(Error::InvalidParameter(format!(
                "unknown deblur method '{other}' (expected wiener, mwiener or sdp)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Wiener => "wiener",
            Method::MWiener => "mwiener",
            Method::Sdp => "sdp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeblurConfig {
    pub method: Method,
    /// Noise-to-signal ratio for Wiener.
    pub nsr: f64,
    /// Magnitude floor below which modified Wiener passes frequencies through.
    pub freq_threshold: f64,
    /// Weight of the second-order difference prior.
    pub lambda: f64,
}

impl Default for DeblurConfig {
    fn default() -> Self {
        Self {
            method: Method::Sdp,
            nsr: 1e-3,
            freq_threshold: 0.05,
            lambda: 1e-3,
        }
    }
}

impl DeblurConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| {
            Err(Error::InvalidParameter(format!("{name} = {v} is out of range")))
        };
        if !(self.nsr >= 0.0 && self.nsr.is_finite()) {
            return bad("nsr", self.nsr);
        }
        if !(self.freq_threshold > 0.0 && self.freq_threshold.is_finite()) {
            return bad("freq_threshold", self.freq_threshold);
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda", self.lambda);
        }
        Ok(())
    }

    /// Deconvolves `values` with the configured method.
    pub fn apply(&self, values: &[f64], kernel: &CyclicKernel) -> Result<Vec<f64>> {
        match self.method {
            Method::Wiener => wiener(values, kernel, self.nsr),
            Method::MWiener => mwiener(values, kernel, self.freq_threshold),
            Method::Sdp => sdp(values, kernel, self.lambda),
        }
    }
}

/// Applies the frequency response `gain(K(f), D(f))` to `values`.
fn filter_spectrum(
    values: &[f64],
    kernel: &CyclicKernel,
    gain: impl Fn(Complex64, f64) -> Complex64,
) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let k = kernel.spectrum(n)?;
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (f, (b, kf)) in buf.iter_mut().zip(&k).enumerate() {
        // DFT of the cyclic second difference (1, -2, 1) centered on tap 0.
        let d = 2.0 * (TAU * f as f64 / n as f64).cos() - 2.0;
        *b *= gain(*kf, d);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.iter().map(|c| c.re * scale).collect())
}

fn regularized_gain(k: Complex64, reg: f64) -> Complex64 {
    let denom = k.norm_sqr() + reg;
    if denom == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        k.conj() / denom
    }
}

fn wiener(values: &[f64], kernel: &CyclicKernel, nsr: f64) -> Result<Vec<f64>> {
    filter_spectrum(values, kernel, |k, _| regularized_gain(k, nsr))
}

fn mwiener(values: &[f64], kernel: &CyclicKernel, threshold: f64) -> Result<Vec<f64>> {
    filter_spectrum(values, kernel, |k, _| {
        if k.norm() < threshold {
            Complex64::new(1.0, 0.0)
        } else {
            k.inv()
        }
    })
}

fn sdp(values: &[f64], kernel: &CyclicKernel, lambda: f64) -> Result<Vec<f64>> {
    filter_spectrum(values, kernel, |k, d| regularized_gain(k, lambda * d * d))
}

fn with_values(seq: &RingSequence, values: Vec<f64>) -> RingSequence {
    RingSequence {
        radius: seq.radius,
        values,
        valid: seq.valid.clone(),
    }
}

/// Wiener deconvolution. With `nsr = 0` frequencies where the kernel
/// vanishes are set to zero.
pub fn wiener_deconv(seq: &RingSequence, kernel: &CyclicKernel, nsr: f64) -> Result<RingSequence> {
    Ok(with_values(seq, wiener(&seq.values, kernel, nsr)?))
}

/// Inverse filter that leaves frequencies with `|K(f)| < freq_threshold` untouched.
pub fn mwiener_deconv(
    seq: &RingSequence,
    kernel: &CyclicKernel,
    freq_threshold: f64,
) -> Result<RingSequence> {
    Ok(with_values(seq, mwiener(&seq.values, kernel, freq_threshold)?))
}

/// Minimizer of `‖k ⊛ x − b‖² + λ‖d ⊛ x‖²` with `d` the cyclic second difference.
pub fn sdp_deconv(seq: &RingSequence, kernel: &CyclicKernel, lambda: f64) -> Result<RingSequence> {
    Ok(with_values(seq, sdp(&seq.values, kernel, lambda)?))
}

/// Replaces invalid samples by cyclic linear interpolation between the
/// nearest valid neighbors.
fn fill_invalid(values: &[f64], valid: &[bool]) -> Vec<f64> {
    let n = values.len();
    let anchors: Vec<usize> = (0..n).filter(|&i| valid[i]).collect();
    if anchors.is_empty() || anchors.len() == n {
        return values.to_vec();
    }
    let mut out = values.to_vec();
    for (ai, &a) in anchors.iter().enumerate() {
        let b = anchors[(ai + 1) % anchors.len()];
        let gap = (b + n - a) % n;
        let gap = if gap == 0 { n } else { gap };
        for step in 1..gap {
            let t = step as f64 / gap as f64;
            out[(a + step) % n] = (1.0 - t) * values[a] + t * values[b];
        }
    }
    out
}

/// Non-blind rotary deblurring: decompose into rings about `center`,
/// deconvolve every ring with its box kernel, recompose.
///
/// Rings whose kernel spans at most one sample are passed through, as is the
/// center sample. Output validity is the conjunction of the recomposition
/// footprint and the input mask.
pub fn deblur_rmd(
    blurred: &GrayImage,
    center: SubpixelPoint,
    blur_angle: f64,
    config: &DeblurConfig,
) -> Result<GrayImage> {
    if !(blur_angle > 0.0 && blur_angle < TAU) {
        return Err(Error::InvalidParameter(format!(
            "blur angle must lie in (0, 2π) rad, got {blur_angle}"
        )));
    }
    config.validate()?;
    let (w, h) = blurred.dimensions();
    if blurred.is_empty() {
        return Err(Error::InvalidParameter("blurred image is empty".into()));
    }
    let r_max = farthest_corner(w, h, center).ceil().max(1.0) as usize;
    let mut stack = decompose_rings(blurred, center, r_max)?;
    stack.rings = stack
        .rings
        .par_iter()
        .map(|ring| -> Result<RingSequence> {
            if !ring.any_valid() {
                return Ok(ring.clone());
            }
            let n = ring.sample_count();
            let length = ring.kernel_length(blur_angle).min(n as f64);
            if length <= 1.0 {
                return Ok(ring.clone());
            }
            let kernel = box_kernel(length, n)?;
            let filled = fill_invalid(&ring.values, &ring.valid);
            Ok(with_values(ring, config.apply(&filled, &kernel)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let out = recompose(&stack, w, h)?;
    let mask = crate::metrics::and_valid(out.validity(), &[blurred]);
    out.with_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    fn rms(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn box_kernel_examples() {
        assert_eq!(box_kernel(1.0, 8).unwrap().taps, vec![1.0]);
        assert_eq!(box_kernel(4.0, 16).unwrap().taps, vec![0.25; 4]);
        let k = box_kernel(2.5, 16).unwrap();
        assert_eq!(k.taps.len(), 3);
        for (a, b) in k.taps.iter().zip([0.4, 0.4, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(box_kernel(0.0, 8).is_err());
        assert!(box_kernel(9.0, 8).is_err());
    }

    #[test]
    fn kernel_phase_starts_at_tap_zero() {
        let mut x = vec![0.0; 16];
        x[5] = 1.0;
        let y = circular_convolve(&x, &box_kernel(3.0, 16).unwrap());
        for (j, v) in y.iter().enumerate() {
            let expected = if (5..8).contains(&j) { 1.0 / 3.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-15, "j={j}");
        }
        // Wraps cyclically.
        let mut x = vec![0.0; 8];
        x[7] = 1.0;
        let y = circular_convolve(&x, &box_kernel(2.0, 8).unwrap());
        assert!((y[7] - 0.5).abs() < 1e-15 && (y[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_kernel_is_exact() {
        let x = random_seq(37, 1);
        let k = CyclicKernel::identity();
        let seq = RingSequence::from_values(6, x.clone());
        assert!(rms(&wiener_deconv(&seq, &k, 0.0).unwrap().values, &x) < 1e-14);
        assert!(rms(&mwiener_deconv(&seq, &k, 0.5).unwrap().values, &x) < 1e-14);
        assert!(rms(&sdp_deconv(&seq, &k, 0.0).unwrap().values, &x) < 1e-14);
    }

    #[test]
    fn wiener_recovers_noiseless_blur() {
        // Length 3.5 on 40 samples has no exact spectral zero.
        let x = random_seq(40, 2);
        let k = box_kernel(3.5, 40).unwrap();
        let b = circular_convolve(&x, &k);
        let out = wiener(&b, &k, 1e-12).unwrap();
        assert!(rms(&out, &x) < 1e-6);
    }

    #[test]
    fn wiener_total_suppression() {
        let x = random_seq(32, 3);
        let k = box_kernel(4.0, 32).unwrap();
        let out = wiener(&x, &k, 1e12).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn mwiener_full_circle_passthrough() {
        let x = random_seq(24, 4);
        let k = box_kernel(24.0, 24).unwrap();
        let out = mwiener(&x, &k, 0.05).unwrap();
        assert!(rms(&out, &x) < 1e-12);
    }

    #[test]
    fn mwiener_passes_exact_nulls() {
        // Box of length 8 on 16 samples: |K| vanishes at all even nonzero bins.
        let n = 16;
        let x = random_seq(n, 5);
        let k = box_kernel(8.0, n).unwrap();
        let b = circular_convolve(&x, &k);
        let out = mwiener(&b, &k, 1e-9).unwrap();
        // Direct DFT reference.
        let dft = |v: &[f64], f: usize| -> Complex64 {
            v.iter()
                .enumerate()
                .map(|(j, &s)| Complex64::from_polar(s, -TAU * (f * j) as f64 / n as f64))
                .sum()
        };
        for f in 0..n {
            let kf = dft(&{
                let mut t = vec![0.0; n];
                t[..8].copy_from_slice(&k.taps);
                t
            }, f);
            let (of, bf, xf) = (dft(&out, f), dft(&b, f), dft(&x, f));
            if kf.norm() < 1e-9 {
                assert!((of - bf).norm() < 1e-9, "null bin {f} not passed through");
            } else {
                assert!((of - xf).norm() < 1e-9, "bin {f} not inverted");
            }
        }
    }

    #[test]
    fn sdp_constant_sequence_kept() {
        let x = vec![0.37; 29];
        let k = box_kernel(5.3, 29).unwrap();
        for lambda in [0.0, 1e-3, 10.0] {
            let out = sdp(&x, &k, lambda).unwrap();
            assert!(out.iter().all(|v| (v - 0.37).abs() < 1e-12));
        }
    }

    #[test]
    fn sdp_objective_not_above_truth() {
        let n = 48;
        let truth = random_seq(n, 6);
        let k = box_kernel(6.4, n).unwrap();
        let mut b = circular_convolve(&truth, &k);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for v in &mut b {
            *v += 0.01 * (rng.random::<f64>() - 0.5);
        }
        let lambda = 1e-2;
        let objective = |x: &[f64]| {
            let kx = circular_convolve(x, &k);
            let fit: f64 = kx.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum();
            let smooth: f64 = (0..n)
                .map(|i| (x[(i + n - 1) % n] - 2.0 * x[i] + x[(i + 1) % n]).powi(2))
                .sum();
            fit + lambda * smooth
        };
        let est = sdp(&b, &k, lambda).unwrap();
        assert!(objective(&est) <= objective(&truth) + 1e-12);
    }

    #[test]
    fn means_preserved() {
        let x = random_seq(33, 8);
        let mean = x.iter().sum::<f64>() / 33.0;
        let k = box_kernel(4.7, 33).unwrap();
        let m = |v: Vec<f64>| v.iter().sum::<f64>() / 33.0;
        assert!((m(mwiener(&x, &k, 0.05).unwrap()) - mean).abs() < 1e-12);
        assert!((m(sdp(&x, &k, 1e-3).unwrap()) - mean).abs() < 1e-12);
        assert!((m(wiener(&x, &k, 0.0).unwrap()) - mean).abs() < 1e-12);
        // Wiener shrinks DC by 1 / (1 + nsr).
        assert!((m(wiener(&x, &k, 0.25).unwrap()) - mean / 1.25).abs() < 1e-12);
    }

    #[test]
    fn fill_invalid_interpolates_cyclically() {
        let v = [1.0, 0.0, 0.0, 4.0, 0.0];
        let ok = [true, false, false, true, false];
        let out = fill_invalid(&v, &ok);
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0, 2.5]);
    }

    #[test]
    fn config_validation() {
        assert!(DeblurConfig::default().validate().is_ok());
        let mut c = DeblurConfig { freq_threshold: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        c = DeblurConfig { lambda: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
        assert_eq!("MWiener".parse::<Method>().unwrap(), Method::MWiener);
        assert!("sap".parse::<Method>().is_err());
    }

    #[test]
    fn deblur_rejects_bad_angle() {
        let img = GrayImage::filled(16, 16, 0.5);
        let c = SubpixelPoint::new(8.0, 8.0);
        assert!(deblur_rmd(&img, c, 0.0, &DeblurConfig::default()).is_err());
        assert!(deblur_rmd(&img, c, TAU, &DeblurConfig::default()).is_err());
    }
}
