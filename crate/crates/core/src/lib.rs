//! Rotary motion blur toolkit.
//!
//! - [`image`], [`metrics`], [`io`]: grayscale raster, warps, quality metrics, PNG/PGM.
//! - [`blur`]: forward model (rotating average plus Gaussian noise).
//! - [`rings`]: polar ring decomposition where rotary blur is a 1D cyclic convolution.
//! - [`deconv`]: ring-wise Wiener, modified Wiener and second-order-difference deconvolution.
//! - [`rig`]: simulated camera on a rotating platform with a hidden rotation center.
//! - [`center`]: geometric tangency identification of the rotation center and two
//!   image-based baselines.
//! - [`harness`]: experiment drivers and CSV reports behind the command line tool.

pub mod blur;
pub mod center;
pub mod deconv;
pub mod error;
pub mod features;
pub mod harness;
pub mod image;
pub mod io;
pub mod metrics;
pub mod patterns;
pub mod rig;
pub mod rings;

pub use error::{Error, Result};
pub use center::{CenterEstimate, EstimateMethod};
pub use image::{Axis, GrayImage, Rect, ReferenceBox, SubpixelPoint};
