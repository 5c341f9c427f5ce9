//! Rotation-center estimation.
//!
//! [`geometric`] drives a rig through the half-turn tangency protocol and
//! yields integer centers. [`hong`] and [`hough`] are image-only baselines
//! that score integer candidates on a single blurred frame.

pub mod geometric;
pub mod hong;
pub mod hough;

use std::fmt;

use crate::error::{Error, Result};
use crate::image::SubpixelPoint;

pub use geometric::{
    identify_axis, identify_center, tangency_residual, AxisIdentification, CandidateReading,
    CenterIdentification, IdentifyConfig, SearchBox, TangencyReading,
};
pub use hong::estimate_center_hong;
pub use hough::estimate_center_hough;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimateMethod {
    Geometric,
    Hong,
    Hough,
}

impl EstimateMethod {
    pub fn name(self) -> &'static str {
        match self {
            EstimateMethod::Geometric => "geometric",
            EstimateMethod::Hong => "hong",
            EstimateMethod::Hough => "hough",
        }
    }
}

impl fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geometric" => Ok(EstimateMethod::Geometric),
            "hong" => Ok(EstimateMethod::Hong),
            "hough" => Ok(EstimateMethod::Hough),
            other => Err(Error::InvalidParameter(format!("unknown estimation method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterEstimate {
    pub center: SubpixelPoint,
    pub method: EstimateMethod,
    /// Signed `(x, y)` error against a known truth.
    pub per_axis_error: Option<(f64, f64)>,
}

impl CenterEstimate {
    pub fn new(center: SubpixelPoint, method: EstimateMethod) -> Self {
        Self {
            center,
            method,
            per_axis_error: None,
        }
    }

    /// Fills `per_axis_error` as `center - truth`.
    pub fn with_truth(mut self, truth: SubpixelPoint) -> Self {
        self.per_axis_error = Some((self.center.x - truth.x, self.center.y - truth.y));
        self
    }

    /// Largest absolute per-axis error, if a truth was supplied.
    pub fn max_axis_error(&self) -> Option<f64> {
        self.per_axis_error.map(|(ex, ey)| ex.abs().max(ey.abs()))
    }
}

/// Index of the minimum score, ties going to the earliest candidate.
///
/// Candidates are enumerated row-major (y outer, x inner), so the earliest
/// is the smallest `(y, x)`.
pub(crate) fn argmin_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Integer candidates of a search box, y outer and x inner.
pub(crate) fn candidates(search: &SearchBox) -> Vec<SubpixelPoint> {
    search
        .y
        .clone()
        .flat_map(|y| search.x.clone().map(move |x| SubpixelPoint::new(x as f64, y as f64)))
        .collect()
}
