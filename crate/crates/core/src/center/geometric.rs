//! Tangency-based identification of the rotation center.
//!
//! For one axis (y shown; x is symmetric):
//!
//! 1. Draw a reference box centered on an integer candidate.
//! 2. Slide the platform until a dark object touches the top of the box.
//! 3. Turn the platform half a revolution and read how far the object's top
//!    edge lands from the bottom of the box.
//!
//! If the candidate sits `E` pixels above the true center, that gap is `2E`.
//! A gap under one pixel is treated as tangent, which bounds the error of any
//! accepted candidate by half a pixel.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use crate::center::{CenterEstimate, EstimateMethod};
use crate::error::{Error, Result};
use crate::features::{dark_components, extremal_edge, Side, DARK_THRESHOLD};
use crate::image::{Axis, GrayImage, Rect, ReferenceBox, SubpixelPoint};
use crate::rig::RigState;

/// Distance around a box edge searched for the tangency object, pixels.
pub const SEARCH_MARGIN: f64 = 48.0;

/// Tangency gap at angle 0 above which the protocol precondition fails.
pub const TANGENT_TOLERANCE: f64 = 0.5;

/// Slack on the acceptance boundary for floating-point edge localization.
pub const BOUNDARY_SLACK: f64 = 1e-6;

/// One reading of the half-turn tangency test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyReading {
    pub axis: Axis,
    /// Signed gap between the rotated object's edge and the far box edge.
    /// Positive when the true center lies beyond the candidate along `axis`.
    pub residual: f64,
    /// Signed gap between the object and the near box edge before rotating.
    pub gap_at_zero: f64,
}

impl TangencyReading {
    pub fn tangent_at_zero(&self) -> bool {
        self.gap_at_zero.abs() < TANGENT_TOLERANCE
    }
}

/// Search window around the near (`far == false`) or far box edge.
fn edge_window(b: &ReferenceBox, axis: Axis, far: bool, width: usize, height: usize) -> Rect {
    let edge = if far { b.far_edge(axis) } else { b.near_edge(axis) };
    let other = axis.other();
    let (lo_a, hi_a) = (edge - SEARCH_MARGIN, edge + SEARCH_MARGIN);
    let c = b.center.along(other);
    let half = b.half_extent(other) + SEARCH_MARGIN;
    let (lo_o, hi_o) = (c - half, c + half);
    match axis {
        Axis::Y => Rect::clipped(lo_o, lo_a, hi_o, hi_a, width, height),
        Axis::X => Rect::clipped(lo_a, lo_o, hi_a, hi_o, width, height),
    }
}

/// Edge of the dark object nearest to `target` on `side`, within `window`.
fn object_edge(frame: &GrayImage, window: Rect, side: Side, target: f64) -> Result<f64> {
    dark_components(frame, window, DARK_THRESHOLD)
        .iter()
        .filter_map(|c| extremal_edge(frame, c, side, DARK_THRESHOLD))
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .ok_or_else(|| Error::ObjectNotFound("no dark object near the reference box edge".into()))
}

/// Measures the half-turn tangency gap along `axis`.
///
/// `frame0` must show the object outside the box touching its near edge
/// (top for y, left for x); `frame180` is the capture after a half turn.
pub fn tangency_residual(
    frame0: &GrayImage,
    frame180: &GrayImage,
    reference: &ReferenceBox,
    axis: Axis,
) -> Result<TangencyReading> {
    if frame0.dimensions() != frame180.dimensions() {
        return Err(Error::DimensionMismatch(
            frame0.width(),
            frame0.height(),
            frame180.width(),
            frame180.height(),
        ));
    }
    let (w, h) = frame0.dimensions();
    let near = reference.near_edge(axis);
    let far = reference.far_edge(axis);
    let edge0 = object_edge(frame0, edge_window(reference, axis, false, w, h), Side::Max(axis), near)?;
    let gap_at_zero = edge0 - near;
    if gap_at_zero.abs() >= TANGENT_TOLERANCE {
        return Err(Error::NotTangent { gap: gap_at_zero });
    }
    let edge180 = object_edge(frame180, edge_window(reference, axis, true, w, h), Side::Min(axis), far)?;
    Ok(TangencyReading {
        axis,
        residual: edge180 - far,
        gap_at_zero,
    })
}

/// Knobs of the automated identification protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyConfig {
    /// Half side of the square reference box, pixels.
    pub box_half_extent: f64,
    /// Largest gap still read as tangent. A half-integer truth puts both
    /// neighbors exactly on this boundary, so it is inclusive.
    pub accept_threshold: f64,
    /// Placement accuracy when sliding the object onto the box, pixels.
    pub placement_tolerance: f64,
    /// Rescans of the whole candidate range when nothing was accepted.
    pub max_passes: usize,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            box_half_extent: 40.0,
            accept_threshold: 1.0,
            placement_tolerance: 1e-3,
            max_passes: 5,
        }
    }
}

/// Residual read for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateReading {
    pub coordinate: i64,
    pub pass: usize,
    /// `None` when the rotated object left the search window.
    pub residual: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisIdentification {
    pub axis: Axis,
    pub coordinate: i64,
    pub residual: f64,
    pub readings: Vec<CandidateReading>,
}

/// Where the object sits at angle 0, relative to the platform offset.
#[derive(Debug, Clone, Copy)]
struct ObjectFix {
    /// Extremal edge along the measured axis (towards +axis).
    edge: f64,
    /// Object middle along the other axis.
    middle: f64,
    offset: SubpixelPoint,
}

impl ObjectFix {
    fn locate(rig: &mut RigState, axis: Axis) -> Result<Self> {
        rig.set_angle(0.0);
        let frame = rig.capture();
        let (w, h) = frame.dimensions();
        let comps = dark_components(&frame, Rect::new(0, 0, w, h), DARK_THRESHOLD);
        let obj = comps
            .first()
            .ok_or_else(|| Error::ObjectNotFound("no dark tangency object in view".into()))?;
        let edge = extremal_edge(&frame, obj, Side::Max(axis), DARK_THRESHOLD)
            .ok_or_else(|| Error::ObjectNotFound("tangency object touches the frame border".into()))?;
        let b = obj.bbox;
        let middle = match axis {
            Axis::Y => b.x as f64 + (b.w - 1) as f64 / 2.0,
            Axis::X => b.y as f64 + (b.h - 1) as f64 / 2.0,
        };
        Ok(Self {
            edge,
            middle,
            offset: rig.offset(),
        })
    }

    /// Predicted (edge, middle) under the rig's current offset.
    fn predict(&self, rig: &RigState, axis: Axis) -> (f64, f64) {
        let d = rig.offset();
        let shift = SubpixelPoint::new(d.x - self.offset.x, d.y - self.offset.y);
        (self.edge + shift.along(axis), self.middle + shift.along(axis.other()))
    }
}

fn translate_along(rig: &mut RigState, axis: Axis, along: f64, across: f64) {
    match axis {
        Axis::Y => rig.translate(across, along),
        Axis::X => rig.translate(along, across),
    }
}

/// Slides the platform until the object's edge sits on the near box edge and
/// returns the angle-0 capture used to confirm it.
fn place_tangent(
    rig: &mut RigState,
    fix: &ObjectFix,
    reference: &ReferenceBox,
    axis: Axis,
    tolerance: f64,
) -> Result<GrayImage> {
    rig.set_angle(0.0);
    let near = reference.near_edge(axis);
    let (edge, middle) = fix.predict(rig, axis);
    translate_along(rig, axis, near - edge, reference.center.along(axis.other()) - middle);
    let (w, h) = rig.frame_size();
    let window = edge_window(reference, axis, false, w, h);
    let mut frame = rig.capture_region(Some(window));
    for _ in 0..4 {
        let measured = object_edge(&frame, window, Side::Max(axis), near)?;
        let gap = measured - near;
        if gap.abs() <= tolerance {
            break;
        }
        translate_along(rig, axis, -gap, 0.0);
        frame = rig.capture_region(Some(window));
    }
    Ok(frame)
}

/// Reads the half-turn tangency residual for one candidate coordinate.
fn read_candidate(
    rig: &mut RigState,
    fix: &ObjectFix,
    reference: &ReferenceBox,
    axis: Axis,
    cfg: &IdentifyConfig,
) -> Result<Option<f64>> {
    let frame0 = place_tangent(rig, fix, reference, axis, cfg.placement_tolerance)?;
    let (w, h) = rig.frame_size();
    rig.set_angle(PI);
    let frame180 = rig.capture_region(Some(edge_window(reference, axis, true, w, h)));
    rig.set_angle(0.0);
    match tangency_residual(&frame0, &frame180, reference, axis) {
        Ok(r) => Ok(Some(r.residual)),
        Err(Error::ObjectNotFound(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scans integer candidates along `axis` and returns the tangent one.
///
/// The reference box is centered on `(candidate, cross)` for the y axis and
/// `(cross, candidate)` for x. Candidates with `|residual| <= accept_threshold`
/// are accepted and the smallest `|residual|` wins, ties going to the lower
/// coordinate. When nothing is accepted the scan is repeated, up to
/// `max_passes` times, before giving up.
pub fn identify_axis(
    rig: &mut RigState,
    axis: Axis,
    search_range: RangeInclusive<i64>,
    cross: f64,
    cfg: &IdentifyConfig,
) -> Result<AxisIdentification> {
    if search_range.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "empty search range on the {axis} axis"
        )));
    }
    let fix = ObjectFix::locate(rig, axis)?;
    let mut readings = Vec::new();
    for pass in 0..cfg.max_passes.max(1) {
        let mut best: Option<(i64, f64)> = None;
        for coordinate in search_range.clone() {
            let center = SubpixelPoint::new(cross, cross).with(axis, coordinate as f64);
            let reference = ReferenceBox::new(center, cfg.box_half_extent, cfg.box_half_extent)?;
            let residual = read_candidate(rig, &fix, &reference, axis, cfg)?;
            let accepted = residual.is_some_and(|r| r.abs() <= cfg.accept_threshold + BOUNDARY_SLACK);
            readings.push(CandidateReading {
                coordinate,
                pass,
                residual,
                accepted,
            });
            if let (true, Some(r)) = (accepted, residual) {
                if best.is_none_or(|(_, b)| r.abs() < b.abs()) {
                    best = Some((coordinate, r));
                }
            }
        }
        if let Some((coordinate, residual)) = best {
            return Ok(AxisIdentification {
                axis,
                coordinate,
                residual,
                readings,
            });
        }
    }
    Err(Error::NoCandidateAccepted {
        axis: axis.as_char(),
        lo: *search_range.start(),
        hi: *search_range.end(),
    })
}

/// Integer search rectangle for the center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBox {
    pub x: RangeInclusive<i64>,
    pub y: RangeInclusive<i64>,
}

impl SearchBox {
    pub fn new(x: RangeInclusive<i64>, y: RangeInclusive<i64>) -> Self {
        Self { x, y }
    }

    /// Square box of `radius` integers around `center` on each axis.
    pub fn around(center: (i64, i64), radius: i64) -> Self {
        Self::new(
            center.0 - radius..=center.0 + radius,
            center.1 - radius..=center.1 + radius,
        )
    }

    fn mid(r: &RangeInclusive<i64>) -> f64 {
        ((*r.start() + *r.end()) / 2) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterIdentification {
    pub estimate: CenterEstimate,
    pub x: AxisIdentification,
    pub y: AxisIdentification,
}

/// Identifies both axes independently: y first, then x.
pub fn identify_center(
    rig: &mut RigState,
    search: &SearchBox,
    cfg: &IdentifyConfig,
) -> Result<CenterIdentification> {
    let y = identify_axis(rig, Axis::Y, search.y.clone(), SearchBox::mid(&search.x), cfg)?;
    let x = identify_axis(rig, Axis::X, search.x.clone(), SearchBox::mid(&search.y), cfg)?;
    Ok(CenterIdentification {
        estimate: CenterEstimate::new(
            SubpixelPoint::new(x.coordinate as f64, y.coordinate as f64),
            EstimateMethod::Geometric,
        ),
        x,
        y,
    })
}
