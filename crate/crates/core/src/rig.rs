//! Simulated camera on a rotating platform.
//!
//! The camera rides the platform, so the rotation center is a fixed point of
//! the pixel grid. Translating the platform base slides the scene under the
//! camera. A capture at platform angle `θ` with scene offset `d` renders
//! frame pixel `q` from scene position `c + R(-θ)(q - c) - d`, where `c` is
//! the rotation center perturbed by this capture's jitter.
//!
//! The true center is hidden from estimators; only test oracles read it
//! through [`RigState::oracle_true_center`].

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::features::{dark_components, weighted_centroid, DARK_THRESHOLD};
use crate::image::{rotate_point, warp, GrayImage, Rect, SubpixelPoint};

/// Per-capture perturbation of the effective rotation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterModel {
    /// Standard deviation of the center perturbation per axis, pixels.
    pub axis_sigma: f64,
    pub seed: u64,
}

impl JitterModel {
    pub const NONE: JitterModel = JitterModel {
        axis_sigma: 0.0,
        seed: 0,
    };

    /// Stepper vibration level used for realistic-mode experiments.
    pub const DEFAULT_SIGMA: f64 = 0.25;

    pub fn new(axis_sigma: f64, seed: u64) -> Self {
        Self { axis_sigma, seed }
    }
}

#[derive(Debug, Clone)]
pub struct RigState {
    scene: Arc<GrayImage>,
    true_center: SubpixelPoint,
    scene_offset: SubpixelPoint,
    current_angle: f64,
    jitter: JitterModel,
    frame_width: usize,
    frame_height: usize,
    /// Scene coordinate of frame pixel (0, 0) at angle 0 and zero offset.
    crop_origin: SubpixelPoint,
    captures: u64,
}

impl RigState {
    /// Assembles a rig at angle 0 with zero offset.
    ///
    /// The scene must be at least as large as the frame diagonal in both
    /// directions so that half-turn captures stay inside the texture, and the
    /// rotation center must lie inside the frame.
    pub fn new(
        scene: impl Into<Arc<GrayImage>>,
        true_center: SubpixelPoint,
        frame_size: (usize, usize),
        jitter: JitterModel,
    ) -> Result<Self> {
        let scene = scene.into();
        let (fw, fh) = frame_size;
        if fw == 0 || fh == 0 {
            return Err(Error::InvalidRig("frame size must be nonzero".into()));
        }
        let diag = (fw as f64).hypot(fh as f64).ceil() as usize;
        if scene.width() < diag || scene.height() < diag {
            return Err(Error::InvalidRig(format!(
                "scene {}x{} is smaller than the frame diagonal {diag}",
                scene.width(),
                scene.height()
            )));
        }
        if !true_center.is_finite()
            || true_center.x < 0.0
            || true_center.y < 0.0
            || true_center.x > (fw - 1) as f64
            || true_center.y > (fh - 1) as f64
        {
            return Err(Error::InvalidRig(format!(
                "rotation center ({}, {}) lies outside the {fw}x{fh} frame",
                true_center.x, true_center.y
            )));
        }
        if !(jitter.axis_sigma >= 0.0 && jitter.axis_sigma.is_finite()) {
            return Err(Error::InvalidRig(format!(
                "jitter sigma {} must be finite and non-negative",
                jitter.axis_sigma
            )));
        }
        let crop_origin = SubpixelPoint::new(
            ((scene.width() - fw) / 2) as f64,
            ((scene.height() - fh) / 2) as f64,
        );
        Ok(Self {
            scene,
            true_center,
            scene_offset: SubpixelPoint::new(0.0, 0.0),
            current_angle: 0.0,
            jitter,
            frame_width: fw,
            frame_height: fh,
            crop_origin,
            captures: 0,
        })
    }

    /// Ground-truth rotation center, for test oracles and reports only.
    pub fn oracle_true_center(&self) -> SubpixelPoint {
        self.true_center
    }

    pub fn frame_size(&self) -> (usize, usize) {
        (self.frame_width, self.frame_height)
    }

    pub fn angle(&self) -> f64 {
        self.current_angle
    }

    pub fn offset(&self) -> SubpixelPoint {
        self.scene_offset
    }

    pub fn jitter(&self) -> JitterModel {
        self.jitter
    }

    pub fn scene(&self) -> &GrayImage {
        &self.scene
    }

    pub fn capture_count(&self) -> u64 {
        self.captures
    }

    /// Commands the platform to an absolute angle in radians.
    pub fn set_angle(&mut self, angle: f64) {
        self.current_angle = angle;
    }

    /// Moves the platform base so scene features shift by `(dx, dy)` pixels.
    pub fn translate(&mut self, dx: f64, dy: f64) {
        self.scene_offset = self.scene_offset.offset(dx, dy);
    }

    /// Rotation center in effect for capture number `index`.
    fn effective_center(&self, index: u64) -> SubpixelPoint {
        if self.jitter.axis_sigma == 0.0 {
            return self.true_center;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.jitter.seed);
        rng.set_stream(index);
        let normal = Normal::new(0.0, self.jitter.axis_sigma).expect("sigma validated");
        let dx = normal.sample(&mut rng);
        let dy = normal.sample(&mut rng);
        self.true_center.offset(dx, dy)
    }

    pub fn capture(&mut self) -> GrayImage {
        self.capture_region(None)
    }

    /// Renders only the pixels inside `region`; the rest of the frame is
    /// marked invalid. Each call is one capture for the jitter sequence.
    pub fn capture_region(&mut self, region: Option<Rect>) -> GrayImage {
        let center = self.effective_center(self.captures);
        self.captures += 1;
        let angle = self.current_angle;
        let shift = SubpixelPoint::new(
            self.crop_origin.x - self.scene_offset.x,
            self.crop_origin.y - self.scene_offset.y,
        );
        warp(&self.scene, self.frame_width, self.frame_height, region, |q| {
            let p = rotate_point(q, center, -angle);
            SubpixelPoint::new(p.x + shift.x, p.y + shift.y)
        })
    }
}

/// Light background with one dark axis-aligned square at the scene center.
///
/// The square's edges are linear ramps `ramp` pixels wide, so bilinear
/// resampling preserves the position of the mid-level crossing exactly.
pub fn square_target_scene(size: usize, half_side: f64, ramp: f64) -> GrayImage {
    let c = (size as f64 - 1.0) / 2.0;
    GrayImage::from_fn(size, size, |x, y| {
        let inside = half_side - (x as f64 - c).abs().max((y as f64 - c).abs());
        let a = (inside / ramp + 0.5).clamp(0.0, 1.0);
        0.9 - 0.8 * a
    })
}

/// Light background with one dark dot at the scene center.
pub fn dot_scene(size: usize, radius: f64) -> GrayImage {
    let c = (size as f64 - 1.0) / 2.0;
    GrayImage::from_fn(size, size, |x, y| {
        let d = (x as f64 - c).hypot(y as f64 - c);
        let a = ((radius - d) / 1.5 + 0.5).clamp(0.0, 1.0);
        0.9 - 0.8 * a
    })
}

/// Smallest square scene that satisfies [`RigState::new`] for a frame.
pub fn scene_size_for(frame_size: (usize, usize)) -> usize {
    (frame_size.0 as f64).hypot(frame_size.1 as f64).ceil() as usize + 16
}

/// Result of a dot-tracking verification run.
#[derive(Debug, Clone)]
pub struct DotTrack {
    pub candidate: SubpixelPoint,
    /// `(angle, localized dot, distance from candidate)` per requested angle.
    pub samples: Vec<(f64, SubpixelPoint, f64)>,
    pub max_displacement: f64,
}

/// Locates the dark dot in a capture: the largest dark component, or the
/// one nearest `near` when given.
pub fn locate_dot(frame: &GrayImage, near: Option<SubpixelPoint>) -> Result<SubpixelPoint> {
    let comps = dark_components(
        frame,
        Rect::new(0, 0, frame.width(), frame.height()),
        DARK_THRESHOLD,
    );
    let mut points = comps
        .iter()
        .filter_map(|c| weighted_centroid(frame, c, DARK_THRESHOLD));
    let found = match near {
        None => points.next(),
        Some(t) => points.min_by(|a, b| a.distance(&t).total_cmp(&b.distance(&t))),
    };
    found.ok_or_else(|| Error::ObjectNotFound("no pixel below the dot detection threshold".into()))
}

/// Places the dot at `candidate` (angle 0) and reports how far it wanders
/// from there as the platform visits `angles`.
///
/// With no jitter the dot stays put exactly when `candidate` is the rotation
/// center; a single-axis offset `e` shows up as a displacement `2e` at a half
/// turn. The platform is returned to angle 0 afterwards.
pub fn track_dot_error(rig: &mut RigState, candidate: SubpixelPoint, angles: &[f64]) -> Result<DotTrack> {
    rig.set_angle(0.0);
    let mut pos = locate_dot(&rig.capture(), None)?;
    for _ in 0..6 {
        let (dx, dy) = (candidate.x - pos.x, candidate.y - pos.y);
        if dx.hypot(dy) < 1e-4 {
            break;
        }
        rig.translate(dx, dy);
        pos = locate_dot(&rig.capture(), Some(candidate))?;
    }
    let mut samples = Vec::with_capacity(angles.len());
    for &angle in angles {
        rig.set_angle(angle);
        let p = locate_dot(&rig.capture(), Some(candidate))?;
        samples.push((angle, p, p.distance(&candidate)));
    }
    rig.set_angle(0.0);
    let max_displacement = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(DotTrack {
        candidate,
        samples,
        max_displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn dot_rig(center: SubpixelPoint, jitter: JitterModel) -> RigState {
        let frame = (96, 80);
        RigState::new(dot_scene(scene_size_for(frame), 3.0), center, frame, jitter).unwrap()
    }

    #[test]
    fn rejects_small_scene_and_outside_center() {
        let scene = GrayImage::filled(100, 100, 0.9);
        assert!(RigState::new(scene.clone(), SubpixelPoint::new(10.0, 10.0), (80, 80), JitterModel::NONE).is_err());
        let scene = GrayImage::filled(140, 140, 0.9);
        assert!(RigState::new(scene.clone(), SubpixelPoint::new(10.0, 10.0), (80, 80), JitterModel::NONE).is_ok());
        assert!(RigState::new(scene, SubpixelPoint::new(90.0, 10.0), (80, 80), JitterModel::NONE).is_err());
    }

    #[test]
    fn angle_zero_capture_is_crop() {
        let scene = crate::patterns::Pattern::Texture.render(140, 140, 1);
        let mut rig = RigState::new(scene.clone(), SubpixelPoint::new(40.3, 35.9), (80, 60), JitterModel::NONE).unwrap();
        let frame = rig.capture();
        assert!(frame.all_valid());
        for y in 0..60 {
            for x in 0..80 {
                assert_eq!(frame.get(x, y), scene.get(x + 30, y + 40));
            }
        }
    }

    #[test]
    fn stateless_pose_without_jitter() {
        let scene = crate::patterns::Pattern::Texture.render(140, 140, 2);
        let mut rig = RigState::new(scene, SubpixelPoint::new(40.3, 35.9), (80, 60), JitterModel::NONE).unwrap();
        let a = rig.capture();
        rig.set_angle(PI);
        let _ = rig.capture();
        rig.set_angle(0.0);
        assert_eq!(rig.capture(), a);
        assert_eq!(rig.capture(), a);
    }

    #[test]
    fn translation_moves_features() {
        let scene = crate::patterns::Pattern::Texture.render(140, 140, 3);
        let mut rig = RigState::new(scene.clone(), SubpixelPoint::new(40.0, 30.0), (80, 60), JitterModel::NONE).unwrap();
        let a = rig.capture();
        rig.translate(0.0, 1.0);
        let b = rig.capture();
        for y in 1..60 {
            for x in 0..80 {
                assert_eq!(b.get(x, y), a.get(x, y - 1));
            }
        }
        rig.translate(0.5, -1.0);
        let c = rig.capture();
        // Half-pixel shift equals the blend of the two neighbors.
        for y in 0..60 {
            for x in 1..80 {
                let expected = 0.5 * (scene.get(x + 30 - 1, y + 40) + scene.get(x + 30, y + 40));
                assert!((c.get(x, y) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn center_value_fixed_at_every_angle() {
        let scene = crate::patterns::Pattern::Texture.render(140, 140, 4);
        let center = SubpixelPoint::new(41.0, 27.0);
        let mut rig = RigState::new(scene, center, (80, 60), JitterModel::NONE).unwrap();
        let v0 = rig.capture().get(41, 27);
        for k in 1..16 {
            rig.set_angle(k as f64 * 0.4);
            assert_eq!(rig.capture().get(41, 27), v0);
        }
    }

    #[test]
    fn half_turn_mirrors_feature() {
        let center = SubpixelPoint::new(48.0, 40.0);
        let mut rig = dot_rig(center, JitterModel::NONE);
        let track = track_dot_error(&mut rig, SubpixelPoint::new(58.0, 40.0), &[PI]).unwrap();
        let p = track.samples[0].1;
        assert!(p.distance(&SubpixelPoint::new(38.0, 40.0)) < 0.05, "{p:?}");
    }

    #[test]
    fn dot_at_center_does_not_move() {
        let center = SubpixelPoint::new(47.3, 39.6);
        let mut rig = dot_rig(center, JitterModel::NONE);
        let angles: Vec<f64> = (0..8).map(|k| k as f64 * PI / 4.0).collect();
        let track = track_dot_error(&mut rig, center, &angles).unwrap();
        assert!(track.max_displacement < 0.1, "{}", track.max_displacement);
    }

    #[test]
    fn doubling_relation_single_axis() {
        let center = SubpixelPoint::new(47.3, 39.6);
        let mut rig = dot_rig(center, JitterModel::NONE);
        let track = track_dot_error(&mut rig, center.offset(0.0, 1.0), &[PI]).unwrap();
        assert!((track.max_displacement - 2.0).abs() < 0.1);
    }

    #[test]
    fn dot_not_found() {
        let frame = (96, 80);
        let scene = GrayImage::filled(scene_size_for(frame), scene_size_for(frame), 0.9);
        let mut rig = RigState::new(scene, SubpixelPoint::new(40.0, 40.0), frame, JitterModel::NONE).unwrap();
        assert!(matches!(
            track_dot_error(&mut rig, SubpixelPoint::new(40.0, 40.0), &[0.0]),
            Err(Error::ObjectNotFound(_))
        ));
    }

    #[test]
    fn jitter_scatter_matches_sigma() {
        // Per-axis scatter of a rotated point is 2 sin(θ/2) σ; at 60° that is σ.
        let sigma = 0.25;
        let center = SubpixelPoint::new(47.3, 39.6);
        let mut rig = dot_rig(center, JitterModel::new(sigma, 99));
        let start = center.offset(6.0, -4.0);
        track_dot_error(&mut rig, start, &[]).unwrap();
        rig.set_angle(FRAC_PI_3);
        let xs: Vec<f64> = (0..240)
            .map(|_| locate_dot(&rig.capture(), None).unwrap().x)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!(sd >= 0.7 * sigma && sd <= 1.3 * sigma, "sd {sd}");
    }

    #[test]
    fn jitter_is_reproducible() {
        let center = SubpixelPoint::new(47.3, 39.6);
        let mut a = dot_rig(center, JitterModel::new(0.5, 5));
        let mut b = dot_rig(center, JitterModel::new(0.5, 5));
        a.set_angle(1.0);
        b.set_angle(1.0);
        for _ in 0..3 {
            assert_eq!(a.capture(), b.capture());
        }
        assert_eq!(a.oracle_true_center(), center);
    }
}
