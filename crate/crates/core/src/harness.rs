//! Experiment drivers behind the command line tool.
//!
//! Every driver is deterministic given its inputs and seeds. Results come
//! back as an [`ExperimentReport`]: a CSV table whose rows repeat the
//! parameters needed to replay them, plus a short human-readable summary.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::blur::{degrade, BlurSpec};
use crate::center::{
    estimate_center_hong, estimate_center_hough, identify_center, CenterEstimate, CenterIdentification,
    EstimateMethod, IdentifyConfig, SearchBox,
};
use crate::deconv::{deblur_rmd, DeblurConfig};
use crate::error::{Error, Result};
use crate::image::{GrayImage, SubpixelPoint};
use crate::io::{read_image, write_image, BitDepth};
use crate::metrics::{and_valid, annulus_mask, find_flat_regions, inscribed_radius, psnr, ringing_index};
use crate::rig::{dot_scene, scene_size_for, square_target_scene, track_dot_error, JitterModel, RigState};

/// Half side and edge ramp of the builtin tangency target, pixels.
pub const TARGET_HALF_SIDE: f64 = 20.0;
pub const TARGET_RAMP: f64 = 5.0;
/// Radius of the builtin verification dot, pixels.
pub const DOT_RADIUS: f64 = 3.0;

/// Tile size and value tolerance used to find flat reference regions.
pub const FLAT_TILE: usize = 8;
pub const FLAT_TOLERANCE: f64 = 0.01;

/// Simulated rig description, read from TOML.
///
/// `scene` is `builtin:target`, `builtin:dot` or an image path resolved
/// relative to the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigConfig {
    pub scene: String,
    pub true_center_x: f64,
    pub true_center_y: f64,
    pub frame_w: usize,
    pub frame_h: usize,
    #[serde(default)]
    pub jitter_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

impl RigConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn true_center(&self) -> SubpixelPoint {
        SubpixelPoint::new(self.true_center_x, self.true_center_y)
    }

    fn scene_image(&self) -> Result<GrayImage> {
        let size = scene_size_for((self.frame_w, self.frame_h));
        match self.scene.as_str() {
            "builtin:target" => Ok(square_target_scene(size, TARGET_HALF_SIDE, TARGET_RAMP)),
            "builtin:dot" => Ok(dot_scene(size, DOT_RADIUS)),
            s if s.starts_with("builtin:") => Err(Error::Config(format!("unknown builtin scene '{s}'"))),
            path => {
                let p = Path::new(path);
                let full = match (&self.base_dir, p.is_relative()) {
                    (Some(dir), true) => dir.join(p),
                    _ => p.to_path_buf(),
                };
                read_image(full)
            }
        }
    }

    pub fn build_rig(&self) -> Result<RigState> {
        RigState::new(
            Arc::new(self.scene_image()?),
            self.true_center(),
            (self.frame_w, self.frame_h),
            JitterModel::new(self.jitter_sigma, self.seed),
        )
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            param("scene", &self.scene),
            param("true_center_x", self.true_center_x),
            param("true_center_y", self.true_center_y),
            param("frame_w", self.frame_w),
            param("frame_h", self.frame_h),
            param("jitter_sigma", self.jitter_sigma),
            param("seed", self.seed),
        ]
    }
}

fn param(name: &str, value: impl Display) -> (String, String) {
    (name.to_string(), value.to_string())
}

/// Tabular experiment result.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Inputs shared by every row, echoed as leading CSV columns.
    pub parameters: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<String>,
}

impl ExperimentReport {
    fn new(experiment: &str, parameters: Vec<(String, String)>, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    /// Value of `column` in every row.
    pub fn column(&self, column: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Io {
            path: "report".into(),
            source: std::io::Error::other(e),
        };
        let mut w = csv::Writer::from_writer(writer);
        let header = std::iter::once("experiment")
            .chain(self.parameters.iter().map(|(k, _)| k.as_str()))
            .chain(self.columns.iter().map(String::as_str));
        w.write_record(header).map_err(csv_err)?;
        for row in &self.rows {
            let record = std::iter::once(self.experiment.as_str())
                .chain(self.parameters.iter().map(|(_, v)| v.as_str()))
                .chain(row.iter().map(String::as_str));
            w.write_record(record).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "report".into(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => io_err(source),
            other => other,
        })
    }

    pub fn summary_text(&self) -> String {
        let mut s = format!("[{}]\n", self.experiment);
        for line in &self.summary {
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Blurs a sharp image and adds noise.
pub fn cmd_blur(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    center: SubpixelPoint,
    blur_angle: f64,
    sigma: f64,
    seed: u64,
    depth: BitDepth,
) -> Result<GrayImage> {
    let sharp = read_image(input)?;
    let spec = BlurSpec::for_frame(center, blur_angle, sigma, sharp.width(), sharp.height())?;
    let blurred = degrade(&sharp, &spec, seed)?;
    write_image(output, &blurred, depth)?;
    Ok(blurred)
}

/// Deblurs an image; returns the PSNR against `reference` when given.
pub fn cmd_deblur(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    center: SubpixelPoint,
    blur_angle: f64,
    config: &DeblurConfig,
    reference: Option<&Path>,
    depth: BitDepth,
) -> Result<Option<f64>> {
    let blurred = read_image(input)?;
    let reference = reference.map(read_image).transpose()?;
    let out = deblur_rmd(&blurred, center, blur_angle, config)?;
    write_image(output, &out, depth)?;
    reference.map(|r| disc_psnr(&r, &out, center)).transpose()
}

/// PSNR over the disc inscribed in the frame about `center`, where every ring
/// lies fully inside the input; corners are excluded.
pub fn disc_psnr(reference: &GrayImage, out: &GrayImage, center: SubpixelPoint) -> Result<f64> {
    let (w, h) = out.dimensions();
    let disc = annulus_mask(w, h, center, 0.0, inscribed_radius(w, h, center));
    psnr(reference, out, &and_valid(disc, &[reference, out]))
}

/// Inputs of a center-error sensitivity study.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityParams {
    pub center: SubpixelPoint,
    pub blur_angle: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Center errors along x, pixels.
    pub offsets: Vec<f64>,
    pub config: DeblurConfig,
}

/// Blurs `sharp` about the true center, then deblurs with the center shifted
/// along x by each offset.
///
/// PSNR is measured on the annulus `2 ≤ r ≤ 0.9·r_in` about the true center;
/// ringing on the tiles that are flat in `sharp`.
pub fn run_sensitivity(sharp: &GrayImage, p: &SensitivityParams) -> Result<ExperimentReport> {
    if p.offsets.is_empty() {
        return Err(Error::InvalidParameter("offset list is empty".into()));
    }
    if p.offsets.iter().any(|o| !o.is_finite()) {
        return Err(Error::InvalidParameter("offsets must be finite".into()));
    }
    let (w, h) = sharp.dimensions();
    let spec = BlurSpec::for_frame(p.center, p.blur_angle, p.sigma, w, h)?;
    p.config.validate()?;
    let blurred = degrade(sharp, &spec, p.seed)?;
    let mask = and_valid(
        annulus_mask(w, h, p.center, 2.0, 0.9 * inscribed_radius(w, h, p.center)),
        &[&blurred],
    );
    let flats = find_flat_regions(sharp, FLAT_TILE, FLAT_TOLERANCE, &mask);
    let rows: Vec<(f64, f64, Option<f64>, f64)> = p
        .offsets
        .par_iter()
        .map(|&dp| {
            let start = Instant::now();
            let out = deblur_rmd(&blurred, p.center.offset(dp, 0.0), p.blur_angle, &p.config)?;
            let q = psnr(sharp, &out, &and_valid(mask.clone(), &[&out]))?;
            let ring = if flats.is_empty() { None } else { Some(ringing_index(&out, &flats)?) };
            Ok((dp, q, ring, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(
        "sensitivity",
        vec![
            param("center_x", p.center.x),
            param("center_y", p.center.y),
            param("blur_angle_rad", p.blur_angle),
            param("sigma", p.sigma),
            param("seed", p.seed),
            param("method", p.config.method),
            param("nsr", p.config.nsr),
            param("freq_threshold", p.config.freq_threshold),
            param("lambda", p.config.lambda),
        ],
        &["offset_px", "psnr_db", "ringing_index", "runtime_ms"],
    );
    for &(dp, q, ring, ms) in &rows {
        report
            .rows
            .push(vec![dp.to_string(), format!("{q:.6}"), fmt_opt(ring), format!("{ms:.1}")]);
    }
    let blurred_psnr = psnr(sharp, &blurred, &mask)?;
    report.summary.push(format!("blurred input PSNR {blurred_psnr:.3} dB, {} flat tiles", flats.len()));
    let psnrs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let rings: Vec<Option<f64>> = rows.iter().map(|r| r.2).collect();
    report.summary.push(format!(
        "PSNR strictly decreasing in listed offset order: {}",
        psnrs.windows(2).all(|w| w[0] > w[1])
    ));
    if rings.iter().all(Option::is_some) {
        report.summary.push(format!(
            "ringing strictly increasing in listed offset order: {}",
            rings.windows(2).all(|w| w[0] < w[1])
        ));
    } else {
        report.summary.push("ringing not measured: no flat tiles in the reference".into());
    }
    Ok(report)
}

pub fn cmd_sensitivity(input: impl AsRef<Path>, params: &SensitivityParams) -> Result<ExperimentReport> {
    run_sensitivity(&read_image(input)?, params)
}

/// Runs the tangency protocol on a configured rig.
///
/// Rows list every candidate reading (the per-candidate residual table).
pub fn cmd_identify(
    config: &RigConfig,
    search: &SearchBox,
    identify: &IdentifyConfig,
) -> Result<(CenterIdentification, ExperimentReport)> {
    let mut rig = config.build_rig()?;
    let mut id = identify_center(&mut rig, search, identify)?;
    id.estimate = id.estimate.with_truth(config.true_center());
    let mut parameters = config.parameters();
    parameters.extend([
        param("search_x", format!("{}..={}", search.x.start(), search.x.end())),
        param("search_y", format!("{}..={}", search.y.start(), search.y.end())),
    ]);
    let mut report = ExperimentReport::new(
        "identify",
        parameters,
        &["axis", "pass", "candidate", "residual_px", "accepted"],
    );
    for axis in [&id.y, &id.x] {
        for c in &axis.readings {
            report.rows.push(vec![
                axis.axis.to_string(),
                c.pass.to_string(),
                c.coordinate.to_string(),
                fmt_opt(c.residual),
                c.accepted.to_string(),
            ]);
        }
    }
    report.summary.extend(estimate_summary(&id.estimate));
    report.summary.push(format!(
        "residuals at the estimate: x {:+.4} px, y {:+.4} px",
        id.x.residual, id.y.residual
    ));
    Ok((id, report))
}

fn estimate_summary(e: &CenterEstimate) -> Vec<String> {
    let mut out = vec![format!("method {} center ({}, {})", e.method, e.center.x, e.center.y)];
    if let Some((ex, ey)) = e.per_axis_error {
        out.push(format!("error vs truth: x {ex:+.4} px, y {ey:+.4} px"));
    }
    out
}

/// Angles visited by default during verification, degrees.
pub const DEFAULT_VERIFY_ANGLES_DEG: [f64; 8] = [0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0];

/// Places the scene's dark dot on `candidate` and tracks it over `angles_deg`.
pub fn cmd_verify(config: &RigConfig, candidate: SubpixelPoint, angles_deg: &[f64]) -> Result<ExperimentReport> {
    if angles_deg.is_empty() || angles_deg.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter("angle list must be nonempty and finite".into()));
    }
    let mut rig = config.build_rig()?;
    let angles: Vec<f64> = angles_deg.iter().map(|a| a.to_radians()).collect();
    let track = track_dot_error(&mut rig, candidate, &angles)?;
    let mut parameters = config.parameters();
    parameters.extend([param("candidate_x", candidate.x), param("candidate_y", candidate.y)]);
    let mut report = ExperimentReport::new("verify", parameters, &["angle_deg", "dot_x", "dot_y", "displacement_px"]);
    for (deg, (_, p, d)) in angles_deg.iter().zip(&track.samples) {
        report
            .rows
            .push(vec![deg.to_string(), format!("{:.4}", p.x), format!("{:.4}", p.y), format!("{d:.4}")]);
    }
    report
        .summary
        .push(format!("max displacement {:.4} px", track.max_displacement));
    Ok(report)
}

/// Runs an image-based baseline estimator on one blurred frame.
pub fn run_estimate(
    blurred: &GrayImage,
    method: EstimateMethod,
    search: &SearchBox,
    blur_angle: Option<f64>,
    truth: Option<SubpixelPoint>,
) -> Result<(CenterEstimate, ExperimentReport)> {
    let mut estimate = match method {
        EstimateMethod::Hong => {
            let angle = blur_angle
                .ok_or_else(|| Error::InvalidParameter("the hong estimator needs the blur angle".into()))?;
            estimate_center_hong(blurred, search, angle)?
        }
        EstimateMethod::Hough => estimate_center_hough(blurred, search)?,
        EstimateMethod::Geometric => {
            return Err(Error::InvalidParameter(
                "geometric identification needs a rig; use identify".into(),
            ))
        }
    };
    if let Some(t) = truth {
        estimate = estimate.with_truth(t);
    }
    let mut report = ExperimentReport::new(
        "estimate",
        vec![
            param("method", method),
            param("search_x", format!("{}..={}", search.x.start(), search.x.end())),
            param("search_y", format!("{}..={}", search.y.start(), search.y.end())),
            param("blur_angle_rad", fmt_opt(blur_angle)),
        ],
        &["center_x", "center_y", "truth_x", "truth_y", "error_x", "error_y"],
    );
    let (ex, ey) = estimate.per_axis_error.unzip();
    report.rows.push(vec![
        estimate.center.x.to_string(),
        estimate.center.y.to_string(),
        fmt_opt(truth.map(|t| t.x)),
        fmt_opt(truth.map(|t| t.y)),
        fmt_opt(ex),
        fmt_opt(ey),
    ]);
    report.summary.extend(estimate_summary(&estimate));
    Ok((estimate, report))
}

pub fn cmd_estimate(
    input: impl AsRef<Path>,
    method: EstimateMethod,
    search: &SearchBox,
    blur_angle: Option<f64>,
    truth: Option<SubpixelPoint>,
) -> Result<(CenterEstimate, ExperimentReport)> {
    run_estimate(&read_image(input)?, method, search, blur_angle, truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIG: &str = r#"
scene = "builtin:target"
true_center_x = 120.4
true_center_y = 99.7
frame_w = 240
frame_h = 200
"#;

    #[test]
    fn config_defaults_and_unknown_keys() {
        let cfg = RigConfig::parse(RIG).unwrap();
        assert_eq!(cfg.jitter_sigma, 0.0);
        assert_eq!(cfg.seed, 0);
        let err = RigConfig::parse(&format!("{RIG}jiter_sigma = 0.2\n")).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("jiter_sigma")), "{err}");
        assert_eq!(err.exit_code(), 1);
        assert!(RigConfig::parse("scene = \"builtin:target\"").is_err());
    }

    #[test]
    fn unknown_builtin_scene() {
        let cfg = RigConfig::parse(&RIG.replace("builtin:target", "builtin:cloud")).unwrap();
        assert!(matches!(cfg.build_rig(), Err(Error::Config(_))));
    }

    #[test]
    fn identify_report_lists_every_candidate() {
        let cfg = RigConfig::parse(RIG).unwrap();
        let (id, report) = cmd_identify(&cfg, &SearchBox::new(118..=122, 97..=102), &IdentifyConfig::default()).unwrap();
        assert_eq!(id.estimate.center, SubpixelPoint::new(120.0, 100.0));
        assert_eq!(report.rows.len(), 5 + 6);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("experiment,scene,true_center_x"));
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn residual_table_is_monotone_in_candidate_error() {
        let cfg = RigConfig::parse(RIG).unwrap();
        let (id, _) = cmd_identify(&cfg, &SearchBox::new(115..=125, 95..=105), &IdentifyConfig::default()).unwrap();
        for (axis, truth) in [(&id.x, 120.4), (&id.y, 99.7)] {
            let mut pts: Vec<(f64, f64)> = axis
                .readings
                .iter()
                .map(|c| ((c.coordinate as f64 - truth).abs(), c.residual.unwrap().abs()))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert!(pts.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-9), "{pts:?}");
        }
    }

    #[test]
    fn sensitivity_rejects_empty_offsets_and_repeats_rows() {
        let sharp = crate::patterns::Pattern::Shapes.render(96, 96, 1);
        let mut p = SensitivityParams {
            center: SubpixelPoint::new(48.2, 47.9),
            blur_angle: 0.3,
            sigma: 0.01,
            seed: 4,
            offsets: vec![],
            config: DeblurConfig::default(),
        };
        assert!(matches!(run_sensitivity(&sharp, &p), Err(Error::InvalidParameter(_))));
        p.offsets = vec![0.0, 0.0];
        let r = run_sensitivity(&sharp, &p).unwrap();
        let psnrs = r.column("psnr_db").unwrap();
        assert_eq!(psnrs[0], psnrs[1]);
        assert_eq!(r.column("ringing_index").unwrap()[0], r.column("ringing_index").unwrap()[1]);
    }

    #[test]
    fn geometric_estimate_needs_a_rig() {
        let img = GrayImage::filled(32, 32, 0.5);
        let err = run_estimate(&img, EstimateMethod::Geometric, &SearchBox::around((16, 16), 1), None, None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
