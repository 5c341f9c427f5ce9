use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rotary::center::{EstimateMethod, IdentifyConfig, SearchBox};
use rotary::deconv::{DeblurConfig, Method};
use rotary::error::{Error, Result};
use rotary::harness::{self, ExperimentReport, RigConfig, SensitivityParams, DEFAULT_VERIFY_ANGLES_DEG};
use rotary::image::SubpixelPoint;
use rotary::io::{write_image, BitDepth};
use rotary::patterns::Pattern;

/// Rotary motion blur synthesis, deblurring and rotation center identification.
///
/// Angles are degrees, coordinates are pixels (x right, y down).
#[derive(Parser, Debug)]
#[command(name = "rotary", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Blur a sharp image about a center and add Gaussian noise.
    Blur {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        blur_angle_deg: f64,
        /// Noise standard deviation as a fraction of full scale.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        depth: DepthArgs,
    },
    /// Non-blind deblurring with known center and blur angle.
    Deblur {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        blur_angle_deg: f64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Sharp reference; prints the PSNR of the result against it.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        depth: DepthArgs,
    },
    /// Deblur with the center shifted along x by each offset and tabulate quality.
    Sensitivity {
        /// Sharp image; it is blurred about the given center first.
        input: PathBuf,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        blur_angle_deg: f64,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Center errors along x, pixels.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 10.0], allow_negative_numbers = true)]
        offsets: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Identify the rotation center of a simulated rig by tangency scanning.
    Identify {
        config: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Half side of the reference box, pixels.
        #[arg(long, default_value_t = IdentifyConfig::default().box_half_extent)]
        box_half_extent: f64,
        #[arg(long, default_value_t = IdentifyConfig::default().max_passes)]
        max_passes: usize,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Track the rig's dot placed on a candidate center over platform angles.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        angles_deg: Vec<f64>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Estimate the center from a single blurred image with a baseline method.
    Estimate {
        input: PathBuf,
        /// hong or hough.
        #[arg(long)]
        method: EstimateMethod,
        #[command(flatten)]
        search: SearchArgs,
        /// Blur angle, required by hong.
        #[arg(long)]
        blur_angle_deg: Option<f64>,
        #[arg(long, requires = "truth_y")]
        truth_x: Option<f64>,
        #[arg(long, requires = "truth_x")]
        truth_y: Option<f64>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Render a synthetic test image.
    Pattern {
        /// blobs, shapes, waves, texture, dots or stars.
        name: Pattern,
        output: PathBuf,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        depth: DepthArgs,
    },
}

#[derive(Args, Debug)]
struct CenterArgs {
    #[arg(long, allow_negative_numbers = true)]
    center_x: f64,
    #[arg(long, allow_negative_numbers = true)]
    center_y: f64,
}

impl CenterArgs {
    fn point(&self) -> SubpixelPoint {
        SubpixelPoint::new(self.center_x, self.center_y)
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// wiener, mwiener or sdp.
    #[arg(long, default_value_t = DeblurConfig::default().method)]
    method: Method,
    #[arg(long, default_value_t = DeblurConfig::default().nsr)]
    nsr: f64,
    #[arg(long, default_value_t = DeblurConfig::default().freq_threshold)]
    freq_threshold: f64,
    #[arg(long, default_value_t = DeblurConfig::default().lambda)]
    lambda: f64,
}

impl SolverArgs {
    fn config(&self) -> DeblurConfig {
        DeblurConfig {
            method: self.method,
            nsr: self.nsr,
            freq_threshold: self.freq_threshold,
            lambda: self.lambda,
        }
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Candidate x range, inclusive, as `lo..hi`.
    #[arg(long, value_parser = parse_range)]
    search_x: (i64, i64),
    /// Candidate y range, inclusive, as `lo..hi`.
    #[arg(long, value_parser = parse_range)]
    search_y: (i64, i64),
}

impl SearchArgs {
    fn search_box(&self) -> SearchBox {
        SearchBox::new(self.search_x.0..=self.search_x.1, self.search_y.0..=self.search_y.1)
    }
}

fn parse_range(s: &str) -> std::result::Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected lo..hi, got '{s}'"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Args, Debug)]
struct DepthArgs {
    /// Write 16-bit samples instead of 8-bit.
    #[arg(long)]
    sixteen_bit: bool,
}

impl DepthArgs {
    fn depth(&self) -> BitDepth {
        if self.sixteen_bit {
            BitDepth::Sixteen
        } else {
            BitDepth::Eight
        }
    }
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// CSV output path.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl ReportArgs {
    fn emit(&self, report: &ExperimentReport) -> Result<()> {
        print!("{}", report.summary_text());
        match &self.report {
            Some(path) => report.save(path),
            None => Ok(()),
        }
    }
}

fn radians(deg: f64) -> f64 {
    deg.to_radians()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Blur {
            input,
            output,
            center,
            blur_angle_deg,
            sigma,
            seed,
            depth,
        } => {
            harness::cmd_blur(&input, &output, center.point(), radians(blur_angle_deg), sigma, seed, depth.depth())?;
        }
        Command::Deblur {
            input,
            output,
            center,
            blur_angle_deg,
            solver,
            reference,
            depth,
        } => {
            let q = harness::cmd_deblur(
                &input,
                &output,
                center.point(),
                radians(blur_angle_deg),
                &solver.config(),
                reference.as_deref(),
                depth.depth(),
            )?;
            if let Some(q) = q {
                println!("psnr_db {q:.4}");
            }
        }
        Command::Sensitivity {
            input,
            center,
            blur_angle_deg,
            sigma,
            seed,
            offsets,
            solver,
            report,
        } => {
            let params = SensitivityParams {
                center: center.point(),
                blur_angle: radians(blur_angle_deg),
                sigma,
                seed,
                offsets,
                config: solver.config(),
            };
            report.emit(&harness::cmd_sensitivity(&input, &params)?)?;
        }
        Command::Identify {
            config,
            search,
            box_half_extent,
            max_passes,
            report,
        } => {
            let rig = RigConfig::load(&config)?;
            let identify = IdentifyConfig {
                box_half_extent,
                max_passes,
                ..IdentifyConfig::default()
            };
            let (_, r) = harness::cmd_identify(&rig, &search.search_box(), &identify)?;
            report.emit(&r)?;
        }
        Command::Verify {
            config,
            center,
            angles_deg,
            report,
        } => {
            let rig = RigConfig::load(&config)?;
            let angles = if angles_deg.is_empty() {
                DEFAULT_VERIFY_ANGLES_DEG.to_vec()
            } else {
                angles_deg
            };
            report.emit(&harness::cmd_verify(&rig, center.point(), &angles)?)?;
        }
        Command::Estimate {
            input,
            method,
            search,
            blur_angle_deg,
            truth_x,
            truth_y,
            report,
        } => {
            let truth = truth_x.zip(truth_y).map(|(x, y)| SubpixelPoint::new(x, y));
            let (_, r) = harness::cmd_estimate(&input, method, &search.search_box(), blur_angle_deg.map(radians), truth)?;
            report.emit(&r)?;
        }
        Command::Pattern {
            name,
            output,
            width,
            height,
            seed,
            depth,
        } => {
            if width == 0 || height == 0 {
                return Err(Error::InvalidParameter("pattern size must be positive".into()));
            }
            write_image(&output, &name.render(width, height, seed), depth.depth())?;
        }
    }
    Ok(())
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage problems are parameter errors; help and version are not errors.
            return exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code())
        }
    }
}
