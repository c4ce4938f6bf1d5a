use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Rolling-shutter compensation for vehicle cameras from vertical line
/// segments.
#[derive(Debug, Parser)]
#[command(name = "rsack", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic distorted frame with its segments and ground truth.
    Simulate(SimulateArgs),
    /// Estimate motion and depth from a segments file.
    Estimate(EstimateArgs),
    /// Undistort an image with an estimated model.
    Rectify(RectifyArgs),
    /// Run a velocity sweep on simulated frames and write CSV and SVG reports.
    Sweep(SweepArgs),
    /// Time the minimal solvers and the full estimate.
    Bench(BenchArgs),
    /// Convert `lsd` text output to a segments file.
    ConvertLsd(ConvertLsdArgs),
    /// Print the manual page in roff format.
    Manual(ManualArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene configuration (JSON); defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "RSACK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Yaw rate in deg/s.
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub deg_s: f64,
    /// Forward speed in km/h.
    #[arg(long, default_value_t = 60.0)]
    pub kmh: f64,
    /// Use the second-order motion model instead of the exact arc.
    #[arg(long)]
    pub second_order: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CameraArgs {
    /// Camera file (JSON with f, cx, cy, w, h, tau).
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Image size WIDTHxHEIGHT for an uncalibrated camera (focal length 0.9
    /// times the larger dimension, centered principal point).
    #[arg(long, value_parser = crate::io::parse_size, conflicts_with = "camera")]
    pub image_size: Option<(u32, u32)>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub segments: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Minimal solver: 4la, 3la or 1la.
    #[arg(long, default_value = "4la")]
    pub variant: String,
    /// Distance to the left wall over the cosine of the road yaw, in metres.
    /// Sets the plausibility bounds and the physical units.
    #[arg(long, default_value_t = 2.5)]
    pub gauge_m: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold_px: f64,
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub min_iterations: usize,
    #[arg(long, default_value_t = 35.0)]
    pub min_length_px: f64,
    #[arg(long, default_value_t = 0.5)]
    pub prefilter: f64,
    #[arg(long, env = "RSACK_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RectifyArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Camera file; without it the camera is derived from the image size.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Camera height above the ground in metres.
    #[arg(long)]
    pub height: Option<f64>,
    /// Gauge length in metres; overrides the value stored in the model.
    #[arg(long)]
    pub gauge_m: Option<f64>,
    /// Segments to draw on the overlay, colored by side or as outliers.
    #[arg(long)]
    pub segments: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scene configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Speeds in km/h.
    #[arg(long, value_delimiter = ',', default_values_t = (1..=14).map(|k| 10.0 * k as f64))]
    pub kmh: Vec<f64>,
    /// Yaw rates in deg/s.
    #[arg(long, value_delimiter = ',', default_values_t = (1..=7).map(|k| 10.0 * k as f64))]
    pub deg_s: Vec<f64>,
    #[arg(long, default_value_t = 25)]
    pub trials: usize,
    #[arg(long, default_value = "4la")]
    pub variant: String,
    /// Endpoint noise in pixels; overrides the configuration.
    #[arg(long)]
    pub noise_px: Option<f64>,
    /// Outlier fraction; overrides the configuration.
    #[arg(long)]
    pub outliers: Option<f64>,
    /// Rotate segments by this angle before estimation (vertical-direction
    /// error), in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tilt_deg: f64,
    #[arg(long)]
    pub second_order: bool,
    #[arg(long, env = "RSACK_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ["1la".to_string(), "3la".to_string(), "4la".to_string()])]
    pub variant: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Threads for the full estimate.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, env = "RSACK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertLsdArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ManualArgs {
    /// Write one page per command into this directory instead of standard
    /// output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
