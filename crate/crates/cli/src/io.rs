//! On-disk formats: JSON-lines segments, camera and model JSON, PGM and PNG
//! images, and the plain-text output of the `lsd` detector.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat, RgbImage};
use rsack_core::sim::{MotionTruth, SceneConfig, SegmentLabel};
use rsack_core::{CameraModel, DepthModel, RsModel, SegmentRs};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::parse(path.display(), e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path.display(), e))
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: usize,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    #[serde(default)]
    pub len: f64,
}

impl SegmentRecord {
    pub fn new(id: usize, a: (f64, f64), b: (f64, f64)) -> Self {
        Self {
            id,
            x1: a.0,
            y1: a.1,
            x2: b.0,
            y2: b.1,
            len: (a.0 - b.0).hypot(a.1 - b.1),
        }
    }
}

impl From<&SegmentRs> for SegmentRecord {
    fn from(s: &SegmentRs) -> Self {
        Self::new(s.id, s.top, s.bottom)
    }
}

pub fn segments_to_jsonl(segments: &[SegmentRs]) -> Vec<u8> {
    jsonl(segments.iter().map(SegmentRecord::from))
}

pub fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("serializable record");
        out.push(b'\n');
    }
    out
}

/// Parses JSON-lines segments. Blank lines are skipped; the stored length is
/// optional and recomputed from the endpoints.
pub fn parse_segments(text: &str, camera: &CameraModel, origin: &str) -> Result<Vec<SegmentRs>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: SegmentRecord =
            serde_json::from_str(line).map_err(|e| CliError::parse(format!("{origin}:{}", n + 1), e))?;
        let seg = SegmentRs::new(camera, r.id, (r.x1, r.y1), (r.x2, r.y2))
            .map_err(|e| CliError::parse(format!("{origin}:{}", n + 1), e))?;
        out.push(seg);
    }
    Ok(out)
}

pub fn read_segments(path: &Path, camera: &CameraModel) -> Result<Vec<SegmentRs>> {
    parse_segments(&read_text(path)?, camera, &path.display().to_string())
}

/// Converts `lsd` text output (`x1 y1 x2 y2 width p -log_nfa` per line) to
/// JSON-lines records, numbering segments by line order.
pub fn convert_lsd(text: &str, origin: &str) -> Result<Vec<SegmentRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::parse(format!("{origin}:{}", n + 1), e))?;
        if v.len() < 4 || v[..4].iter().any(|x| !x.is_finite()) {
            return Err(CliError::parse(
                format!("{origin}:{}", n + 1),
                "expected at least four finite numbers",
            ));
        }
        out.push(SegmentRecord::new(out.len(), (v[0], v[1]), (v[2], v[3])));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraFile {
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: u32,
    pub h: u32,
    /// Row delay in seconds; 0 when unknown.
    #[serde(default)]
    pub tau: f64,
}

impl CameraFile {
    pub fn to_camera(self) -> rsack_core::Result<CameraModel> {
        CameraModel::new(self.f, (self.cx, self.cy), self.w, self.h, self.tau, 0.0)
    }
}

impl From<&CameraModel> for CameraFile {
    fn from(c: &CameraModel) -> Self {
        Self {
            f: c.focal_px,
            cx: c.principal_point.0,
            cy: c.principal_point.1,
            w: c.width,
            h: c.height,
            tau: c.row_delay,
        }
    }
}

pub fn read_camera(path: &Path) -> Result<CameraModel> {
    let file: CameraFile = read_json(path)?;
    file.to_camera().map_err(|e| CliError::parse(path.display(), e))
}

/// Parses `WIDTHxHEIGHT`.
pub fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let w = w.trim().parse().map_err(|_| "bad width")?;
    let h = h.trim().parse().map_err(|_| "bad height")?;
    Ok((w, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub alpha_row: String,
    pub beta_row: String,
    pub delta: String,
    pub lambda: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            alpha_row: "half yaw angle per image row (rad)".into(),
            beta_row: "distance per image row in gauge lengths".into(),
            delta: "normalized image column".into(),
            lambda: "right-wall inverse-depth slope relative to the left wall".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physical {
    pub angular_velocity_deg_s: f64,
    pub translational_velocity_kmh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub alpha_row: f64,
    pub beta_row: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_ground: Option<f64>,
    #[serde(default = "yes")]
    pub depth_observable: bool,
    /// Metres per gauge unit (distance to the left wall).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<Physical>,
    #[serde(default)]
    pub units: Units,
}

fn yes() -> bool {
    true
}

impl ModelFile {
    /// Serializable form, with physical units when the row delay and the
    /// gauge length are known.
    pub fn new(model: &RsModel, observable: bool, row_delay: f64, gauge_length_m: Option<f64>) -> Self {
        let physical = gauge_length_m.filter(|_| row_delay > 0.0).map(|g| {
            let (deg, kmh) = model.motion.to_physical(row_delay, g);
            Physical {
                angular_velocity_deg_s: deg,
                translational_velocity_kmh: kmh,
            }
        });
        Self {
            alpha_row: model.alpha(),
            beta_row: model.beta(),
            delta: model.delta(),
            lambda: model.lambda(),
            lambda_ground: (model.depth.lambda_ground > 0.0).then_some(model.depth.lambda_ground),
            depth_observable: observable,
            gauge_length_m,
            physical,
            units: Units::default(),
        }
    }

    pub fn model(&self) -> RsModel {
        RsModel {
            motion: rsack_core::AckermannModel::new(self.alpha_row, self.beta_row),
            depth: DepthModel::new(self.delta, self.lambda).with_ground(self.lambda_ground.unwrap_or(0.0)),
        }
    }
}

/// Ground truth written next to simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub scene: SceneConfig,
    pub motion: MotionTruth,
    pub model: ModelFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: usize,
    pub side: rsack_core::PlaneSide,
    pub outlier: bool,
}

impl From<(&SegmentRs, &SegmentLabel)> for LabelRecord {
    fn from((s, l): (&SegmentRs, &SegmentLabel)) -> Self {
        Self {
            id: s.id,
            side: l.side,
            outlier: l.outlier,
        }
    }
}

pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| CliError::parse(path.display(), e))?;
    Ok(img.to_luma8())
}

/// Binary PGM bytes.
pub fn encode_pgm(img: &GrayImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Pnm)?;
    Ok(buf.into_inner())
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Output files of one command, written together once everything succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        self.files.iter().map(|(p, _)| p.clone()).collect()
    }

    /// Writes each file to a temporary sibling first and renames them all at
    /// the end; on failure the temporaries are removed.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut staged = Vec::new();
        let result = (|| {
            for (path, bytes) in &self.files {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                let tmp = path.with_extension(format!(
                    "{}.partial",
                    path.extension().and_then(|e| e.to_str()).unwrap_or("")
                ));
                std::fs::write(&tmp, bytes)?;
                staged.push((tmp, path.clone()));
            }
            for (tmp, path) in &staged {
                std::fs::rename(tmp, path)?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            for (tmp, _) in &staged {
                let _ = std::fs::remove_file(tmp);
            }
            return Err(CliError::Io(e));
        }
        Ok(self.paths())
    }
}
