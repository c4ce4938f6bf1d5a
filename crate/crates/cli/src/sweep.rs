//! Velocity sweeps over simulated frames, with CSV output and box plots.

use std::time::Instant;

use rayon::prelude::*;
use rsack_core::ransac::{prune_segments, ransac_ackermann, RansacConfig};
use rsack_core::sim::{make_scene, render_segments, MotionTruth, RenderMode, SceneConfig};
use rsack_core::{CameraModel, PlausibilityBounds, SegmentRs, SolverKind};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scene: SceneConfig,
    pub kmh: Vec<f64>,
    pub deg_s: Vec<f64>,
    pub trials: usize,
    pub variant: String,
    pub seed: u64,
    /// In-plane rotation applied to every segment before estimation, in
    /// degrees; models an error in the assumed vertical direction.
    pub tilt_deg: f64,
    pub mode: RenderMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            kmh: (1..=14).map(|k| 10.0 * k as f64).collect(),
            deg_s: (1..=7).map(|k| 10.0 * k as f64).collect(),
            trials: 25,
            variant: "4la".into(),
            seed: 0,
            tilt_deg: 0.0,
            mode: RenderMode::Exact,
        }
    }
}

/// One CSV row. Estimates are empty when the trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub variant: String,
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub true_deg_s: f64,
    pub true_kmh: f64,
    pub est_deg_s: Option<f64>,
    pub est_kmh: Option<f64>,
    pub inliers: usize,
    pub segments: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    /// `ok`, or the failure kind.
    pub status: String,
}

pub fn trial_seed(base: u64, cell: usize, trial: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add(cell as u64 * 10_007)
        .wrapping_add(trial as u64)
}

/// Rotates pixel endpoints about the principal point.
pub fn tilt_segments(segments: &[SegmentRs], camera: &CameraModel, deg: f64) -> Vec<SegmentRs> {
    if deg == 0.0 {
        return segments.to_vec();
    }
    let (s, c) = deg.to_radians().sin_cos();
    let (cx, cy) = camera.principal_point;
    let rot = |p: (f64, f64)| {
        let (x, y) = (p.0 - cx, p.1 - cy);
        (cx + c * x - s * y, cy + s * x + c * y)
    };
    segments
        .iter()
        .filter_map(|seg| SegmentRs::new(camera, seg.id, rot(seg.top), rot(seg.bottom)).ok())
        .collect()
}

pub fn run_trial(cfg: &SweepConfig, kind: SolverKind, cell: usize, trial: usize, deg: f64, kmh: f64) -> SweepRow {
    let seed = trial_seed(cfg.seed, cell, trial);
    let scene_cfg = &cfg.scene;
    let camera = scene_cfg.camera();
    let gauge = scene_cfg.gauge_length_m();
    let motion = MotionTruth::for_scene(scene_cfg, deg, kmh);
    let scene = make_scene(scene_cfg, seed);
    let rendered = render_segments(&scene, &motion, scene_cfg.pixel_noise_std, seed, cfg.mode);
    let segments = tilt_segments(&rendered.segments, &camera, cfg.tilt_deg);
    let mut rc = RansacConfig::new(PlausibilityBounds::vehicle_defaults(&camera, gauge));
    rc.rng_seed = seed;
    let start = Instant::now();
    let pruned = prune_segments(&segments, &rc);
    let result = ransac_ackermann(&pruned, kind, &camera, &rc);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut row = SweepRow {
        schema_version: SCHEMA_VERSION,
        variant: kind.name().to_string(),
        cell,
        trial,
        seed,
        true_deg_s: deg,
        true_kmh: kmh,
        est_deg_s: None,
        est_kmh: None,
        inliers: 0,
        segments: pruned.len(),
        iterations: 0,
        wall_ms,
        status: "ok".into(),
    };
    match result {
        Ok(e) => {
            let (d, k) = e.model.motion.to_physical(camera.row_delay, gauge);
            row.est_deg_s = Some(d);
            row.est_kmh = Some(k);
            row.inliers = e.best_inlier_count;
            row.iterations = e.iterations_run;
        }
        Err(e) => {
            row.status = match e {
                rsack_core::Error::InsufficientData { .. } => "insufficient_data",
                rsack_core::Error::EstimationFailed { iterations, .. } => {
                    row.iterations = iterations;
                    "estimation_failed"
                }
                _ => "error",
            }
            .into();
        }
    }
    row
}

/// Runs every (km/h, deg/s) cell; rows come back in cell-major order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.scene.validate()?;
    let kind: SolverKind = cfg
        .variant
        .parse()
        .map_err(|_| crate::error::CliError::Usage(format!("unknown variant {}", cfg.variant)))?;
    let jobs: Vec<(usize, usize, f64, f64)> = cfg
        .kmh
        .iter()
        .flat_map(|&k| cfg.deg_s.iter().map(move |&d| (k, d)))
        .enumerate()
        .flat_map(|(cell, (k, d))| (0..cfg.trials).map(move |t| (cell, t, d, k)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(cell, t, d, k)| run_trial(cfg, kind, cell, t, d, k))
        .collect())
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(w.into_inner().expect("in-memory writer"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Per-cell summary of one estimated quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub truth: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl CellStats {
    pub fn from_values(truth: f64, values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            truth,
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
            count: v.len(),
        })
    }
}

/// Cell index with angular and translational velocity stats.
pub type CellSummary = (usize, Option<CellStats>, Option<CellStats>);

/// Cells in ascending order with angular and translational stats.
/// Failed trials count as missing values.
pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut cells: Vec<usize> = rows.iter().map(|r| r.cell).collect();
    cells.dedup();
    cells.sort_unstable();
    cells.dedup();
    cells
        .into_iter()
        .map(|c| {
            let in_cell: Vec<&SweepRow> = rows.iter().filter(|r| r.cell == c).collect();
            let first = in_cell[0];
            let deg: Vec<f64> = in_cell.iter().filter_map(|r| r.est_deg_s).collect();
            let kmh: Vec<f64> = in_cell.iter().filter_map(|r| r.est_kmh).collect();
            (
                c,
                CellStats::from_values(first.true_deg_s, &deg),
                CellStats::from_values(first.true_kmh, &kmh),
            )
        })
        .collect()
}

/// Box plots of the estimates per cell, angular velocity on top and
/// translational velocity below. Self-contained SVG built from CSV text.
pub fn svg_from_csv(text: &str) -> Result<String> {
    let rows = rows_from_csv(text)?;
    let cells = summarize(&rows);
    let labels: Vec<String> = cells
        .iter()
        .map(|(c, _, _)| {
            let r = rows.iter().find(|r| r.cell == *c).expect("cell has rows");
            format!("{:.0}/{:.0}", r.true_kmh, r.true_deg_s)
        })
        .collect();
    let slot = 28.0;
    let (left, top, panel_h, gap) = (60.0, 30.0, 220.0, 60.0);
    let width = left + slot * cells.len().max(1) as f64 + 20.0;
    let height = top + 2.0 * panel_h + gap + 70.0;
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" \
         font-family=\"sans-serif\" font-size=\"10\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    type Panel = (&'static str, fn(&CellSummary) -> Option<CellStats>);
    let panels: [Panel; 2] = [
        ("angular velocity (deg/s)", |c| c.1),
        ("translational velocity (km/h)", |c| c.2),
    ];
    for (p, (title, pick)) in panels.iter().enumerate() {
        let y0 = top + p as f64 * (panel_h + gap);
        let stats: Vec<Option<CellStats>> = cells.iter().map(pick).collect();
        let hi = stats
            .iter()
            .flatten()
            .map(|c| c.max.max(c.truth))
            .fold(1.0_f64, f64::max)
            * 1.1;
        let lo = stats.iter().flatten().map(|c| c.min.min(0.0)).fold(0.0_f64, f64::min);
        let y = |v: f64| y0 + panel_h * (1.0 - (v - lo) / (hi - lo));
        s += &format!(
            "<text x=\"{left}\" y=\"{:.1}\" font-size=\"12\">{title}</text>\n\
             <line x1=\"{left}\" y1=\"{y0:.1}\" x2=\"{left}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            y0 - 8.0,
            y0 + panel_h
        );
        for k in 0..=4 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            s += &format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.0}</text>\n",
                left - 4.0,
                y(v) + 3.0
            );
        }
        for (i, st) in stats.iter().enumerate() {
            let cx = left + slot * (i as f64 + 0.5);
            let Some(c) = st else { continue };
            let (bx, bw) = (cx - slot * 0.3, slot * 0.6);
            s += &format!(
                "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
                 <rect x=\"{bx:.1}\" y=\"{:.1}\" width=\"{bw:.1}\" height=\"{:.1}\" fill=\"#9ecae1\" stroke=\"black\"/>\n\
                 <line x1=\"{bx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#d62728\" stroke-width=\"2\"/>\n\
                 <circle cx=\"{cx:.1}\" cy=\"{:.1}\" r=\"2\" fill=\"black\"/>\n\
                 <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#2ca02c\" stroke-dasharray=\"2,2\"/>\n",
                y(c.min),
                y(c.max),
                y(c.q3),
                (y(c.q1) - y(c.q3)).max(0.5),
                y(c.median),
                bx + bw,
                y(c.median),
                y(c.mean),
                cx - slot * 0.45,
                y(c.truth),
                cx + slot * 0.45,
                y(c.truth),
            );
        }
    }
    let base = top + 2.0 * panel_h + gap + 14.0;
    for (i, l) in labels.iter().enumerate() {
        let cx = left + slot * (i as f64 + 0.5);
        s += &format!(
            "<text x=\"{cx:.1}\" y=\"{base:.1}\" text-anchor=\"end\" transform=\"rotate(-60 {cx:.1} {base:.1})\">{l}</text>\n"
        );
    }
    s += &format!(
        "<text x=\"{left}\" y=\"{:.1}\">cells: km/h / deg/s; box = quartiles, red = median, dot = mean, green = truth</text>\n</svg>\n",
        height - 6.0
    );
    Ok(s)
}
