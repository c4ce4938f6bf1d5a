//! Subcommand implementations. Each builds all of its outputs in memory and
//! writes them only after every stage succeeded.

use std::path::{Path, PathBuf};

use clap::CommandFactory;
use image::{Rgb, RgbImage};
use imageproc::drawing::draw_line_segment_mut;
use rsack_core::ransac::{prune_segments, ransac_ackermann, refit_side_assignment, RansacConfig, SideLabel};
use rsack_core::rectify::{build_forward_map, plane_boundaries, warp_image};
use rsack_core::sim::{make_scene, render_gs_image, render_rs_image, render_segments, MotionTruth, RenderMode, SceneConfig};
use rsack_core::{CameraModel, PlausibilityBounds, SolverKind};
use serde::{Deserialize, Serialize};

use crate::bench::{run_bench, BenchReport};
use crate::cli::{
    BenchArgs, CameraArgs, Cli, ConvertLsdArgs, EstimateArgs, ManualArgs, RectifyArgs, SimulateArgs, SweepArgs,
};
use crate::error::{CliError, Result};
use crate::io::{self, Artifacts, CameraFile, LabelRecord, ModelFile, SegmentRecord, TruthFile};
use crate::manifest::RunManifest;
use crate::sweep::{run_sweep, rows_to_csv, summarize, svg_from_csv, SweepConfig};

fn load_scene(path: Option<&Path>) -> Result<SceneConfig> {
    let cfg = match path {
        Some(p) => io::read_json(p)?,
        None => SceneConfig::default(),
    };
    cfg.validate()
        .map_err(|e| CliError::parse(path.map_or("default scene".into(), |p| p.display().to_string()), e))?;
    Ok(cfg)
}

fn parse_kind(s: &str) -> Result<SolverKind> {
    s.parse().map_err(|e: String| CliError::Usage(e))
}

fn finish(mut files: Artifacts, mut manifest: RunManifest, dir: &Path) -> Result<Vec<PathBuf>> {
    let path = dir.join("manifest.json");
    manifest.outputs = files.paths().iter().map(|p| p.display().to_string()).collect();
    manifest.outputs.push(path.display().to_string());
    files.add(path, io::to_json(&manifest));
    files.commit()
}

pub fn simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let cfg = load_scene(args.config.as_deref())?;
    let mode = if args.second_order {
        RenderMode::SecondOrder
    } else {
        RenderMode::Exact
    };
    let mut manifest = RunManifest::new(
        "simulate",
        Some(args.seed),
        serde_json::json!({"scene": cfg, "deg_s": args.deg_s, "kmh": args.kmh, "mode": mode}),
    );
    if let Some(p) = &args.config {
        manifest.input(p);
    }
    let motion = MotionTruth::for_scene(&cfg, args.deg_s, args.kmh);
    let scene = manifest.time("scene", || make_scene(&cfg, args.seed));
    let rendered = manifest.time("segments", || {
        render_segments(&scene, &motion, cfg.pixel_noise_std, args.seed, mode)
    });
    let (gs, rs) = manifest.time("images", || {
        let gs = render_gs_image(&scene);
        let rs = render_rs_image(&gs, &motion, &scene);
        (gs, rs)
    });
    let camera = cfg.camera();
    let truth = TruthFile {
        seed: args.seed,
        scene: cfg,
        motion,
        model: ModelFile::new(&rendered.truth, true, camera.row_delay, Some(cfg.gauge_length_m())),
    };
    let out = &args.out;
    let mut files = Artifacts::default();
    files.add(out.join("rs.pgm"), io::encode_pgm(&rs)?);
    files.add(out.join("gs.pgm"), io::encode_pgm(&gs)?);
    files.add(out.join("segments.jsonl"), io::segments_to_jsonl(&rendered.segments));
    files.add(
        out.join("gs_segments.jsonl"),
        io::jsonl(
            rendered
                .segments
                .iter()
                .zip(&rendered.gs_endpoints)
                .map(|(s, [a, b])| SegmentRecord::new(s.id, *a, *b)),
        ),
    );
    files.add(
        out.join("labels.jsonl"),
        io::jsonl(rendered.segments.iter().zip(&rendered.labels).map(LabelRecord::from)),
    );
    files.add(out.join("camera.json"), io::to_json(&CameraFile::from(&camera)));
    files.add(out.join("truth.json"), io::to_json(&truth));
    finish(files, manifest, out)
}

fn resolve_camera(args: &CameraArgs, manifest: &mut RunManifest) -> Result<CameraModel> {
    match (&args.camera, args.image_size) {
        (Some(p), _) => {
            manifest.input(p);
            io::read_camera(p)
        }
        (None, Some((w, h))) => Ok(CameraModel::uncalibrated(w, h, 0.0)?),
        (None, None) => Err(CliError::Usage("either --camera or --image-size is required".into())),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentReport {
    pub id: usize,
    pub inlier: bool,
    /// Pixels; null when compensation is singular.
    pub residual_px: f64,
    pub label: SideLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub variant: String,
    pub segments_read: usize,
    pub segments_kept: usize,
    pub best_inlier_count: usize,
    pub iterations_run: usize,
    pub best_iteration: usize,
    pub rejected_samples: usize,
    pub solver_failures: usize,
    pub bounds: PlausibilityBounds,
    pub segments: Vec<SegmentReport>,
}

pub fn estimate(args: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let kind = parse_kind(&args.variant)?;
    let mut manifest = RunManifest::new("estimate", Some(args.seed), serde_json::json!({}));
    let camera = resolve_camera(&args.camera, &mut manifest)?;
    manifest.input(&args.segments);
    let segments = io::read_segments(&args.segments, &camera)?;
    let bounds = if camera.row_delay > 0.0 {
        PlausibilityBounds::vehicle_defaults(&camera, args.gauge_m)
    } else {
        PlausibilityBounds::unbounded()
    };
    let cfg = RansacConfig {
        inlier_threshold_px: args.threshold_px,
        confidence: args.confidence,
        max_iterations: args.max_iterations,
        min_iterations: args.min_iterations,
        min_segment_len_px: args.min_length_px,
        prefilter_algebraic: args.prefilter,
        bounds,
        rng_seed: args.seed,
    };
    cfg.validate()?;
    manifest.config = serde_json::json!({
        "variant": kind.name(), "ransac": cfg, "camera": CameraFile::from(&camera), "gauge_m": args.gauge_m,
    });
    let kept = manifest.time("prune", || prune_segments(&segments, &cfg));
    let est = manifest.time("ransac", || ransac_ackermann(&kept, kind, &camera, &cfg))?;
    let labels = refit_side_assignment(&est.model, &kept, &camera, cfg.inlier_threshold_px);
    let report = EstimateReport {
        variant: kind.name().to_string(),
        segments_read: segments.len(),
        segments_kept: kept.len(),
        best_inlier_count: est.best_inlier_count,
        iterations_run: est.iterations_run,
        best_iteration: est.best_iteration,
        rejected_samples: est.rejected_samples,
        solver_failures: est.solver_failures,
        bounds,
        segments: kept
            .iter()
            .zip(&est.residuals)
            .zip(&est.inlier_mask)
            .zip(&labels)
            .map(|(((s, r), m), l)| SegmentReport {
                id: s.id,
                inlier: *m,
                residual_px: *r,
                label: *l,
            })
            .collect(),
    };
    let model = ModelFile::new(&est.model, est.depth_observable, camera.row_delay, Some(args.gauge_m));
    let mut files = Artifacts::default();
    files.add(args.out.join("model.json"), io::to_json(&model));
    files.add(args.out.join("report.json"), io::to_json(&report));
    finish(files, manifest, &args.out)
}

const LEFT_COLOR: Rgb<u8> = Rgb([220, 30, 30]);
const RIGHT_COLOR: Rgb<u8> = Rgb([30, 80, 230]);
const OUTLIER_COLOR: Rgb<u8> = Rgb([0, 0, 0]);
const BOUNDARY_COLOR: Rgb<u8> = Rgb([0, 200, 0]);

fn point(p: (f64, f64)) -> (f32, f32) {
    (p.0 as f32, p.1 as f32)
}

pub fn rectify(args: &RectifyArgs) -> Result<Vec<PathBuf>> {
    let mut manifest = RunManifest::new("rectify", None, serde_json::json!({}));
    manifest.input(&args.image);
    manifest.input(&args.model);
    let img = io::read_gray(&args.image)?;
    let camera = match &args.camera {
        Some(p) => {
            manifest.input(p);
            io::read_camera(p)?
        }
        None => CameraModel::uncalibrated(img.width(), img.height(), 0.0)?,
    };
    if (camera.width, camera.height) != img.dimensions() {
        return Err(CliError::Usage(format!(
            "camera is {}x{} but the image is {}x{}",
            camera.width,
            camera.height,
            img.width(),
            img.height()
        )));
    }
    let file: ModelFile = io::read_json(&args.model)?;
    let mut model = file.model();
    if let Some(h) = args.height {
        let gauge = args.gauge_m.or(file.gauge_length_m).ok_or_else(|| {
            CliError::parse(args.model.display(), "no gauge_length_m; pass --gauge-m with --height")
        })?;
        if !(h > 0.0 && gauge > 0.0) {
            return Err(CliError::Usage("--height and the gauge length must be positive".into()));
        }
        model.depth.lambda_ground = gauge / h;
    } else if file.lambda_ground.is_none() {
        return Err(CliError::parse(
            args.model.display(),
            "no lambda_ground; pass --height (camera height in metres)",
        ));
    }
    manifest.config = serde_json::json!({
        "model": ModelFile::new(&model, file.depth_observable, camera.row_delay, file.gauge_length_m),
        "camera": CameraFile::from(&camera),
    });
    let warped = manifest.time("warp", || warp_image(&img, &build_forward_map(&model, &camera)))?;
    let bounds = plane_boundaries(&model, &camera);
    let mut overlay = image::DynamicImage::ImageLuma8(img).to_rgb8();
    if let Some(p) = &args.segments {
        manifest.input(p);
        let segs = io::read_segments(p, &camera)?;
        let labels = refit_side_assignment(&model, &segs, &camera, 0.5);
        for (s, l) in segs.iter().zip(labels) {
            let color = match l {
                SideLabel::Left => LEFT_COLOR,
                SideLabel::Right => RIGHT_COLOR,
                SideLabel::Outlier => OUTLIER_COLOR,
            };
            draw_line_segment_mut(&mut overlay, point(s.top), point(s.bottom), color);
        }
    }
    draw_boundaries(&mut overlay, &bounds);
    let mut files = Artifacts::default();
    files.add(args.out.join("rectified.pgm"), io::encode_pgm(&warped)?);
    files.add(args.out.join("overlay.png"), io::encode_png(&overlay)?);
    files.add(
        args.out.join("boundaries.json"),
        io::to_json(&serde_json::json!({"left": bounds.left, "right": bounds.right})),
    );
    finish(files, manifest, &args.out)
}

/// Draws each visible boundary three pixels wide.
fn draw_boundaries(img: &mut RgbImage, b: &rsack_core::rectify::PlaneBoundaries) {
    for [p, q] in [b.left, b.right].into_iter().flatten() {
        for dx in [-1.0, 0.0, 1.0] {
            draw_line_segment_mut(img, point((p.0 + dx, p.1)), point((q.0 + dx, q.1)), BOUNDARY_COLOR);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellSummary {
    cell: usize,
    true_kmh: f64,
    true_deg_s: f64,
    median_kmh: Option<f64>,
    median_deg_s: Option<f64>,
    trials: usize,
    failures: usize,
}

pub fn sweep(args: &SweepArgs) -> Result<Vec<PathBuf>> {
    let mut scene = load_scene(args.config.as_deref())?;
    if let Some(n) = args.noise_px {
        scene.pixel_noise_std = n;
    }
    if let Some(o) = args.outliers {
        scene.outlier_fraction = o;
    }
    parse_kind(&args.variant)?;
    if args.kmh.is_empty() || args.deg_s.is_empty() || args.trials == 0 {
        return Err(CliError::Usage("empty sweep range".into()));
    }
    let cfg = SweepConfig {
        scene,
        kmh: args.kmh.clone(),
        deg_s: args.deg_s.clone(),
        trials: args.trials,
        variant: args.variant.clone(),
        seed: args.seed,
        tilt_deg: args.tilt_deg,
        mode: if args.second_order {
            RenderMode::SecondOrder
        } else {
            RenderMode::Exact
        },
    };
    let mut manifest = RunManifest::new("sweep", Some(args.seed), &cfg);
    if let Some(p) = &args.config {
        manifest.input(p);
    }
    let rows = manifest.time("trials", || run_sweep(&cfg))?;
    let csv = rows_to_csv(&rows)?;
    let svg = svg_from_csv(std::str::from_utf8(&csv).expect("csv is utf-8"))?;
    let summary: Vec<CellSummary> = summarize(&rows)
        .into_iter()
        .map(|(cell, d, k)| {
            let in_cell: Vec<_> = rows.iter().filter(|r| r.cell == cell).collect();
            CellSummary {
                cell,
                true_kmh: in_cell[0].true_kmh,
                true_deg_s: in_cell[0].true_deg_s,
                median_kmh: k.map(|k| k.median),
                median_deg_s: d.map(|d| d.median),
                trials: in_cell.len(),
                failures: in_cell.iter().filter(|r| r.status != "ok").count(),
            }
        })
        .collect();
    let mut files = Artifacts::default();
    files.add(args.out.join("sweep.csv"), csv);
    files.add(args.out.join("sweep.svg"), svg.into_bytes());
    files.add(args.out.join("summary.json"), io::to_json(&summary));
    finish(files, manifest, &args.out)
}

pub fn bench(args: &BenchArgs) -> Result<Vec<BenchReport>> {
    let kinds = args.variant.iter().map(|v| parse_kind(v)).collect::<Result<Vec<_>>>()?;
    let reports: Vec<BenchReport> = kinds
        .into_iter()
        .map(|k| run_bench(k, args.n, args.seed, args.threads.max(1)))
        .collect();
    if let Some(out) = &args.out {
        let mut files = Artifacts::default();
        files.add(out.clone(), io::to_json(&reports));
        files.commit()?;
    }
    Ok(reports)
}

pub fn format_bench(reports: &[BenchReport]) -> String {
    let mut s = String::from("variant  stage    n      mean_ms   median_ms  p95_ms\n");
    for r in reports {
        for (stage, t) in [("minimal", r.minimal), ("ransac", r.ransac)] {
            s += &format!(
                "{:<8} {:<8} {:<6} {:>9.4} {:>10.4} {:>8.4}\n",
                r.variant, stage, t.n, t.mean_ms, t.median_ms, t.p95_ms
            );
        }
    }
    s
}

pub fn convert_lsd(args: &ConvertLsdArgs) -> Result<Vec<PathBuf>> {
    let text = io::read_text(&args.input)?;
    let records = io::convert_lsd(&text, &args.input.display().to_string())?;
    let mut files = Artifacts::default();
    files.add(args.out.clone(), io::jsonl(records));
    files.commit()
}

/// Top-level page followed by one page per subcommand.
pub fn manual_pages() -> Result<Vec<(String, Vec<u8>)>> {
    let cmd = Cli::command();
    let mut pages = Vec::new();
    let mut buf = Vec::new();
    clap_mangen::Man::new(cmd.clone()).render(&mut buf)?;
    pages.push(("rsack.1".to_string(), buf));
    for sub in cmd.get_subcommands() {
        let name = format!("rsack-{}", sub.get_name());
        let mut buf = Vec::new();
        clap_mangen::Man::new(sub.clone()).title(name.clone()).render(&mut buf)?;
        pages.push((format!("{name}.1"), buf));
    }
    Ok(pages)
}

pub fn manual(args: &ManualArgs) -> Result<Vec<PathBuf>> {
    let pages = manual_pages()?;
    match &args.out {
        Some(dir) => {
            let mut files = Artifacts::default();
            for (name, bytes) in pages {
                files.add(dir.join(name), bytes);
            }
            files.commit()
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            for (_, bytes) in pages {
                out.write_all(&bytes)?;
            }
            Ok(Vec::new())
        }
    }
}
