//! Solver and pipeline timings.

use std::time::Instant;

use rsack_core::ransac::{prune_segments, ransac_ackermann, RansacConfig};
use rsack_core::sim::{make_scene, minimal_instance, render_segments, MinimalInstance, MotionTruth, RenderMode, SceneConfig};
use rsack_core::solvers::{one_line_candidates, solve_3la, solve_4la};
use rsack_core::{CameraModel, PlaneSide, PlausibilityBounds, SolverKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub n: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

impl TimingStats {
    pub fn from_ms(mut samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "no timing samples");
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let at = |q: f64| samples[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Self {
            n,
            mean_ms: samples.iter().sum::<f64>() / n as f64,
            median_ms: at(0.5),
            p95_ms: at(0.95),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub variant: String,
    pub minimal: TimingStats,
    pub ransac: TimingStats,
    pub ransac_threads: usize,
}

fn bench_bounds() -> PlausibilityBounds {
    let c = SceneConfig::default();
    PlausibilityBounds::vehicle_defaults(&c.camera(), c.gauge_length_m())
}

fn solve_once(kind: SolverKind, inst: &MinimalInstance, bounds: &PlausibilityBounds) -> usize {
    match kind {
        SolverKind::FourLine => solve_4la([&inst.left[0], &inst.left[1], &inst.left[2]], &inst.right[0], bounds)
            .map_or(0, |c| c.len()),
        SolverKind::ThreeLine => solve_3la([&inst.left[0], &inst.left[1]], &inst.right[0], PlaneSide::Left, bounds)
            .map_or(0, |c| c.len()),
        SolverKind::OneLine => one_line_candidates(&inst.left[0], bounds).len(),
    }
}

/// Times `n` minimal-solver calls on distinct random instances.
pub fn bench_minimal(kind: SolverKind, n: usize, seed: u64) -> TimingStats {
    let bounds = bench_bounds();
    let instances: Vec<MinimalInstance> = (seed..)
        .filter_map(|s| minimal_instance(kind, s, &bounds))
        .take(n.max(1))
        .collect();
    let samples = instances
        .iter()
        .map(|inst| {
            let t = Instant::now();
            std::hint::black_box(solve_once(kind, inst, &bounds));
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    TimingStats::from_ms(samples)
}

/// Scene used for full-pipeline timings: 520 x 360 frame, 20% outliers,
/// 0.3 px noise.
pub fn bench_scene() -> SceneConfig {
    let mut cfg = SceneConfig {
        outlier_fraction: 0.2,
        pixel_noise_std: 0.3,
        ..SceneConfig::default()
    };
    let f = cfg.image.focal_px * 520.0 / 640.0;
    cfg.image = CameraModel::centered(f, 520, 360, 0.0).expect("valid bench camera");
    cfg
}

/// Times `n` full estimates (pruning plus RANSAC) on the current rayon pool.
pub fn bench_ransac(kind: SolverKind, n: usize, seed: u64) -> TimingStats {
    let cfg = bench_scene();
    let camera = cfg.camera();
    let mut rc = RansacConfig::new(PlausibilityBounds::vehicle_defaults(&camera, cfg.gauge_length_m()));
    let motion = MotionTruth::for_scene(&cfg, 40.0, 60.0);
    let samples = (0..n.max(1) as u64)
        .map(|i| {
            let s = seed + i;
            let r = render_segments(&make_scene(&cfg, s), &motion, cfg.pixel_noise_std, s, RenderMode::Exact);
            rc.rng_seed = s;
            let t = Instant::now();
            let pruned = prune_segments(&r.segments, &rc);
            let _ = std::hint::black_box(ransac_ackermann(&pruned, kind, &camera, &rc));
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    TimingStats::from_ms(samples)
}

/// Minimal and full-pipeline timings, the latter on a pool of `threads`.
pub fn run_bench(kind: SolverKind, n: usize, seed: u64, threads: usize) -> BenchReport {
    let minimal = bench_minimal(kind, n, seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let ransac = pool.install(|| bench_ransac(kind, n, seed));
    BenchReport {
        variant: kind.name().to_string(),
        minimal,
        ransac,
        ransac_threads: threads,
    }
}
