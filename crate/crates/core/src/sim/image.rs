use ::image::GrayImage;
use nalgebra::Vector3;
use rayon::prelude::*;

use crate::camera::CameraModel;

use super::{MotionTruth, Plane, Scene, Surface};

/// Rays travelling further than this see a uniform background.
const FAR_M: f64 = 150.0;
const BACKGROUND: f64 = 205.0;
/// Half-width of the painted scene lines.
const LINE_WIDTH_M: f64 = 0.08;

/// Bilinear sample at a sub-pixel position; `None` outside the image.
pub fn sample_bilinear(img: &GrayImage, u: f64, v: f64) -> Option<f64> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    const SLACK: f64 = 1e-9;
    if !(u >= -SLACK && v >= -SLACK && u <= w - 1.0 + SLACK && v <= h - 1.0 + SLACK) {
        return None;
    }
    let u = u.clamp(0.0, w - 1.0);
    let v = v.clamp(0.0, h - 1.0);
    let i0 = (u.floor() as u32).min(img.width().saturating_sub(2));
    let j0 = (v.floor() as u32).min(img.height().saturating_sub(2));
    let i1 = (i0 + 1).min(img.width() - 1);
    let j1 = (j0 + 1).min(img.height() - 1);
    let (fu, fv) = (u - i0 as f64, v - j0 as f64);
    let p = |i: u32, j: u32| img.get_pixel(i, j)[0] as f64;
    let top = p(i0, j0) * (1.0 - fu) + p(i1, j0) * fu;
    let bottom = p(i0, j1) * (1.0 - fu) + p(i1, j1) * fu;
    Some(top * (1.0 - fv) + bottom * fv)
}

fn nearest_hit(planes: &[Plane; 3], origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(Surface, Vector3<f64>)> {
    planes
        .iter()
        .filter_map(|p| p.intersect(origin, dir).map(|s| (s, p.kind)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(s, kind)| (kind, origin + dir * s))
}

fn distance_to_segment(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let d = b - a;
    let s = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

/// Procedural intensity of a scene point.
fn shade(scene: &Scene, surface: Surface, p: &Vector3<f64>) -> f64 {
    let tau = std::f64::consts::TAU;
    let along = scene.config.road_direction().dot(p);
    match surface {
        Surface::Ground => 105.0 + 30.0 * (tau * p.x / 0.9).sin() * (tau * along / 2.1).sin(),
        Surface::Wall(side) => {
            let base = 150.0 + 35.0 * (tau * along / 2.3).sin() * (tau * p.y / 1.7).cos();
            let ink = scene
                .lines
                .iter()
                .filter(|l| l.side == side)
                .map(|l| {
                    let d = distance_to_segment(p, &l.top, &l.bottom) / LINE_WIDTH_M;
                    (-d * d).exp()
                })
                .fold(0.0, f64::max);
            base * (1.0 - 0.75 * ink)
        }
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn render_rows<F>(cam: &CameraModel, f: F) -> GrayImage
where
    F: Fn(u32, u32) -> u8 + Sync,
{
    let (w, h) = (cam.width, cam.height);
    let mut buf = vec![0u8; (w * h) as usize];
    buf.par_chunks_mut(w as usize)
        .enumerate()
        .for_each(|(row, out)| {
            for (col, px) in out.iter_mut().enumerate() {
                *px = f(col as u32, row as u32);
            }
        });
    GrayImage::from_raw(w, h, buf).expect("buffer matches image size")
}

/// Global-shutter view of the scene, ray-cast at readout time 0.
pub fn render_gs_image(scene: &Scene) -> GrayImage {
    let cam = scene.config.camera();
    let planes = scene.config.planes();
    render_rows(&cam, |col, row| {
        let n = cam.normalize((col as f64, row as f64));
        let dir = Vector3::new(n.x, n.y, 1.0);
        match nearest_hit(&planes, &Vector3::zeros(), &dir) {
            Some((surface, p)) if p.norm() < FAR_M => to_u8(shade(scene, surface, &p)),
            _ => to_u8(BACKGROUND),
        }
    })
}

/// Rolling-shutter view synthesized from a global-shutter image.
///
/// Each pixel's ray is cast from the camera pose of its row, intersected with
/// the nearest scene plane, projected into the time-0 camera and sampled
/// bilinearly from `gs_image`. Rays landing outside the source stay black.
pub fn render_rs_image(gs_image: &GrayImage, motion: &MotionTruth, scene: &Scene) -> GrayImage {
    let cam = scene.config.camera();
    let planes = scene.config.planes();
    let (cx, cy) = cam.principal_point;
    let poses: Vec<_> = (0..cam.height).map(|r| motion.pose_at(r as f64)).collect();
    render_rows(&cam, |col, row| {
        let pose = &poses[row as usize];
        let n = cam.normalize((col as f64, row as f64));
        let dir = pose.rotation.transpose() * Vector3::new(n.x, n.y, 1.0);
        let origin = pose.translation;
        // Rays that hit nothing see the background at infinity.
        let p = nearest_hit(&planes, &origin, &dir).map_or(dir, |(_, p)| p);
        if p.z <= 0.0 {
            return 0;
        }
        let u = cx + cam.focal_px * p.x / p.z;
        let v = cy + cam.focal_px * p.y / p.z;
        sample_bilinear(gs_image, u, v).map_or(0, to_u8)
    })
}
