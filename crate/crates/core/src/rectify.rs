//! Forward-mapping rectification, plane boundaries and the displacement metric.
//!
//! Every rolling-shutter pixel is pushed to its global-shutter position with
//! the inverse depth taken as the maximum of the wall and ground branches.
//! Targets are splatted with bilinear weights and holes are filled by linear
//! interpolation along rows, then along columns.

use image::GrayImage;
use rayon::prelude::*;

use crate::camera::{CameraModel, NormalizedPoint};
use crate::error::{Error, Result};
use crate::model::RsModel;
use crate::motion::{compensate_with_inverse_depth, inverse_depth_with_slope};

/// Accumulated splat weight below which a pixel counts as unfilled.
const MIN_WEIGHT: f64 = 1e-6;

/// Sub-pixel target of every source pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardMap {
    pub width: u32,
    pub height: u32,
    pub targets: Vec<(f64, f64)>,
    pub valid: Vec<bool>,
}

impl ForwardMap {
    pub fn identity(width: u32, height: u32) -> Self {
        let targets = (0..height)
            .flat_map(|r| (0..width).map(move |c| (c as f64, r as f64)))
            .collect();
        Self {
            width,
            height,
            targets,
            valid: vec![true; (width * height) as usize],
        }
    }

    pub fn target(&self, col: u32, row: u32) -> Option<(f64, f64)> {
        let i = (row * self.width + col) as usize;
        self.valid[i].then(|| self.targets[i])
    }
}

/// Global-shutter pixel position of a rolling-shutter pixel, using the
/// ground branch when `lambda_ground` is set.
///
/// The offset is added to the input pixel so that a vanishing correction
/// returns the input unchanged.
pub fn compensate_pixel(model: &RsModel, cam: &CameraModel, pixel: (f64, f64)) -> Result<(f64, f64)> {
    compensate_pixel_with_slope(model, cam, pixel, 1.0)
}

fn compensate_pixel_with_slope(
    model: &RsModel,
    cam: &CameraModel,
    pixel: (f64, f64),
    left_slope: f64,
) -> Result<(f64, f64)> {
    let p = cam.normalize(pixel);
    let inv = inverse_depth_with_slope(p, &model.depth, left_slope, true);
    let g = compensate_with_inverse_depth(p, pixel.1, model.alpha(), model.beta(), inv)?;
    let (x, y) = (g.x / g.z, g.y / g.z);
    let out = (
        pixel.0 + cam.focal_px * (x - p.x),
        pixel.1 + cam.focal_px * (y - p.y),
    );
    if out.0.is_finite() && out.1.is_finite() {
        Ok(out)
    } else {
        Err(Error::SingularConfiguration(g.z))
    }
}

pub fn build_forward_map(model: &RsModel, cam: &CameraModel) -> ForwardMap {
    build_forward_map_with_slope(model, cam, 1.0)
}

/// [`build_forward_map`] with an explicit left-plane slope.
pub(crate) fn build_forward_map_with_slope(model: &RsModel, cam: &CameraModel, left_slope: f64) -> ForwardMap {
    let (w, h) = (cam.width, cam.height);
    let rows: Vec<Vec<Option<(f64, f64)>>> = (0..h)
        .into_par_iter()
        .map(|r| {
            (0..w)
                .map(|c| compensate_pixel_with_slope(model, cam, (c as f64, r as f64), left_slope).ok())
                .collect()
        })
        .collect();
    let cells: Vec<Option<(f64, f64)>> = rows.into_iter().flatten().collect();
    ForwardMap {
        width: w,
        height: h,
        valid: cells.iter().map(Option::is_some).collect(),
        targets: cells.iter().map(|c| c.unwrap_or((f64::NAN, f64::NAN))).collect(),
    }
}

/// Forward-warps `img` through `map`.
///
/// Pixels left empty after splatting are filled by linear interpolation
/// between the nearest filled pixels in the same row, then in the same
/// column. Pixels with no filled neighbour on both sides stay 0.
pub fn warp_image(img: &GrayImage, map: &ForwardMap) -> Result<GrayImage> {
    warp_image_masked(img, map).map(|(out, _)| out)
}

/// [`warp_image`] plus the mask of pixels that received a value.
pub fn warp_image_masked(img: &GrayImage, map: &ForwardMap) -> Result<(GrayImage, Vec<bool>)> {
    if img.dimensions() != (map.width, map.height) {
        return Err(Error::LengthMismatch(
            (img.width() * img.height()) as usize,
            map.targets.len(),
        ));
    }
    let (w, h) = (map.width as usize, map.height as usize);
    let mut value = vec![0.0; w * h];
    let mut weight = vec![0.0; w * h];
    // Sequential accumulation keeps the sums independent of thread count.
    for (i, (&(tx, ty), &ok)) in map.targets.iter().zip(&map.valid).enumerate() {
        if !ok {
            continue;
        }
        let v = img.as_raw()[i] as f64;
        let (x0, y0) = (tx.floor(), ty.floor());
        let (fx, fy) = (tx - x0, ty - y0);
        for (dx, dy, wt) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            if wt == 0.0 {
                continue;
            }
            let (x, y) = (x0 + dx as f64, y0 + dy as f64);
            if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
                continue;
            }
            let j = y as usize * w + x as usize;
            value[j] += wt * v;
            weight[j] += wt;
        }
    }
    let mut out: Vec<Option<f64>> = value
        .iter()
        .zip(&weight)
        .map(|(v, wt)| (*wt > MIN_WEIGHT).then(|| v / wt))
        .collect();
    for r in 0..h {
        fill_line(&mut out, r * w, 1, w);
    }
    for c in 0..w {
        fill_line(&mut out, c, w, h);
    }
    let mask = out.iter().map(Option::is_some).collect();
    let pixels = out
        .into_iter()
        .map(|v| v.map_or(0, |v| v.round().clamp(0.0, 255.0) as u8))
        .collect();
    let img = GrayImage::from_raw(map.width, map.height, pixels).expect("buffer matches dimensions");
    Ok((img, mask))
}

/// Linearly interpolates gaps between filled cells along one strided line.
fn fill_line(cells: &mut [Option<f64>], start: usize, stride: usize, len: usize) {
    let mut prev: Option<(usize, f64)> = None;
    for k in 0..len {
        let Some(v) = cells[start + k * stride] else {
            continue;
        };
        if let Some((pk, pv)) = prev {
            for m in pk + 1..k {
                let t = (m - pk) as f64 / (k - pk) as f64;
                cells[start + m * stride] = Some(pv + t * (v - pv));
            }
        }
        prev = Some((k, v));
    }
}

/// Image half-lines where a wall meets the ground, as pixel endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneBoundaries {
    pub left: Option<[(f64, f64); 2]>,
    pub right: Option<[(f64, f64); 2]>,
}

/// Wall-ground boundaries below the horizon: `x = delta - y lambda_ground` on
/// the left and `x = delta + y lambda_ground / lambda` on the right, in
/// normalized coordinates, clipped to the frame.
pub fn plane_boundaries(model: &RsModel, cam: &CameraModel) -> PlaneBoundaries {
    let d = &model.depth;
    let lg = d.lambda_ground;
    let clip = |dxdy: f64| {
        if !(lg > 0.0 && dxdy.is_finite()) {
            return None;
        }
        let origin = cam.denormalize(NormalizedPoint::new(d.delta, 0.0));
        clip_ray(origin, (dxdy, 1.0), cam)
    };
    PlaneBoundaries {
        left: clip(-lg),
        right: if d.lambda_right > 0.0 {
            clip(lg / d.lambda_right)
        } else {
            None
        },
    }
}

/// Part of the ray `origin + s * dir` (s >= 0) inside the pixel frame.
fn clip_ray(origin: (f64, f64), dir: (f64, f64), cam: &CameraModel) -> Option<[(f64, f64); 2]> {
    let (xmax, ymax) = (cam.width as f64 - 1.0, cam.height as f64 - 1.0);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for (o, v, max) in [(origin.0, dir.0, xmax), (origin.1, dir.1, ymax)] {
        if v == 0.0 {
            if o < 0.0 || o > max {
                return None;
            }
            continue;
        }
        let (a, b) = ((0.0 - o) / v, (max - o) / v);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if !(lo < hi) {
        return None;
    }
    let at = |s: f64| (origin.0 + s * dir.0, origin.1 + s * dir.1);
    Some([at(lo), at(hi)])
}

/// Mean endpoint distance in pixels between paired segments.
pub fn displacement_metric(reference: &[[(f64, f64); 2]], compensated: &[[(f64, f64); 2]]) -> Result<f64> {
    if reference.len() != compensated.len() {
        return Err(Error::LengthMismatch(reference.len(), compensated.len()));
    }
    if reference.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = reference
        .iter()
        .zip(compensated)
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(p, q)| (p.0 - q.0).hypot(p.1 - q.1))
        .sum();
    Ok(total / (2 * reference.len()) as f64)
}
