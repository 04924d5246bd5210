//! Depth maps to camera-facing surface normals.
//!
//! Intrinsics come from a horizontal field of view, depth is unprojected
//! with a pinhole model, and normals are the cross product of the two image
//! tangents of the resulting point cloud.

use crate::image::io::read_raw;
use crate::image::{save_image, ImageError};
use crate::Image;
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_FOV_DEG: f64 = 60.0;
/// Cross products shorter than this are treated as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;
const NORMALIZE_EPS: f64 = 1e-20;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("field of view must lie in (0, 180) degrees, got {0}")]
    InvalidFov(f64),
    #[error("invalid dimensions {height}x{width}")]
    InvalidDimensions { height: usize, width: usize },
    #[error("depth map has no positive depth")]
    NonPositiveDepth,
    #[error("non-finite depth at index {0}")]
    NonFiniteDepth(usize),
    #[error("need at least 2x2 pixels for gradients, got {height}x{width}")]
    ImageTooSmall { height: usize, width: usize },
    #[error("depth image must be single-channel, got {0} channels")]
    NotGrayscale(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DepthMap {
    /// Row-major depths. Non-positive values are allowed and flagged at unprojection.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self, GeometryError> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(GeometryError::InvalidDimensions { height, width });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteDepth(i));
        }
        Ok(Self { height, width, values })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, GeometryError> {
        let values = (0..height).flat_map(|y| (0..width).map(move |x| (y, x))).map(|(y, x)| f(y, x)).collect();
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
}

pub fn intrinsics_from_fov(width: usize, height: usize, fov_deg: f64) -> Result<CameraIntrinsics, GeometryError> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(GeometryError::InvalidFov(fov_deg));
    }
    if width == 0 || height == 0 {
        return Err(GeometryError::InvalidDimensions { height, width });
    }
    let w = width as f64;
    Ok(CameraIntrinsics {
        f: w / (2.0 * (fov_deg.to_radians() / 2.0).tan()),
        cx: (w - 1.0) / 2.0,
        cy: (height as f64 - 1.0) / 2.0,
    })
}

/// Per-pixel camera-space points with a validity mask for non-positive depth.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub height: usize,
    pub width: usize,
    pub points: Vec<[f64; 3]>,
    pub valid: Vec<bool>,
}

impl PointCloud {
    pub fn point(&self, y: usize, x: usize) -> [f64; 3] {
        self.points[y * self.width + x]
    }

    pub fn is_valid(&self, y: usize, x: usize) -> bool {
        self.valid[y * self.width + x]
    }
}

/// `((x − c_x)·z/f, (y − c_y)·z/f, z)` per pixel.
///
/// Pixels with `z ≤ 0` are marked invalid and their point set to zero.
/// Fails only when no pixel has positive depth.
pub fn unproject_depth(depth: &DepthMap, k: &CameraIntrinsics) -> Result<PointCloud, GeometryError> {
    let w = depth.width;
    let mut points = Vec::with_capacity(depth.values.len());
    let mut valid = Vec::with_capacity(depth.values.len());
    for (i, &z) in depth.values.iter().enumerate() {
        let (y, x) = ((i / w) as f64, (i % w) as f64);
        if z > 0.0 {
            points.push([(x - k.cx) * z / k.f, (y - k.cy) * z / k.f, z]);
            valid.push(true);
        } else {
            points.push([0.0; 3]);
            valid.push(false);
        }
    }
    if !valid.iter().any(|&v| v) {
        return Err(GeometryError::NonPositiveDepth);
    }
    Ok(PointCloud {
        height: depth.height,
        width: depth.width,
        points,
        valid,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub height: usize,
    pub width: usize,
    pub vectors: Vec<[f64; 3]>,
}

impl NormalMap {
    pub fn get(&self, y: usize, x: usize) -> [f64; 3] {
        self.vectors[y * self.width + x]
    }

    /// `(n + 1) / 2` as an RGB image.
    pub fn encode(&self) -> Image {
        let rgb: Vec<f64> = self.vectors.iter().flat_map(|n| n.map(|v| (v + 1.0) / 2.0)).collect();
        Image::from_interleaved(self.height, self.width, &rgb).expect("shape matches")
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Derivative along one axis: central when both neighbours are valid,
/// one-sided when only one is, `None` when the pixel is isolated.
fn tangent(
    cloud: &PointCloud,
    here: usize,
    prev: Option<usize>,
    next: Option<usize>,
) -> Option<[f64; 3]> {
    let ok = |i: Option<usize>| i.filter(|&i| cloud.valid[i]);
    let p = cloud.points[here];
    match (ok(prev), ok(next)) {
        (Some(a), Some(b)) => Some(sub(cloud.points[b], cloud.points[a]).map(|v| v / 2.0)),
        (None, Some(b)) => Some(sub(cloud.points[b], p)),
        (Some(a), None) => Some(sub(p, cloud.points[a])),
        (None, None) => None,
    }
}

/// Unit normals `t_u × t_v`, flipped so that `z < 0`. Invalid and degenerate pixels get zero.
pub fn normals_from_points(cloud: &PointCloud) -> Result<NormalMap, GeometryError> {
    let (h, w) = (cloud.height, cloud.width);
    if h < 2 || w < 2 {
        return Err(GeometryError::ImageTooSmall { height: h, width: w });
    }
    let mut vectors = vec![[0.0; 3]; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !cloud.valid[i] {
                continue;
            }
            let left = (x > 0).then(|| i - 1);
            let right = (x + 1 < w).then_some(i + 1);
            let up = (y > 0).then(|| i - w);
            let down = (y + 1 < h).then_some(i + w);
            let (Some(tu), Some(tv)) = (tangent(cloud, i, left, right), tangent(cloud, i, up, down)) else {
                continue;
            };
            let n = cross(tu, tv);
            let len = norm(n);
            if len < DEGENERATE_NORM {
                continue;
            }
            let sign = if n[2] > 0.0 { -1.0 } else { 1.0 };
            vectors[i] = n.map(|v| sign * v / len);
        }
    }
    Ok(NormalMap { height: h, width: w, vectors })
}

/// Rescale `[0, 1]` codes to `[−1, 1]` and divide by `‖·‖ + 1e-20`.
pub fn normalize_normals(raw: &Image) -> NormalMap {
    let vectors = raw
        .to_interleaved()
        .chunks_exact(3)
        .map(|px| {
            let r = [2.0 * px[0] - 1.0, 2.0 * px[1] - 1.0, 2.0 * px[2] - 1.0];
            let len = norm(r) + NORMALIZE_EPS;
            r.map(|v| v / len)
        })
        .collect();
    NormalMap {
        height: raw.height(),
        width: raw.width(),
        vectors,
    }
}

pub fn depth_to_normals(depth: &DepthMap, fov_deg: f64) -> Result<NormalMap, GeometryError> {
    let k = intrinsics_from_fov(depth.width, depth.height, fov_deg)?;
    normals_from_points(&unproject_depth(depth, &k)?)
}

/// Read a single-channel PNG and scale codes to `(0, 1]` by the format maximum.
pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap, GeometryError> {
    let raw = read_raw(path.as_ref())?;
    if raw.channels != 1 {
        return Err(GeometryError::NotGrayscale(raw.channels));
    }
    let scale = f64::from(raw.max_code);
    let values = raw.samples.iter().map(|&s| f64::from(s) / scale).collect();
    DepthMap::new(raw.height, raw.width, values)
}

/// Depth PNG in, `(n + 1)/2`-encoded 8-bit RGB normal map out.
pub fn depth_file_to_normal_file(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    fov_deg: f64,
) -> Result<NormalMap, GeometryError> {
    let depth = load_depth(input)?;
    let normals = depth_to_normals(&depth, fov_deg)?;
    save_image(&normals.encode(), output)?;
    Ok(normals)
}
