//! Seeded synthetic corpus: smooth color fields with texture, degraded by a
//! global tint and a low-frequency shadow field.
//!
//! Only arithmetic and polynomial interpolation feed the quantized output,
//! so a seed reproduces the same bytes on any platform.

use super::dataset::DatasetPair;
use super::HarnessError;
use crate::image::io::quantize_u8;
use crate::image::save_image;
use crate::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MIN_SIZE: usize = 32;
pub const TINT_RANGE: (f64, f64) = (0.5, 2.0);
pub const SHADOW_RANGE: (f64, f64) = (0.3, 1.0);
/// Reference values stay in this band so that a tint of up to 2 does not clip.
const REFERENCE_RANGE: (f64, f64) = (0.04, 0.5);
const COLOR_CELLS: usize = 4;
const SHADOW_CELLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SynthConfig {
    pub count: usize,
    pub size: usize,
    pub seed: u64,
    /// Skip the shadow field (s ≡ 1), leaving only the global tint.
    pub pure_tint: bool,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.count == 0 {
            return Err(HarnessError::InvalidArgument("count must be at least 1".into()));
        }
        if self.size < MIN_SIZE {
            return Err(HarnessError::InvalidArgument(format!("size must be at least {MIN_SIZE}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowField {
    pub cells: usize,
    /// `(cells + 1)²` row-major lattice values in `[0.3, 1]`.
    pub lattice: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    pub id: String,
    pub tint: [f64; 3],
    /// `None` means s ≡ 1.
    pub shadow: Option<ShadowField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub count: usize,
    pub size: usize,
    pub pure_tint: bool,
    pub pairs: Vec<PairParams>,
}

#[derive(Debug, Clone)]
pub struct SynthPair {
    pub reference: Image,
    pub degraded: Image,
    pub params: PairParams,
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Bilinear interpolation of a lattice with smoothstep weights.
fn lattice_sample(lattice: &[f64], cells: usize, size: usize, y: usize, x: usize) -> f64 {
    let coord = |p: usize| {
        let t = p as f64 * cells as f64 / (size.max(2) - 1) as f64;
        let i = (t as usize).min(cells - 1);
        (i, smoothstep(t - i as f64))
    };
    let (iy, ty) = coord(y);
    let (ix, tx) = coord(x);
    let at = |r: usize, c: usize| lattice[r * (cells + 1) + c];
    let top = at(iy, ix) + (at(iy, ix + 1) - at(iy, ix)) * tx;
    let bottom = at(iy + 1, ix) + (at(iy + 1, ix + 1) - at(iy + 1, ix)) * tx;
    top + (bottom - top) * ty
}

fn lattice(rng: &mut ChaCha8Rng, cells: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..(cells + 1) * (cells + 1)).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

struct Rect {
    y0: usize,
    x0: usize,
    y1: usize,
    x1: usize,
    value: f64,
}

/// Checkerboard plus a few flat rectangles, values in `[0, 1]`.
fn texture(rng: &mut ChaCha8Rng, size: usize) -> Vec<f64> {
    let period = rng.random_range(size / 16..=size / 4).max(2);
    let rects: Vec<Rect> = (0..rng.random_range(3..=6))
        .map(|_| {
            let (y0, x0) = (rng.random_range(0..size), rng.random_range(0..size));
            let (h, w) = (rng.random_range(size / 8..=size / 3), rng.random_range(size / 8..=size / 3));
            Rect {
                y0,
                x0,
                y1: (y0 + h).min(size),
                x1: (x0 + w).min(size),
                value: rng.random::<f64>(),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let mut v = if (y / period + x / period) % 2 == 0 { 0.25 } else { 0.75 };
            for r in &rects {
                if (r.y0..r.y1).contains(&y) && (r.x0..r.x1).contains(&x) {
                    v = r.value;
                }
            }
            out.push(v);
        }
    }
    out
}

fn snap(v: f64) -> f64 {
    f64::from(quantize_u8(v)) / 255.0
}

fn pair_id(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(4);
    format!("{index:0width$}")
}

/// `clamp(reference ⊗ g ⊗ s)`, quantized to 8-bit levels.
pub fn degrade(reference: &Image, tint: [f64; 3], shadow: Option<&ShadowField>) -> Image {
    let (h, w) = (reference.height(), reference.width());
    Image::from_fn(h, w, |y, x| {
        let s = shadow.map_or(1.0, |f| lattice_sample(&f.lattice, f.cells, h.max(w), y, x));
        let px = reference.pixel(y, x);
        [0, 1, 2].map(|c| snap((px[c] * tint[c] * s).clamp(0.0, 1.0)))
    })
    .expect("shape preserved")
}

/// Pair `index` of the corpus for `config`; independent of the other pairs.
pub fn generate_pair(config: &SynthConfig, index: usize) -> SynthPair {
    let size = config.size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);

    let colors: Vec<Vec<f64>> = (0..3).map(|_| lattice(&mut rng, COLOR_CELLS, 0.0, 1.0)).collect();
    let tex = texture(&mut rng, size);
    let tint = [(); 3].map(|_| TINT_RANGE.0 + (TINT_RANGE.1 - TINT_RANGE.0) * rng.random::<f64>());
    let shadow = (!config.pure_tint).then(|| ShadowField {
        cells: SHADOW_CELLS,
        lattice: lattice(&mut rng, SHADOW_CELLS, SHADOW_RANGE.0, SHADOW_RANGE.1),
    });

    let (lo, hi) = REFERENCE_RANGE;
    let reference = Image::from_fn(size, size, |y, x| {
        let t = tex[y * size + x];
        [0, 1, 2].map(|c| {
            let field = lattice_sample(&colors[c], COLOR_CELLS, size, y, x);
            snap(lo + (hi - lo) * (0.6 * field + 0.4 * t))
        })
    })
    .expect("size >= 1");
    let degraded = degrade(&reference, tint, shadow.as_ref());

    SynthPair {
        reference,
        degraded,
        params: PairParams {
            id: pair_id(index, config.count),
            tint,
            shadow,
        },
    }
}

/// Write `out/A/<id>.png` (degraded), `out/B/<id>.png` (reference) and `out/manifest.json`.
pub fn synth_corpus(config: &SynthConfig, out: &Path) -> Result<Vec<DatasetPair>, HarnessError> {
    config.validate()?;
    let (dir_a, dir_b) = (out.join("A"), out.join("B"));
    fs::create_dir_all(&dir_a)?;
    fs::create_dir_all(&dir_b)?;
    let mut pairs = Vec::with_capacity(config.count);
    let mut params = Vec::with_capacity(config.count);
    for index in 0..config.count {
        let pair = generate_pair(config, index);
        let name = format!("{}.png", pair.params.id);
        let (input_path, reference_path) = (dir_a.join(&name), dir_b.join(&name));
        save_image(&pair.degraded, &input_path)?;
        save_image(&pair.reference, &reference_path)?;
        pairs.push(DatasetPair {
            id: pair.params.id.clone(),
            input_path,
            reference_path,
        });
        params.push(pair.params);
    }
    let manifest = Manifest {
        seed: config.seed,
        count: config.count,
        size: config.size,
        pure_tint: config.pure_tint,
        pairs: params,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(out.join("manifest.json"), json)?;
    Ok(pairs)
}
