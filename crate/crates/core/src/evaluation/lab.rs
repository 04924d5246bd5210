//! sRGB ⇄ CIELAB (D65) conversion.

use nalgebra::{Matrix3, Vector3};
use std::sync::LazyLock;

static RGB_TO_XYZ: Matrix3<f64> = Matrix3::new(
    0.4124564, 0.3575761, 0.1804375, //
    0.2126729, 0.7151522, 0.0721750, //
    0.0193339, 0.1191920, 0.9503041,
);

static XYZ_TO_RGB: LazyLock<Matrix3<f64>> =
    LazyLock::new(|| RGB_TO_XYZ.try_inverse().expect("sRGB matrix is invertible"));

// Reference white is the image of linear (1, 1, 1), so neutral grays land on a = b = 0.
static WHITE: LazyLock<Vector3<f64>> = LazyLock::new(|| RGB_TO_XYZ * Vector3::repeat(1.0));

const DELTA: f64 = 6.0 / 29.0;

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    if f > DELTA {
        f * f * f
    } else {
        3.0 * DELTA * DELTA * (f - 4.0 / 29.0)
    }
}

/// Gamma-encoded sRGB in `[0, 1]` to `[L, a, b]`.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = Vector3::from(rgb.map(srgb_to_linear));
    let xyz = RGB_TO_XYZ * lin;
    let fx = lab_f(xyz.x / WHITE.x);
    let fy = lab_f(xyz.y / WHITE.y);
    let fz = lab_f(xyz.z / WHITE.z);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// `[L, a, b]` to gamma-encoded sRGB. The result is not clamped.
pub fn lab_to_srgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = Vector3::new(
        WHITE.x * lab_f_inv(fx),
        WHITE.y * lab_f_inv(fy),
        WHITE.z * lab_f_inv(fz),
    );
    let lin = *XYZ_TO_RGB * xyz;
    [lin.x, lin.y, lin.z].map(linear_to_srgb)
}
