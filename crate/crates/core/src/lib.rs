//! Illumination normalization toolkit.

pub mod evaluation;
pub mod geometry;
pub mod harness;
pub mod gsra;
pub mod image;
pub mod numeric;
pub mod pan;

pub use image::Image;
