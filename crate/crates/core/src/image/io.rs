//! PNG (8/16-bit RGB) and binary PPM (P6) reading and writing.
//!
//! Stored code values are divided by the format's maximum code value on load.
//! No gamma decoding is applied. Writers clamp to `[0, 1]` and quantize to
//! 8 bits with round-half-up.

use super::{Image, ImageError, CHANNELS};
use std::fs;
use std::io::{Cursor, Write};
use std::path::Path;

const PNG_MAGIC: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Decoded sample planes of a PNG or PPM file, before scaling.
#[derive(Debug, Clone)]
pub struct RawRaster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Largest representable code value (255 or 65535 for PNG, maxval for PPM).
    pub max_code: u16,
    /// Interleaved samples, row-major.
    pub samples: Vec<u16>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, ImageError> {
    match fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(ImageError::FileNotFound(path.to_path_buf()))
        }
        Err(e) => Err(ImageError::Io(e)),
    }
}

/// Decode a PNG or P6 PPM file into raw integer samples.
pub fn read_raw(path: &Path) -> Result<RawRaster, ImageError> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(&bytes)
    } else {
        Err(ImageError::UnsupportedFormat(format!(
            "{}: unknown magic bytes",
            path.display()
        )))
    }
}

/// Read only the header of a PNG or PPM file and return `(height, width)`.
pub fn probe_dimensions(path: &Path) -> Result<(usize, usize), ImageError> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(PNG_MAGIC) {
        let decoder = png::Decoder::new(Cursor::new(bytes));
        let reader = decoder.read_info().map_err(png_err)?;
        let info = reader.info();
        Ok((info.height as usize, info.width as usize))
    } else if bytes.starts_with(b"P6") {
        let header = parse_ppm_header(&bytes)?;
        Ok((header.height, header.width))
    } else {
        Err(ImageError::UnsupportedFormat(format!(
            "{}: unknown magic bytes",
            path.display()
        )))
    }
}

fn png_err(e: png::DecodingError) -> ImageError {
    match e {
        png::DecodingError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            ImageError::CorruptData(format!("truncated PNG: {io}"))
        }
        png::DecodingError::IoError(io) => ImageError::Io(io),
        png::DecodingError::Format(f) => ImageError::CorruptData(f.to_string()),
        other => ImageError::UnsupportedFormat(other.to_string()),
    }
}

fn decode_png(bytes: Vec<u8>) -> Result<RawRaster, ImageError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let (color, depth) = reader.output_color_type();
    let channels = match color {
        png::ColorType::Rgb => 3,
        png::ColorType::Grayscale => 1,
        other => {
            return Err(ImageError::UnsupportedFormat(format!(
                "PNG color type {other:?} is not supported"
            )))
        }
    };
    let max_code = match depth {
        png::BitDepth::Eight => u8::MAX as u16,
        png::BitDepth::Sixteen => u16::MAX,
        other => {
            return Err(ImageError::UnsupportedFormat(format!(
                "PNG bit depth {other:?} is not supported"
            )))
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::CorruptData("PNG output size overflows".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let n = width * height * channels;
    let samples = if max_code == u16::MAX {
        let mut out = Vec::with_capacity(n);
        for row in buf.chunks(info.line_size).take(height) {
            out.extend(
                row[..width * channels * 2]
                    .chunks_exact(2)
                    .map(|b| u16::from_be_bytes([b[0], b[1]])),
            );
        }
        out
    } else {
        let mut out = Vec::with_capacity(n);
        for row in buf.chunks(info.line_size).take(height) {
            out.extend(row[..width * channels].iter().map(|&b| b as u16));
        }
        out
    };
    Ok(RawRaster {
        width,
        height,
        channels,
        max_code,
        samples,
    })
}

struct PpmHeader {
    width: usize,
    height: usize,
    maxval: u16,
    data_offset: usize,
}

fn parse_ppm_header(bytes: &[u8]) -> Result<PpmHeader, ImageError> {
    // "P6" <ws> width <ws> height <ws> maxval <single ws> data; '#' starts a comment.
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(ImageError::CorruptData("truncated PPM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::CorruptData("malformed PPM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::CorruptData("PPM header value out of range".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ImageError::CorruptData("truncated PPM header".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(ImageError::InvalidDimensions { height, width });
    }
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(ImageError::UnsupportedFormat(format!("PPM maxval {maxval}")));
    }
    Ok(PpmHeader {
        width,
        height,
        maxval: maxval as u16,
        data_offset: pos + 1,
    })
}

fn decode_ppm(bytes: &[u8]) -> Result<RawRaster, ImageError> {
    let header = parse_ppm_header(bytes)?;
    let n = header.width * header.height * CHANNELS;
    let payload = &bytes[header.data_offset..];
    let samples: Vec<u16> = if header.maxval > 255 {
        if payload.len() < 2 * n {
            return Err(ImageError::CorruptData(format!(
                "PPM payload has {} bytes, expected {}",
                payload.len(),
                2 * n
            )));
        }
        payload[..2 * n]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    } else {
        if payload.len() < n {
            return Err(ImageError::CorruptData(format!(
                "PPM payload has {} bytes, expected {n}",
                payload.len()
            )));
        }
        payload[..n].iter().map(|&b| b as u16).collect()
    };
    if let Some(&bad) = samples.iter().find(|&&s| s > header.maxval) {
        return Err(ImageError::CorruptData(format!(
            "sample {bad} exceeds maxval {}",
            header.maxval
        )));
    }
    Ok(RawRaster {
        width: header.width,
        height: header.height,
        channels: CHANNELS,
        max_code: header.maxval,
        samples,
    })
}

/// Load a 3-channel PNG (8 or 16 bit) or P6 PPM into `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image, ImageError> {
    let raw = read_raw(path.as_ref())?;
    if raw.channels != CHANNELS {
        return Err(ImageError::UnsupportedFormat(format!(
            "{}: expected 3 channels, found {}",
            path.as_ref().display(),
            raw.channels
        )));
    }
    let scale = f64::from(raw.max_code);
    let rgb: Vec<f64> = raw.samples.iter().map(|&s| f64::from(s) / scale).collect();
    Image::from_interleaved(raw.height, raw.width, &rgb)
}

/// Quantize a `[0, 1]` value to an 8-bit code, clamping out-of-range input.
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn encode_u8(image: &Image) -> Vec<u8> {
    image.to_interleaved().into_iter().map(quantize_u8).collect()
}

/// Write an 8-bit image. `.ppm` selects binary PPM, anything else PNG.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    let is_ppm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    let bytes = if is_ppm {
        encode_ppm(image)
    } else {
        encode_png(image.width(), image.height(), png::ColorType::Rgb, png::BitDepth::Eight, &encode_u8(image))?
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// `P6\n<w> <h>\n255\n` followed by row-major RGB bytes.
pub fn encode_ppm(image: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(image.pixel_count() * 3 + 32);
    write!(out, "P6\n{} {}\n255\n", image.width(), image.height()).expect("write to Vec");
    out.extend(encode_u8(image));
    out
}

/// Encode raw samples as PNG. For 16-bit depth `data` holds big-endian pairs.
pub fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder
            .write_header()
            .map_err(|e| ImageError::Io(std::io::Error::other(e)))?;
        writer
            .write_image_data(data)
            .map_err(|e| ImageError::Io(std::io::Error::other(e)))?;
        writer
            .finish()
            .map_err(|e| ImageError::Io(std::io::Error::other(e)))?;
    }
    Ok(out)
}

/// Write a single-channel 16-bit PNG from `[0, 1]` values (row-major).
pub fn save_gray16(values: &[f64], width: usize, height: usize, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let data: Vec<u8> = values
        .iter()
        .flat_map(|&v| ((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes())
        .collect();
    let bytes = encode_png(width, height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &data)?;
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn white_ppm_loads_as_ones() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("w.ppm");
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend([255u8; 12]);
        fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!((img.height(), img.width()), (2, 2));
        assert!(img.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ppm_pixel_scaling() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("p.ppm");
        let mut bytes = b"P6\n# comment\n1 1\n255\n".to_vec();
        bytes.extend([128u8, 64, 0]);
        fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [128.0 / 255.0, 64.0 / 255.0, 0.0]);
    }

    #[test]
    fn sixteen_bit_ppm() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("p16.ppm");
        let mut bytes = b"P6 1 1 65535\n".to_vec();
        bytes.extend([0xff, 0xff, 0x80, 0x00, 0x00, 0x00]);
        fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 32768.0 / 65535.0, 0.0]);
    }

    #[test]
    fn truncated_ppm_is_corrupt() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("t.ppm");
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend([0u8; 7]);
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_image(&p), Err(ImageError::CorruptData(_))));
    }

    #[test]
    fn unknown_magic_and_missing_file() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("x.bin");
        fs::write(&p, b"GIF89a....").unwrap();
        assert!(matches!(load_image(&p), Err(ImageError::UnsupportedFormat(_))));
        assert!(matches!(
            load_image(dir.path().join("nope.png")),
            Err(ImageError::FileNotFound(_))
        ));
    }

    #[test]
    fn grayscale_png_is_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("g.png");
        save_gray16(&[0.5; 4], 2, 2, &p).unwrap();
        assert!(matches!(load_image(&p), Err(ImageError::UnsupportedFormat(_))));
    }

    #[test]
    fn truncated_png_is_corrupt() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("t.png");
        save_image(&Image::filled(8, 8, 0.3).unwrap(), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 20]).unwrap();
        assert!(load_image(&p).is_err());
    }

    #[test]
    fn sixteen_bit_png_loads() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rgb16.png");
        let data: Vec<u8> = [65535u16, 0, 1000].iter().flat_map(|v| v.to_be_bytes()).collect();
        let bytes = encode_png(1, 1, png::ColorType::Rgb, png::BitDepth::Sixteen, &data).unwrap();
        fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 0.0, 1000.0 / 65535.0]);
    }

    #[test]
    fn zeros_round_trip_png_and_ppm() {
        let dir = tempdir().unwrap();
        let img = Image::filled(4, 4, 0.0).unwrap();
        for name in ["z.png", "z.ppm"] {
            let p = dir.path().join(name);
            save_image(&img, &p).unwrap();
            assert_eq!(load_image(&p).unwrap(), img);
        }
    }

    #[test]
    fn save_clamps_out_of_range() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.ppm");
        let img = Image::from_interleaved(1, 1, &[1.5, -0.2, 0.5]).unwrap();
        save_image(&img, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..11], b"P6\n1 1\n255\n");
        assert_eq!(&bytes[11..], &[255, 0, 128]);
    }

    #[test]
    fn save_to_missing_directory_fails() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("no/such/dir/x.png");
        assert!(matches!(
            save_image(&Image::filled(1, 1, 0.0).unwrap(), p),
            Err(ImageError::Io(_))
        ));
    }

    #[test]
    fn probe_reads_header_only() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("d.png");
        save_image(&Image::filled(3, 7, 0.2).unwrap(), &p).unwrap();
        assert_eq!(probe_dimensions(&p).unwrap(), (3, 7));
        let q = dir.path().join("d.ppm");
        save_image(&Image::filled(5, 2, 0.2).unwrap(), &q).unwrap();
        assert_eq!(probe_dimensions(&q).unwrap(), (5, 2));
    }
}
