//! Grayscale slice loading, resizing, and intensity normalization.
//!
//! Readers cover PGM (P2 ASCII and P5 binary, maxval up to 65535) and
//! 8/16-bit grayscale or RGB PNG. Color is reduced to ITU-R 601 luminance;
//! sample values are scaled by the format's declared maximum into [0, 1].

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Row-major grayscale raster with intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "image dimensions must be positive".into(),
            ));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "pixel count {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    /// Copies the raster into a `height x width` matrix.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(self.height, self.width, self.pixels.clone())
            .expect("image dimensions are consistent by construction")
    }
}

/// Loads a PGM or PNG file into a unit-range grayscale image.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut magic = [0u8; 2];
    file.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;

    match &magic {
        b"P2" | b"P5" => {
            let mut rest = Vec::new();
            file.read_to_end(&mut rest).map_err(|e| Error::io(path, e))?;
            load_pgm(path, &magic, &rest)
        }
        [0x89, b'P'] => {
            // Reopen: the png decoder wants the signature too.
            let file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
            load_png(path, file)
        }
        other => Err(Error::Format(format!(
            "{}: unrecognized magic bytes {other:?} (expected PGM or PNG)",
            path.display()
        ))),
    }
}

/// Pulls the next whitespace-delimited ASCII token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(path, "unexpected end of PGM header"));
    }
    Ok(&bytes[start..*pos])
}

fn parse_usize(token: &[u8], what: &str, path: &Path) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, format!("invalid {what} in PGM header")))
}

/// `body` is the file contents after the 2-byte magic.
fn load_pgm(path: &Path, magic: &[u8; 2], body: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let width = parse_usize(next_token(body, &mut pos, path)?, "width", path)?;
    let height = parse_usize(next_token(body, &mut pos, path)?, "height", path)?;
    let maxval = parse_usize(next_token(body, &mut pos, path)?, "maxval", path)?;
    if width == 0 || height == 0 {
        return Err(Error::parse(path, "PGM dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(path, format!("PGM maxval {maxval} out of range")));
    }
    let count = width * height;
    let scale = 1.0 / maxval as f64;

    let pixels = if magic == b"P2" {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = parse_usize(next_token(body, &mut pos, path)?, "sample", path)?;
            if v > maxval {
                return Err(Error::parse(path, format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as f64 * scale);
        }
        pixels
    } else {
        // P5: exactly one whitespace byte separates the header from the raster.
        if pos >= body.len() || !body[pos].is_ascii_whitespace() {
            return Err(Error::parse(path, "missing separator before P5 raster"));
        }
        pos += 1;
        let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
        let need = count * bytes_per_sample;
        let raster = body
            .get(pos..pos + need)
            .ok_or_else(|| Error::parse(path, "P5 raster truncated"))?;
        if bytes_per_sample == 1 {
            raster.iter().map(|&b| b as f64 * scale).collect()
        } else {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
                .collect()
        }
    };
    GrayImage::new(width, height, pixels)
}

fn load_png(path: &Path, reader: impl BufRead + Seek) -> Result<GrayImage> {
    use png::{BitDepth, ColorType};

    let to_err = |e: png::DecodingError| Error::Format(format!("{}: PNG: {e}", path.display()));
    let decoder = png::Decoder::new(reader);
    let mut reader = decoder.read_info().map_err(to_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format(format!("{}: PNG too large", path.display())))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(to_err)?;
    let (width, height) = (info.width as usize, info.height as usize);

    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        other => {
            return Err(Error::Format(format!(
                "{}: unsupported PNG color type {other:?}",
                path.display()
            )))
        }
    };
    // 16-bit PNG samples are big-endian in the output buffer.
    let samples: Vec<f64> = match info.bit_depth {
        BitDepth::Eight => buf.iter().map(|&b| b as f64 / 255.0).collect(),
        BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        other => {
            return Err(Error::Format(format!(
                "{}: unsupported PNG bit depth {other:?}",
                path.display()
            )))
        }
    };
    if samples.len() != width * height * channels {
        return Err(Error::Format(format!(
            "{}: PNG sample count mismatch",
            path.display()
        )));
    }
    let pixels: Vec<f64> = match channels {
        1 => samples,
        2 => samples.chunks_exact(2).map(|px| px[0]).collect(),
        _ => samples
            .chunks_exact(channels)
            .map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2])
            .collect(),
    };
    GrayImage::new(width, height, pixels)
}

/// Bilinear resampling with pixel-center alignment: the source coordinate
/// of output pixel `i` is `(i + 0.5) * src / dst - 0.5`, clamped to the
/// valid range. Output values are convex combinations of inputs.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidArgument(
            "resize target dimensions must be positive".into(),
        ));
    }
    let (src_w, src_h) = (img.width(), img.height());
    let coord = |i: usize, dst: usize, src: usize| -> (usize, usize, f64) {
        let s = ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
        let lo = s.floor() as usize;
        let hi = (lo + 1).min(src - 1);
        (lo, hi, s - lo as f64)
    };
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let (y0, y1, ty) = coord(y, out_h, src_h);
        for x in 0..out_w {
            let (x0, x1, tx) = coord(x, out_w, src_w);
            let top = img.get(x0, y0) * (1.0 - tx) + img.get(x1, y0) * tx;
            let bot = img.get(x0, y1) * (1.0 - tx) + img.get(x1, y1) * tx;
            pixels.push(top * (1.0 - ty) + bot * ty);
        }
    }
    GrayImage::new(out_w, out_h, pixels)
}

/// Affine map of the intensity range onto [0, 1]; constant images map to
/// all zeros.
pub fn normalize_minmax(img: &GrayImage) -> GrayImage {
    let min = img.pixels().iter().cloned().fold(f64::INFINITY, f64::min);
    let max = img.pixels().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pixels = if max > min {
        let inv = 1.0 / (max - min);
        img.pixels().iter().map(|&v| (v - min) * inv).collect()
    } else {
        vec![0.0; img.pixels().len()]
    };
    GrayImage::new(img.width(), img.height(), pixels)
        .expect("dimensions unchanged by normalization")
}
