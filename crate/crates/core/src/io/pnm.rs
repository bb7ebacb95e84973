//! Binary PGM (P5) and PPM (P6), 8 bits per sample.

use std::path::Path;

use super::{read_bytes, write_bytes, FormatError};
use crate::image::{BinaryMask, ImageTensor};

/// Raw 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn header(magic: &str, width: usize, height: usize) -> Vec<u8> {
    format!("{magic}\n{width} {height}\n255\n").into_bytes()
}

/// P6 for three channels, P5 for one. Values are quantized to `round(255·v)`.
pub fn encode_image(img: &ImageTensor) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = header(magic, img.width(), img.height());
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

pub fn encode_gray(img: &GrayImage) -> Vec<u8> {
    let mut out = header("P5", img.width, img.height);
    out.extend_from_slice(&img.data);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn token(&mut self) -> Option<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok().filter(|t| !t.is_empty())
    }

    fn line(&self) -> usize {
        1 + self.bytes[..self.pos].iter().filter(|&&b| b == b'\n').count()
    }
}

/// Decodes P5/P6 into `(channels, width, height, samples)`.
pub fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>), FormatError> {
    let mut c = Cursor { bytes, pos: 0 };
    let channels = match c.token() {
        Some("P5") => 1,
        Some("P6") => 3,
        other => return Err(FormatError::parse(path, 1, format!("expected P5 or P6, found {other:?}"))),
    };
    let mut num = |what: &str| -> Result<usize, FormatError> {
        c.skip_space_and_comments();
        let line = c.line();
        let tok = c.token().ok_or_else(|| FormatError::parse(path, line, format!("missing {what}")))?;
        tok.parse::<usize>().map_err(|_| FormatError::parse(path, line, format!("invalid {what} {tok:?}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::parse(path, c.line(), "image size must be positive"));
    }
    if maxval != 255 {
        return Err(FormatError::parse(path, c.line(), format!("only maxval 255 is supported, found {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = c.pos + 1;
    let len = width * height * channels;
    if bytes.len() < start + len {
        return Err(FormatError::parse(path, 0, format!("raster truncated: need {len} bytes")));
    }
    if bytes.len() > start + len {
        return Err(FormatError::parse(path, 0, "trailing bytes after raster"));
    }
    Ok((channels, width, height, bytes[start..].to_vec()))
}

pub fn write_image(path: &Path, img: &ImageTensor) -> Result<(), FormatError> {
    write_bytes(path, &encode_image(img))
}

pub fn read_image(path: &Path) -> Result<ImageTensor, FormatError> {
    let (channels, w, h, raw) = decode_pnm(path, &read_bytes(path)?)?;
    let data = raw.iter().map(|&b| b as f64 / 255.0).collect();
    ImageTensor::new(w, h, channels, data).map_err(|e| FormatError::parse(path, 0, e.to_string()))
}

pub fn write_gray(path: &Path, img: &GrayImage) -> Result<(), FormatError> {
    write_bytes(path, &encode_gray(img))
}

pub fn read_gray(path: &Path) -> Result<GrayImage, FormatError> {
    let (channels, width, height, data) = decode_pnm(path, &read_bytes(path)?)?;
    if channels != 1 {
        return Err(FormatError::parse(path, 1, "expected a grayscale (P5) image"));
    }
    Ok(GrayImage { width, height, data })
}

/// Masks are P5 with 0 (outside) and 255 (inside).
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<(), FormatError> {
    let data = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_gray(path, &GrayImage { width: mask.width(), height: mask.height(), data })
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, FormatError> {
    let g = read_gray(path)?;
    let data = g
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| match v {
            0 => Ok(false),
            255 => Ok(true),
            other => Err(FormatError::parse(path, 0, format!("mask pixel {i} has value {other}; expected 0 or 255"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    BinaryMask::from_vec(g.width, g.height, data).map_err(|e| FormatError::parse(path, 0, e.to_string()))
}
