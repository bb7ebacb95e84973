//! Image and mask buffers plus resampling.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize, usize), right: (usize, usize, usize) },
    #[error("invalid image shape {width}x{height}x{channels}")]
    InvalidShape { width: usize, height: usize, channels: usize },
    #[error("pixel value {value} at index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: String },
}

/// Row-major, channel-interleaved image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) || data.len() != width * height * channels {
            return Err(ImageError::InvalidShape { width, height, channels });
        }
        if let Some((index, value)) = data.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(ImageError::ValueOutOfRange { index, value: value.to_string() });
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self, ImageError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from arbitrary reals, clamping into `[0, 1]`
    /// (non-finite values become 0).
    pub fn from_clamped(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Result<Self, ImageError> {
        for v in &mut data {
            *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn check_same_shape(&self, other: &ImageTensor) -> Result<(), ImageError> {
        if self.shape() != other.shape() {
            return Err(ImageError::DimensionMismatch { left: self.shape(), right: other.shape() });
        }
        Ok(())
    }

    /// Bilinear resampling with half-pixel centers and edge clamping.
    pub fn resize(&self, width: usize, height: usize) -> ImageTensor {
        resize(self, width, height)
    }
}

/// Per-pixel {0, 1} mask; 1 marks pixels inside the traversed region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![true; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::InvalidShape { width, height, channels: 1 });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Nearest-neighbor resampling; preserves binarity.
    pub fn resize(&self, width: usize, height: usize) -> BinaryMask {
        resize_mask(self, width, height)
    }
}

fn source_coordinate(dst: usize, dst_len: usize, src_len: usize) -> f64 {
    (dst as f64 + 0.5) * (src_len as f64 / dst_len as f64) - 0.5
}

fn bilinear_taps(dst: usize, dst_len: usize, src_len: usize) -> (usize, usize, f64) {
    let s = source_coordinate(dst, dst_len, src_len).clamp(0.0, (src_len - 1) as f64);
    let lo = s.floor() as usize;
    let hi = (lo + 1).min(src_len - 1);
    (lo, hi, s - lo as f64)
}

pub fn resize(x: &ImageTensor, width: usize, height: usize) -> ImageTensor {
    assert!(width > 0 && height > 0, "resize target must be positive");
    if (width, height) == (x.width, x.height) {
        return x.clone();
    }
    let c = x.channels;
    let cols: Vec<_> = (0..width).map(|i| bilinear_taps(i, width, x.width)).collect();
    let mut data = Vec::with_capacity(width * height * c);
    for j in 0..height {
        let (y0, y1, fy) = bilinear_taps(j, height, x.height);
        for &(x0, x1, fx) in &cols {
            for ch in 0..c {
                // a + f·(b − a) keeps constant regions exactly constant
                let top = lerp(x.get(x0, y0, ch), x.get(x1, y0, ch), fx);
                let bottom = lerp(x.get(x0, y1, ch), x.get(x1, y1, ch), fx);
                data.push(lerp(top, bottom, fy).clamp(0.0, 1.0));
            }
        }
    }
    ImageTensor { width, height, channels: c, data }
}

fn lerp(a: f64, b: f64, f: f64) -> f64 {
    if a == b {
        a
    } else {
        a + f * (b - a)
    }
}

pub fn resize_mask(m: &BinaryMask, width: usize, height: usize) -> BinaryMask {
    assert!(width > 0 && height > 0, "resize target must be positive");
    let pick = |dst: usize, dst_len: usize, src_len: usize| {
        (((dst as f64 + 0.5) * src_len as f64 / dst_len as f64).floor() as usize).min(src_len - 1)
    };
    let cols: Vec<usize> = (0..width).map(|i| pick(i, width, m.width)).collect();
    let mut data = Vec::with_capacity(width * height);
    for j in 0..height {
        let sy = pick(j, height, m.height);
        data.extend(cols.iter().map(|&sx| m.get(sx, sy)));
    }
    BinaryMask { width, height, data }
}
