//! Affine patch autoencoder: each non-overlapping `k×k` patch is flattened,
//! encoded to `n` values and decoded back with shared weights.

use rand::Rng;

use super::loss::Normalization;
use crate::image::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PatchLinear {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub patch: usize,
    pub bottleneck: usize,
}

impl PatchLinear {
    fn dim(&self) -> usize {
        self.patch * self.patch * self.channels
    }

    pub fn param_count(&self) -> usize {
        let (d, n) = (self.dim(), self.bottleneck);
        n * d + n + d * n + d
    }

    /// `(enc_w, enc_b, dec_w, dec_b)` offsets.
    fn offsets(&self) -> [usize; 4] {
        let (d, n) = (self.dim(), self.bottleneck);
        [0, n * d, n * d + n, n * d + n + d * n]
    }

    pub fn init<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let (d, n) = (self.dim(), self.bottleneck);
        let mut params = Vec::with_capacity(self.param_count());
        let enc = 1.0 / (d as f64).sqrt();
        let dec = 1.0 / (n as f64).sqrt();
        params.extend((0..n * d + n).map(|_| rng.random_range(-enc..=enc)));
        params.extend((0..d * n + d).map(|_| rng.random_range(-dec..=dec)));
        params
    }

    fn patches_x(&self) -> usize {
        self.width / self.patch
    }

    fn patches_y(&self) -> usize {
        self.height / self.patch
    }

    fn gather(&self, x: &[f64], px: usize, py: usize, out: &mut [f64]) {
        let (k, c) = (self.patch, self.channels);
        let mut i = 0;
        for dy in 0..k {
            let row = (py * k + dy) * self.width + px * k;
            let start = row * c;
            out[i..i + k * c].copy_from_slice(&x[start..start + k * c]);
            i += k * c;
        }
    }

    fn gather_mask(&self, m: &BinaryMask, px: usize, py: usize, out: &mut [bool]) -> bool {
        let (k, c) = (self.patch, self.channels);
        let mut any = false;
        let mut i = 0;
        for dy in 0..k {
            for dx in 0..k {
                let on = m.get(px * k + dx, py * k + dy);
                any |= on;
                out[i..i + c].fill(on);
                i += c;
            }
        }
        any
    }

    fn scatter(&self, patch: &[f64], px: usize, py: usize, out: &mut [f64]) {
        let (k, c) = (self.patch, self.channels);
        for dy in 0..k {
            let row = (py * k + dy) * self.width + px * k;
            let start = row * c;
            out[start..start + k * c].copy_from_slice(&patch[dy * k * c..(dy + 1) * k * c]);
        }
    }

    fn encode_decode(&self, params: &[f64], input: &[f64], z: &mut [f64], y: &mut [f64]) {
        let [ew, eb, dw, db] = self.offsets();
        let (d, n) = (self.dim(), self.bottleneck);
        for j in 0..n {
            let w = &params[ew + j * d..ew + (j + 1) * d];
            z[j] = params[eb + j] + dot(w, input);
        }
        for i in 0..d {
            let w = &params[dw + i * n..dw + (i + 1) * n];
            y[i] = params[db + i] + dot(w, z);
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let (d, n) = (self.dim(), self.bottleneck);
        let mut out = vec![0.0; x.len()];
        let (mut p, mut z, mut y) = (vec![0.0; d], vec![0.0; n], vec![0.0; d]);
        for py in 0..self.patches_y() {
            for px in 0..self.patches_x() {
                self.gather(x, px, py, &mut p);
                self.encode_decode(params, &p, &mut z, &mut y);
                self.scatter(&y, px, py, &mut out);
            }
        }
        out
    }

    /// Masked loss and its gradient with respect to every parameter. Patches
    /// without masked pixels are skipped.
    pub fn loss_and_gradient(&self, params: &[f64], x: &[f64], m: &BinaryMask, norm: Normalization) -> (f64, Vec<f64>) {
        let [ew, eb, dw, db] = self.offsets();
        let (d, n, c) = (self.dim(), self.bottleneck, self.channels);
        let denom = norm.denominator(m);
        let scale = 2.0 / (denom * c as f64);
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let (mut p, mut z, mut y, mut gy, mut gz) = (vec![0.0; d], vec![0.0; n], vec![0.0; d], vec![0.0; d], vec![0.0; n]);
        let mut pm = vec![false; d];
        for py in 0..self.patches_y() {
            for px in 0..self.patches_x() {
                if !self.gather_mask(m, px, py, &mut pm) {
                    continue;
                }
                self.gather(x, px, py, &mut p);
                self.encode_decode(params, &p, &mut z, &mut y);
                for i in 0..d {
                    if pm[i] {
                        let e = y[i] - p[i];
                        loss += e * e / c as f64;
                        gy[i] = scale * e;
                    } else {
                        gy[i] = 0.0;
                    }
                }
                gz.fill(0.0);
                for i in 0..d {
                    let g = gy[i];
                    if g == 0.0 {
                        continue;
                    }
                    grad[db + i] += g;
                    let row = dw + i * n;
                    for j in 0..n {
                        grad[row + j] += g * z[j];
                        gz[j] += g * params[row + j];
                    }
                }
                for j in 0..n {
                    let g = gz[j];
                    grad[eb + j] += g;
                    let row = ew + j * d;
                    for (gw, &pi) in grad[row..row + d].iter_mut().zip(&p) {
                        *gw += g * pi;
                    }
                }
            }
        }
        (loss / denom, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
