use serde::{Deserialize, Serialize};

/// Procedural color: `color · (1 + contrast · (2n − 1))` where `n ∈ [0, 1]`
/// is fractal value noise with base wavelength `scale` meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureSpec {
    pub color: [f64; 3],
    pub contrast: f64,
    pub scale: f64,
    #[serde(default = "default_octaves")]
    pub octaves: u32,
}

fn default_octaves() -> u32 {
    3
}

impl TextureSpec {
    /// Brown, low contrast, large features.
    pub fn ground() -> Self {
        Self { color: [0.56, 0.45, 0.32], contrast: 0.12, scale: 2.0, octaves: 3 }
    }

    /// Green, high contrast, fine features.
    pub fn vegetation() -> Self {
        Self { color: [0.22, 0.52, 0.16], contrast: 0.6, scale: 0.15, octaves: 3 }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err("color components must lie in [0, 1]".into());
        }
        if !(self.contrast >= 0.0 && self.contrast.is_finite()) {
            return Err("contrast must be non-negative".into());
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err("scale must be positive".into());
        }
        if self.octaves == 0 || self.octaves > 8 {
            return Err("octaves must be in 1..=8".into());
        }
        Ok(())
    }

    pub fn sample(&self, seed: u64, p: [f64; 3]) -> [f64; 3] {
        let n = fractal_noise(seed, p, self.scale, self.octaves);
        let k = 1.0 + self.contrast * (2.0 * n - 1.0);
        self.color.map(|c| (c * k).clamp(0.0, 1.0))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(seed: u64, x: i64, y: i64, z: i64) -> f64 {
    let h = splitmix(seed ^ splitmix(x as u64 ^ splitmix(y as u64 ^ splitmix(z as u64))));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Trilinear value noise in [0, 1] with unit lattice spacing.
pub fn value_noise(seed: u64, p: [f64; 3]) -> f64 {
    let f = p.map(f64::floor);
    let i = f.map(|v| v as i64);
    let t = [smooth(p[0] - f[0]), smooth(p[1] - f[1]), smooth(p[2] - f[2])];
    let mut acc = 0.0;
    for corner in 0..8u8 {
        let d = [(corner & 1) as i64, ((corner >> 1) & 1) as i64, ((corner >> 2) & 1) as i64];
        let w: f64 = (0..3).map(|k| if d[k] == 1 { t[k] } else { 1.0 - t[k] }).product();
        acc += w * lattice(seed, i[0] + d[0], i[1] + d[1], i[2] + d[2]);
    }
    acc
}

/// Octave sum with halving amplitude, normalized back to [0, 1].
pub fn fractal_noise(seed: u64, p: [f64; 3], scale: f64, octaves: u32) -> f64 {
    let mut sum = 0.0;
    let mut norm = 0.0;
    let mut amp = 1.0;
    let mut freq = 1.0 / scale;
    for o in 0..octaves {
        sum += amp * value_noise(seed.wrapping_add(o as u64 * 0x1000_0001), p.map(|v| v * freq));
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_bounded_and_continuous() {
        for i in 0..500 {
            let p = [i as f64 * 0.173, i as f64 * -0.091, (i % 7) as f64 * 0.31];
            let n = fractal_noise(3, p, 0.7, 4);
            assert!((0.0..=1.0).contains(&n));
            let q = [p[0] + 1e-7, p[1], p[2]];
            assert!((fractal_noise(3, q, 0.7, 4) - n).abs() < 1e-4);
        }
        // lattice points carry their hash value exactly
        assert_eq!(value_noise(9, [2.0, -3.0, 0.0]), lattice(9, 2, -3, 0));
    }

    #[test]
    fn seeds_change_the_pattern() {
        let p = [0.3, 0.4, 0.5];
        assert_ne!(value_noise(1, p), value_noise(2, p));
        assert_eq!(value_noise(1, p), value_noise(1, p));
    }

    #[test]
    fn vegetation_varies_more_than_ground() {
        let spread = |t: &TextureSpec| {
            let g: Vec<f64> = (0..400).map(|i| t.sample(5, [i as f64 * 0.05, 0.0, 0.0])[1]).collect();
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / g.len() as f64
        };
        assert!(spread(&TextureSpec::vegetation()) > 4.0 * spread(&TextureSpec::ground()));
    }
}
