//! Convolutional autoencoder: three stride-2 convolutions, a dense
//! bottleneck, and mirrored transposed convolutions. Hidden activations are
//! tanh; the bottleneck and the output layer are linear.
//!
//! Every convolution uses a 4×4 kernel, stride 2 and padding 1, so each
//! layer exactly halves (or doubles) the spatial size.

use rand::Rng;

use super::loss::Normalization;
use crate::image::BinaryMask;

const K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Shape {
    c: usize,
    h: usize,
    w: usize,
}

impl Shape {
    fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    fn half(&self, c: usize) -> Shape {
        Shape { c, h: self.h / 2, w: self.w / 2 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Conv {
    input: Shape,
    output: Shape,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    inputs: usize,
    outputs: usize,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SmallConv {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub hidden: [usize; 3],
    pub bottleneck: usize,
}

struct Layout {
    enc: [Conv; 3],
    down: Dense,
    up: Dense,
    dec: [Conv; 3],
    total: usize,
}

/// Every intermediate value of one forward pass.
struct Activations {
    a0: Vec<f64>,
    h: [Vec<f64>; 3],
    z: Vec<f64>,
    u: Vec<f64>,
    d: [Vec<f64>; 2],
    out: Vec<f64>,
}

impl SmallConv {
    fn layout(&self) -> Layout {
        let s0 = Shape { c: self.channels, h: self.height, w: self.width };
        let s1 = s0.half(self.hidden[0]);
        let s2 = s1.half(self.hidden[1]);
        let s3 = s2.half(self.hidden[2]);
        let mut offset = 0;
        let conv = |input: Shape, output: Shape, offset: &mut usize| {
            let weight = *offset;
            let bias = weight + input.c * output.c * K * K;
            *offset = bias + output.c;
            Conv { input, output, weight, bias }
        };
        let e1 = conv(s0, s1, &mut offset);
        let e2 = conv(s1, s2, &mut offset);
        let e3 = conv(s2, s3, &mut offset);
        let dense = |inputs: usize, outputs: usize, offset: &mut usize| {
            let weight = *offset;
            let bias = weight + inputs * outputs;
            *offset = bias + outputs;
            Dense { inputs, outputs, weight, bias }
        };
        let down = dense(s3.len(), self.bottleneck, &mut offset);
        let up = dense(self.bottleneck, s3.len(), &mut offset);
        // transposed layers: input is the small side
        let d3 = conv(s3, s2, &mut offset);
        let d2 = conv(s2, s1, &mut offset);
        let d1 = conv(s1, s0, &mut offset);
        Layout { enc: [e1, e2, e3], down, up, dec: [d3, d2, d1], total: offset }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    pub fn init<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let l = self.layout();
        let mut params = vec![0.0; l.total];
        let mut fill = |start: usize, end: usize, fan_in: usize, rng: &mut R| {
            let b = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[start..end] {
                *p = rng.random_range(-b..=b);
            }
        };
        for c in &l.enc {
            fill(c.weight, c.bias + c.output.c, c.input.c * K * K, rng);
        }
        fill(l.down.weight, l.down.bias + l.down.outputs, l.down.inputs, rng);
        fill(l.up.weight, l.up.bias + l.up.outputs, l.up.inputs, rng);
        for c in &l.dec {
            // each transposed-conv output sees K·K/4 taps per input channel
            fill(c.weight, c.bias + c.output.c, c.input.c * K * K / 4, rng);
        }
        params
    }

    fn run(&self, params: &[f64], x: &[f64]) -> Activations {
        let l = self.layout();
        let a0 = hwc_to_chw(x, self.width, self.height, self.channels);
        let mut h1 = conv_forward(&l.enc[0], params, &a0);
        tanh_inplace(&mut h1);
        let mut h2 = conv_forward(&l.enc[1], params, &h1);
        tanh_inplace(&mut h2);
        let mut h3 = conv_forward(&l.enc[2], params, &h2);
        tanh_inplace(&mut h3);
        let z = dense_forward(&l.down, params, &h3);
        let mut u = dense_forward(&l.up, params, &z);
        tanh_inplace(&mut u);
        let mut d3 = tconv_forward(&l.dec[0], params, &u);
        tanh_inplace(&mut d3);
        let mut d2 = tconv_forward(&l.dec[1], params, &d3);
        tanh_inplace(&mut d2);
        let out = tconv_forward(&l.dec[2], params, &d2);
        Activations { a0, h: [h1, h2, h3], z, u, d: [d3, d2], out }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let act = self.run(params, x);
        chw_to_hwc(&act.out, self.width, self.height, self.channels)
    }

    pub fn loss_and_gradient(&self, params: &[f64], x: &[f64], m: &BinaryMask, norm: Normalization) -> (f64, Vec<f64>) {
        let l = self.layout();
        let act = self.run(params, x);
        let recon = chw_to_hwc(&act.out, self.width, self.height, self.channels);
        let loss = super::loss::masked_loss_raw(x, &recon, m, self.channels, norm);
        let g_out_hwc = super::loss::masked_loss_gradient_raw(x, &recon, m, self.channels, norm);
        let g_out = hwc_to_chw(&g_out_hwc, self.width, self.height, self.channels);

        let mut grad = vec![0.0; params.len()];
        let mut g = tconv_backward(&l.dec[2], params, &act.d[1], &g_out, &mut grad);
        tanh_backward(&mut g, &act.d[1]);
        let mut g = tconv_backward(&l.dec[1], params, &act.d[0], &g, &mut grad);
        tanh_backward(&mut g, &act.d[0]);
        let mut g = tconv_backward(&l.dec[0], params, &act.u, &g, &mut grad);
        tanh_backward(&mut g, &act.u);
        let g = dense_backward(&l.up, params, &act.z, &g, &mut grad);
        let mut g = dense_backward(&l.down, params, &act.h[2], &g, &mut grad);
        tanh_backward(&mut g, &act.h[2]);
        let mut g = conv_backward(&l.enc[2], params, &act.h[1], &g, &mut grad);
        tanh_backward(&mut g, &act.h[1]);
        let mut g = conv_backward(&l.enc[1], params, &act.h[0], &g, &mut grad);
        tanh_backward(&mut g, &act.h[0]);
        conv_backward(&l.enc[0], params, &act.a0, &g, &mut grad);
        (loss, grad)
    }
}

fn hwc_to_chw(x: &[f64], w: usize, h: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for y in 0..h {
        for xx in 0..w {
            for ch in 0..c {
                out[(ch * h + y) * w + xx] = x[(y * w + xx) * c + ch];
            }
        }
    }
    out
}

fn chw_to_hwc(x: &[f64], w: usize, h: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                out[(y * w + xx) * c + ch] = x[(ch * h + y) * w + xx];
            }
        }
    }
    out
}

fn tanh_inplace(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.tanh());
}

/// `g ← g · (1 − a²)` where `a = tanh(pre)`.
fn tanh_backward(g: &mut [f64], a: &[f64]) {
    for (gi, ai) in g.iter_mut().zip(a) {
        *gi *= 1.0 - ai * ai;
    }
}

/// Input tap of output coordinate `o` at kernel offset `k`, if in bounds.
fn tap(o: usize, k: usize, len: usize) -> Option<usize> {
    let i = (2 * o + k).checked_sub(1)?;
    (i < len).then_some(i)
}

fn conv_forward(c: &Conv, params: &[f64], input: &[f64]) -> Vec<f64> {
    let (si, so) = (c.input, c.output);
    let mut out = vec![0.0; so.len()];
    for o in 0..so.c {
        let bias = params[c.bias + o];
        for y in 0..so.h {
            for x in 0..so.w {
                let mut acc = bias;
                for i in 0..si.c {
                    let wbase = c.weight + (o * si.c + i) * K * K;
                    for ky in 0..K {
                        let Some(iy) = tap(y, ky, si.h) else { continue };
                        let row = (i * si.h + iy) * si.w;
                        for kx in 0..K {
                            let Some(ix) = tap(x, kx, si.w) else { continue };
                            acc += params[wbase + ky * K + kx] * input[row + ix];
                        }
                    }
                }
                out[(o * so.h + y) * so.w + x] = acc;
            }
        }
    }
    out
}

fn conv_backward(c: &Conv, params: &[f64], input: &[f64], g_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let (si, so) = (c.input, c.output);
    let mut g_in = vec![0.0; si.len()];
    for o in 0..so.c {
        for y in 0..so.h {
            for x in 0..so.w {
                let g = g_out[(o * so.h + y) * so.w + x];
                grad[c.bias + o] += g;
                for i in 0..si.c {
                    let wbase = c.weight + (o * si.c + i) * K * K;
                    for ky in 0..K {
                        let Some(iy) = tap(y, ky, si.h) else { continue };
                        let row = (i * si.h + iy) * si.w;
                        for kx in 0..K {
                            let Some(ix) = tap(x, kx, si.w) else { continue };
                            grad[wbase + ky * K + kx] += g * input[row + ix];
                            g_in[row + ix] += g * params[wbase + ky * K + kx];
                        }
                    }
                }
            }
        }
    }
    g_in
}

/// Transposed convolution: the adjoint of [`conv_forward`]'s geometry, with
/// weights laid out `[in][out][ky][kx]`.
fn tconv_forward(c: &Conv, params: &[f64], input: &[f64]) -> Vec<f64> {
    let (si, so) = (c.input, c.output);
    let mut out = vec![0.0; so.len()];
    for o in 0..so.c {
        out[o * so.h * so.w..(o + 1) * so.h * so.w].fill(params[c.bias + o]);
    }
    for i in 0..si.c {
        for y in 0..si.h {
            for x in 0..si.w {
                let v = input[(i * si.h + y) * si.w + x];
                for o in 0..so.c {
                    let wbase = c.weight + (i * so.c + o) * K * K;
                    for ky in 0..K {
                        let Some(oy) = tap(y, ky, so.h) else { continue };
                        let row = (o * so.h + oy) * so.w;
                        for kx in 0..K {
                            let Some(ox) = tap(x, kx, so.w) else { continue };
                            out[row + ox] += params[wbase + ky * K + kx] * v;
                        }
                    }
                }
            }
        }
    }
    out
}

fn tconv_backward(c: &Conv, params: &[f64], input: &[f64], g_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let (si, so) = (c.input, c.output);
    for o in 0..so.c {
        grad[c.bias + o] += g_out[o * so.h * so.w..(o + 1) * so.h * so.w].iter().sum::<f64>();
    }
    let mut g_in = vec![0.0; si.len()];
    for i in 0..si.c {
        for y in 0..si.h {
            for x in 0..si.w {
                let v = input[(i * si.h + y) * si.w + x];
                let mut acc = 0.0;
                for o in 0..so.c {
                    let wbase = c.weight + (i * so.c + o) * K * K;
                    for ky in 0..K {
                        let Some(oy) = tap(y, ky, so.h) else { continue };
                        let row = (o * so.h + oy) * so.w;
                        for kx in 0..K {
                            let Some(ox) = tap(x, kx, so.w) else { continue };
                            let g = g_out[row + ox];
                            grad[wbase + ky * K + kx] += g * v;
                            acc += g * params[wbase + ky * K + kx];
                        }
                    }
                }
                g_in[(i * si.h + y) * si.w + x] = acc;
            }
        }
    }
    g_in
}

fn dense_forward(d: &Dense, params: &[f64], input: &[f64]) -> Vec<f64> {
    (0..d.outputs)
        .map(|o| {
            let w = &params[d.weight + o * d.inputs..d.weight + (o + 1) * d.inputs];
            params[d.bias + o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

fn dense_backward(d: &Dense, params: &[f64], input: &[f64], g_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let mut g_in = vec![0.0; d.inputs];
    for (o, &g) in g_out.iter().enumerate() {
        grad[d.bias + o] += g;
        let row = d.weight + o * d.inputs;
        for i in 0..d.inputs {
            grad[row + i] += g * input[i];
            g_in[i] += g * params[row + i];
        }
    }
    g_in
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_sizes() {
        let net = SmallConv { width: 16, height: 8, channels: 3, hidden: [2, 3, 4], bottleneck: 5 };
        let l = net.layout();
        assert_eq!(l.enc[2].output, Shape { c: 4, h: 1, w: 2 });
        assert_eq!(l.dec[2].output, Shape { c: 3, h: 8, w: 16 });
        let expected = (3 * 2 * 16 + 2) + (2 * 3 * 16 + 3) + (3 * 4 * 16 + 4) + (8 * 5 + 5) + (5 * 8 + 8)
            + (4 * 3 * 16 + 3)
            + (3 * 2 * 16 + 2)
            + (2 * 3 * 16 + 3);
        assert_eq!(net.param_count(), expected);
    }

    #[test]
    fn transposed_conv_is_the_adjoint() {
        // <conv(x), y> == <x, tconv(y)> with shared weights and zero bias
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small = Shape { c: 2, h: 3, w: 4 };
        let big = Shape { c: 3, h: 6, w: 8 };
        let n_w = big.c * small.c * K * K;
        let mut params: Vec<f64> = (0..n_w).map(|_| rng.random_range(-1.0..1.0)).collect();
        params.extend(vec![0.0; big.c.max(small.c)]);
        let conv = Conv { input: big, output: small, weight: 0, bias: n_w };
        let tconv = Conv { input: small, output: big, weight: 0, bias: n_w };
        // conv weights are [out=small][in=big]; tconv weights are [in=small][out=big]
        let x: Vec<f64> = (0..big.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..small.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cx = conv_forward(&conv, &params, &x);
        let ty = tconv_forward(&tconv, &params, &y);
        let lhs: f64 = cx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&ty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn layout_round_trip() {
        let x: Vec<f64> = (0..24).map(|i| i as f64).collect();
        assert_eq!(chw_to_hwc(&hwc_to_chw(&x, 4, 2, 3), 4, 2, 3), x);
    }
}
