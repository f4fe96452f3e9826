//! CPU forward pass in `f32`.
//!
//! A [`Network`] is compiled once from a [`WeightBundle`]: convolutions run
//! as im2col + SGEMM, dense layers are stored input-major so that inputs
//! zeroed by the preceding ReLU cost no memory traffic.

use super::bundle::{Header, Layer, Shape, WeightBundle};
use crate::dataset::RasterGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Op {
    Conv { geo: ConvGeometry, weight: Vec<f32>, bias: Vec<f32> },
    Pool { c: usize, h: usize, w: usize, oh: usize, ow: usize, k: usize, s: usize },
    /// `weight` is `[input][output]`.
    Dense { input: usize, output: usize, weight: Vec<f32>, bias: Vec<f32> },
    Relu,
    Flatten,
}

/// Inference-ready form of a weight bundle.
#[derive(Debug, Clone)]
pub struct Network {
    header: Header,
    ops: Vec<Op>,
}

impl Network {
    /// Checks the shape chain and lays weights out for inference.
    pub fn new(bundle: &WeightBundle) -> Result<Self> {
        let chain = bundle.shape_chain()?;
        let ops = bundle
            .layers
            .iter()
            .zip(chain.windows(2))
            .map(|(layer, io)| match (layer, io[0], io[1]) {
                (
                    Layer::Conv2d { kernel_h, kernel_w, stride, pad, weight, bias, .. },
                    Shape::Image { c, h, w },
                    Shape::Image { c: oc, h: oh, w: ow },
                ) => Op::Conv {
                    geo: ConvGeometry {
                        in_c: c,
                        in_h: h,
                        in_w: w,
                        out_c: oc,
                        out_h: oh,
                        out_w: ow,
                        kh: *kernel_h as usize,
                        kw: *kernel_w as usize,
                        stride: *stride as usize,
                        pad: *pad as usize,
                    },
                    weight: weight.clone(),
                    bias: bias.clone(),
                },
                (Layer::MaxPool { size, stride }, Shape::Image { c, h, w }, Shape::Image { h: oh, w: ow, .. }) => {
                    Op::Pool { c, h, w, oh, ow, k: *size as usize, s: *stride as usize }
                }
                (Layer::Dense { input, output, weight, bias }, _, _) => {
                    let (i, o) = (*input as usize, *output as usize);
                    let mut t = vec![0.0f32; i * o];
                    for (r, row) in weight.chunks_exact(i).enumerate() {
                        for (k, v) in row.iter().enumerate() {
                            t[k * o + r] = *v;
                        }
                    }
                    Op::Dense { input: i, output: o, weight: t, bias: bias.clone() }
                }
                (Layer::Relu, _, _) => Op::Relu,
                (Layer::Flatten, _, _) => Op::Flatten,
                _ => unreachable!("shape chain accepted the layer"),
            })
            .collect();
        Ok(Network { header: bundle.header, ops })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    /// Runs the network on a rasterized user map. Returns the `3M` raw outputs.
    pub fn forward(&self, grid: &RasterGrid) -> Result<Vec<f32>> {
        if grid.size != self.header.grid as usize {
            return Err(Error::DimensionMismatch { expected: self.header.grid as usize, got: grid.size });
        }
        let input: Vec<f32> = grid.cells.iter().map(|&v| v as f32).collect();
        self.forward_raw(&input)
    }

    /// Forward pass on a row-major `L x L` single-channel input.
    pub fn forward_raw(&self, input: &[f32]) -> Result<Vec<f32>> {
        let l = self.header.grid as usize;
        if input.len() != l * l {
            return Err(Error::DimensionMismatch { expected: l * l, got: input.len() });
        }
        let mut act = input.to_vec();
        for op in &self.ops {
            act = match op {
                Op::Conv { geo, weight, bias } => conv2d(&act, weight, bias, geo),
                Op::Pool { c, h, w, oh, ow, k, s } => maxpool(&act, *c, *h, *w, *oh, *ow, *k, *s),
                Op::Dense { input, output, weight, bias } => dense(&act, weight, bias, *input, *output),
                Op::Relu => {
                    act.iter_mut().for_each(|v| *v = v.max(0.0));
                    act
                }
                Op::Flatten => act,
            };
        }
        Ok(act)
    }
}

/// One-shot forward pass. Compiles `w` on every call; use [`Network`] for
/// repeated inference.
pub fn forward(grid: &RasterGrid, w: &WeightBundle) -> Result<Vec<f32>> {
    Network::new(w)?.forward(grid)
}

#[derive(Debug, Clone)]
struct ConvGeometry {
    in_c: usize,
    in_h: usize,
    in_w: usize,
    out_c: usize,
    out_h: usize,
    out_w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
}

/// Zero-padded cross-correlation as `weight[out_c x K] * cols[K x P]`.
fn conv2d(x: &[f32], weight: &[f32], bias: &[f32], g: &ConvGeometry) -> Vec<f32> {
    let taps = g.in_c * g.kh * g.kw;
    let plane = g.out_h * g.out_w;
    let cols = im2col(x, g);
    let mut out: Vec<f32> = bias.iter().flat_map(|&b| std::iter::repeat_n(b, plane)).collect();
    // SAFETY: `weight` is out_c x taps, `cols` taps x plane, `out` out_c x
    // plane, all row-major and exactly that long.
    unsafe {
        matrixmultiply::sgemm(
            g.out_c,
            taps,
            plane,
            1.0,
            weight.as_ptr(),
            taps as isize,
            1,
            cols.as_ptr(),
            plane as isize,
            1,
            1.0,
            out.as_mut_ptr(),
            plane as isize,
            1,
        );
    }
    out
}

fn im2col(x: &[f32], g: &ConvGeometry) -> Vec<f32> {
    let plane = g.out_h * g.out_w;
    let mut cols = vec![0.0f32; g.in_c * g.kh * g.kw * plane];
    for ic in 0..g.in_c {
        let src = &x[ic * g.in_h * g.in_w..(ic + 1) * g.in_h * g.in_w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let row = ((ic * g.kh + ky) * g.kw + kx) * plane;
                let dst = &mut cols[row..row + plane];
                let (x0, x1) = valid_range(g.out_w, g.in_w, kx, g.stride, g.pad);
                for oy in 0..g.out_h {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    let srow = &src[iy as usize * g.in_w..(iy as usize + 1) * g.in_w];
                    let drow = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                    for ox in x0..x1 {
                        drow[ox] = srow[ox * g.stride + kx - g.pad];
                    }
                }
            }
        }
    }
    cols
}

/// Half-open range of output columns `ox` with `0 <= ox*stride + k - pad < in_w`.
fn valid_range(out_w: usize, in_w: usize, k: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = if k >= pad { 0 } else { (pad - k).div_ceil(stride) };
    let hi = if in_w + pad > k { ((in_w + pad - k - 1) / stride + 1).min(out_w) } else { 0 };
    (lo.min(hi), hi)
}

#[allow(clippy::too_many_arguments)]
fn maxpool(x: &[f32], c: usize, h: usize, w: usize, oh: usize, ow: usize, k: usize, s: usize) -> Vec<f32> {
    let mut out = vec![f32::NEG_INFINITY; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f32::NEG_INFINITY;
                for dy in 0..k {
                    let row = &x[ch * h * w + (oy * s + dy) * w..];
                    for dx in 0..k {
                        m = m.max(row[ox * s + dx]);
                    }
                }
                out[ch * oh * ow + oy * ow + ox] = m;
            }
        }
    }
    out
}

/// `bias + sum_i x_i * weight[i]`, skipping zero inputs. Nonzero inputs are
/// applied four columns per pass over the output.
fn dense(x: &[f32], weight: &[f32], bias: &[f32], input: usize, output: usize) -> Vec<f32> {
    let mut out = bias.to_vec();
    let active: Vec<usize> = (0..input).filter(|&i| x[i] != 0.0).collect();
    let col = |i: usize| &weight[i * output..(i + 1) * output];
    let mut quads = active.chunks_exact(4);
    for q in &mut quads {
        let (a, b, c, d) = (x[q[0]], x[q[1]], x[q[2]], x[q[3]]);
        let (wa, wb, wc, wd) = (col(q[0]), col(q[1]), col(q[2]), col(q[3]));
        for o in 0..output {
            out[o] += a * wa[o] + b * wb[o] + c * wc[o] + d * wd[o];
        }
    }
    for &i in quads.remainder() {
        for (o, w) in out.iter_mut().zip(col(i)) {
            *o += x[i] * w;
        }
    }
    out
}
