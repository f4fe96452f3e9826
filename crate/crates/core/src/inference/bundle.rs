//! Portable CNN weight file.
//!
//! All integers are little-endian `u32`, all reals little-endian IEEE-754;
//! header reals are `f64`, tensors `f32` in row-major order.
//!
//! ```text
//! magic   "CNNW"
//! u32     version (= 1)
//! u32     grid size L
//! f64     gaussian std xi (cells)
//! u32     number of UAVs M
//! f64     area_x, area_y, h_min, h_max (meters)
//! u32     layer count
//! layers, each starting with a u8 kind tag:
//!   1 conv2d   u32 in_c, out_c, kernel_h, kernel_w, stride, pad
//!              f32 weight[out_c][in_c][kernel_h][kernel_w], f32 bias[out_c]
//!   2 maxpool  u32 size, stride
//!   3 dense    u32 in, out; f32 weight[out][in], f32 bias[out]
//!   4 relu
//!   5 flatten
//! ```
//!
//! Loading checks both that the layer chain is shape-consistent for an
//! `1 x L x L` input and that it has the deployment network's topology:
//! conv 7x7 (pad 3) + ReLU + 2x2 max-pool, conv 3x3 (pad 1) + ReLU + 2x2
//! max-pool, flatten, then three dense layers each followed by ReLU, the
//! last one producing `3M` outputs. Channel and hidden widths are free.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CNNW";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub grid: u32,
    pub xi: f64,
    pub n_uavs: u32,
    pub area_x: f64,
    pub area_y: f64,
    pub h_min: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d {
        in_c: u32,
        out_c: u32,
        kernel_h: u32,
        kernel_w: u32,
        stride: u32,
        pad: u32,
        weight: Vec<f32>,
        bias: Vec<f32>,
    },
    MaxPool {
        size: u32,
        stride: u32,
    },
    Dense {
        input: u32,
        output: u32,
        weight: Vec<f32>,
        bias: Vec<f32>,
    },
    Relu,
    Flatten,
}

impl Layer {
    fn tag(&self) -> u8 {
        match self {
            Layer::Conv2d { .. } => 1,
            Layer::MaxPool { .. } => 2,
            Layer::Dense { .. } => 3,
            Layer::Relu => 4,
            Layer::Flatten => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d { .. } => "conv2d",
            Layer::MaxPool { .. } => "maxpool",
            Layer::Dense { .. } => "dense",
            Layer::Relu => "relu",
            Layer::Flatten => "flatten",
        }
    }
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Image { c: usize, h: usize, w: usize },
    Vector(usize),
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Image { c, h, w } => write!(f, "{c}x{h}x{w}"),
            Shape::Vector(n) => write!(f, "{n}"),
        }
    }
}

/// Output shape of `layer` (1-based index `idx`) on input `shape`.
pub fn next_shape(idx: usize, layer: &Layer, shape: Shape) -> Result<Shape> {
    let err = |reason: String| Err(Error::ShapeChain { layer: idx, reason });
    match (layer, shape) {
        (Layer::Conv2d { in_c, out_c, kernel_h, kernel_w, stride, pad, .. }, Shape::Image { c, h, w }) => {
            if *in_c as usize != c {
                return err(format!("conv2d expects {in_c} input channels, got {c}"));
            }
            if *stride == 0 {
                return err("conv2d stride must be positive".into());
            }
            let (kh, kw, s, p) = (*kernel_h as usize, *kernel_w as usize, *stride as usize, *pad as usize);
            if h + 2 * p < kh || w + 2 * p < kw {
                return err(format!("kernel {kh}x{kw} larger than padded input {h}x{w}"));
            }
            Ok(Shape::Image { c: *out_c as usize, h: (h + 2 * p - kh) / s + 1, w: (w + 2 * p - kw) / s + 1 })
        }
        (Layer::MaxPool { size, stride }, Shape::Image { c, h, w }) => {
            let (k, s) = (*size as usize, *stride as usize);
            if k == 0 || s == 0 || h < k || w < k {
                return err(format!("maxpool {k}/{s} does not fit input {h}x{w}"));
            }
            Ok(Shape::Image { c, h: (h - k) / s + 1, w: (w - k) / s + 1 })
        }
        (Layer::Flatten, Shape::Image { c, h, w }) => Ok(Shape::Vector(c * h * w)),
        (Layer::Dense { input, output, .. }, Shape::Vector(n)) => {
            if *input as usize != n {
                return err(format!("dense expects {input} inputs, got {n}"));
            }
            Ok(Shape::Vector(*output as usize))
        }
        (Layer::Relu, s) => Ok(s),
        (l, s) => err(format!("{} cannot follow activation of shape {s}", l.name())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    pub header: Header,
    pub layers: Vec<Layer>,
}

/// Layer widths of the deployment network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Widths {
    pub conv1: u32,
    pub conv2: u32,
    pub hidden1: u32,
    pub hidden2: u32,
}

impl Default for Widths {
    fn default() -> Self {
        Widths { conv1: 64, conv2: 128, hidden1: 1024, hidden2: 2048 }
    }
}

impl WeightBundle {
    /// Network with the deployment topology, parameters drawn from `init` in
    /// file order.
    pub fn with_topology(header: Header, widths: Widths, mut init: impl FnMut() -> f32) -> Self {
        let l = header.grid as usize;
        let flat = widths.conv2 as usize * (l / 4) * (l / 4);
        let mut take = |n: usize| (0..n).map(|_| init()).collect::<Vec<f32>>();
        let conv = |in_c: u32, out_c: u32, k: u32, take: &mut dyn FnMut(usize) -> Vec<f32>| Layer::Conv2d {
            in_c,
            out_c,
            kernel_h: k,
            kernel_w: k,
            stride: 1,
            pad: k / 2,
            weight: take((out_c * in_c * k * k) as usize),
            bias: take(out_c as usize),
        };
        let dense = |input: u32, output: u32, take: &mut dyn FnMut(usize) -> Vec<f32>| Layer::Dense {
            input,
            output,
            weight: take(input as usize * output as usize),
            bias: take(output as usize),
        };
        let pool = || Layer::MaxPool { size: 2, stride: 2 };
        let out = 3 * header.n_uavs;
        let layers = vec![
            conv(1, widths.conv1, 7, &mut take),
            Layer::Relu,
            pool(),
            conv(widths.conv1, widths.conv2, 3, &mut take),
            Layer::Relu,
            pool(),
            Layer::Flatten,
            dense(flat as u32, widths.hidden1, &mut take),
            Layer::Relu,
            dense(widths.hidden1, widths.hidden2, &mut take),
            Layer::Relu,
            dense(widths.hidden2, out, &mut take),
            Layer::Relu,
        ];
        WeightBundle { header, layers }
    }

    /// Shape after every layer, starting from the `1 x L x L` input.
    pub fn shape_chain(&self) -> Result<Vec<Shape>> {
        let l = self.header.grid as usize;
        let mut shape = Shape::Image { c: 1, h: l, w: l };
        let mut out = vec![shape];
        for (i, layer) in self.layers.iter().enumerate() {
            shape = next_shape(i + 1, layer, shape)?;
            out.push(shape);
        }
        Ok(out)
    }

    /// Shape consistency plus the deployment-network topology.
    pub fn validate(&self) -> Result<()> {
        self.check_topology()?;
        let chain = self.shape_chain()?;
        let last = *chain.last().expect("chain has the input shape");
        let want = Shape::Vector(3 * self.header.n_uavs as usize);
        if last != want {
            return Err(Error::ShapeChain {
                layer: self.layers.len(),
                reason: format!("network outputs {last}, header needs {want}"),
            });
        }
        Ok(())
    }

    fn check_topology(&self) -> Result<()> {
        #[derive(PartialEq)]
        enum K {
            Conv(u32, u32),
            Pool,
            Relu,
            Flatten,
            Dense,
        }
        use K::*;
        let expected = [Conv(7, 3), Relu, Pool, Conv(3, 1), Relu, Pool, Flatten, Dense, Relu, Dense, Relu, Dense, Relu];
        let describe = |k: &K| match k {
            Conv(k, p) => format!("conv2d {k}x{k} stride 1 pad {p}"),
            Pool => "maxpool 2x2 stride 2".into(),
            Relu => "relu".into(),
            Flatten => "flatten".into(),
            Dense => "dense".into(),
        };
        for (i, want) in expected.iter().enumerate() {
            let Some(layer) = self.layers.get(i) else {
                return Err(Error::ShapeChain { layer: i + 1, reason: format!("missing layer, expected {}", describe(want)) });
            };
            let ok = match (want, layer) {
                (Conv(k, p), Layer::Conv2d { kernel_h, kernel_w, stride, pad, .. }) => {
                    kernel_h == k && kernel_w == k && *stride == 1 && pad == p
                }
                (Pool, Layer::MaxPool { size, stride }) => *size == 2 && *stride == 2,
                (Relu, Layer::Relu) | (Flatten, Layer::Flatten) | (Dense, Layer::Dense { .. }) => true,
                _ => false,
            };
            if !ok {
                let got = match layer {
                    Layer::Conv2d { kernel_h, kernel_w, stride, pad, .. } => {
                        format!("conv2d {kernel_h}x{kernel_w} stride {stride} pad {pad}")
                    }
                    Layer::MaxPool { size, stride } => format!("maxpool {size}x{size} stride {stride}"),
                    l => l.name().to_string(),
                };
                return Err(Error::ShapeChain { layer: i + 1, reason: format!("expected {}, found {got}", describe(want)) });
            }
        }
        if self.layers.len() > expected.len() {
            return Err(Error::ShapeChain {
                layer: expected.len() + 1,
                reason: "unexpected layer after the output activation".into(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        let h = &self.header;
        b.extend_from_slice(&MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&h.grid.to_le_bytes());
        b.extend_from_slice(&h.xi.to_le_bytes());
        b.extend_from_slice(&h.n_uavs.to_le_bytes());
        for v in [h.area_x, h.area_y, h.h_min, h.h_max] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        let put_f32 = |b: &mut Vec<u8>, xs: &[f32]| xs.iter().for_each(|x| b.extend_from_slice(&x.to_le_bytes()));
        for layer in &self.layers {
            b.push(layer.tag());
            match layer {
                Layer::Conv2d { in_c, out_c, kernel_h, kernel_w, stride, pad, weight, bias } => {
                    for v in [in_c, out_c, kernel_h, kernel_w, stride, pad] {
                        b.extend_from_slice(&v.to_le_bytes());
                    }
                    put_f32(&mut b, weight);
                    put_f32(&mut b, bias);
                }
                Layer::MaxPool { size, stride } => {
                    b.extend_from_slice(&size.to_le_bytes());
                    b.extend_from_slice(&stride.to_le_bytes());
                }
                Layer::Dense { input, output, weight, bias } => {
                    b.extend_from_slice(&input.to_le_bytes());
                    b.extend_from_slice(&output.to_le_bytes());
                    put_f32(&mut b, weight);
                    put_f32(&mut b, bias);
                }
                Layer::Relu | Layer::Flatten => {}
            }
        }
        b
    }

    /// Parses and validates a weight file image.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let header = Header {
            grid: r.u32()?,
            xi: r.f64()?,
            n_uavs: r.u32()?,
            area_x: r.f64()?,
            area_y: r.f64()?,
            h_min: r.f64()?,
            h_max: r.f64()?,
        };
        let count = r.u32()? as usize;
        let mut layers = Vec::with_capacity(count.min(64));
        for idx in 1..=count {
            let tag = r.take(1)?[0];
            let layer = match tag {
                1 => {
                    let [in_c, out_c, kernel_h, kernel_w, stride, pad] =
                        [r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?];
                    let n = (out_c as usize) * (in_c as usize) * (kernel_h as usize) * (kernel_w as usize);
                    let weight = r.f32s(n)?;
                    let bias = r.f32s(out_c as usize)?;
                    Layer::Conv2d { in_c, out_c, kernel_h, kernel_w, stride, pad, weight, bias }
                }
                2 => Layer::MaxPool { size: r.u32()?, stride: r.u32()? },
                3 => {
                    let (input, output) = (r.u32()?, r.u32()?);
                    let weight = r.f32s(input as usize * output as usize)?;
                    let bias = r.f32s(output as usize)?;
                    Layer::Dense { input, output, weight, bias }
                }
                4 => Layer::Relu,
                5 => Layer::Flatten,
                t => return Err(Error::ShapeChain { layer: idx, reason: format!("unknown layer tag {t}") }),
            };
            layers.push(layer);
        }
        if r.pos != bytes.len() {
            return Err(Error::ShapeChain {
                layer: count,
                reason: format!("{} trailing bytes after the last layer", bytes.len() - r.pos),
            });
        }
        let bundle = WeightBundle { header, layers };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a weight file.
pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightBundle> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    WeightBundle::from_bytes(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let avail = self.bytes.len() - self.pos;
        if avail < n {
            return Err(Error::Truncated { offset: self.bytes.len(), needed: n - avail });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or(Error::Truncated { offset: self.pos, needed: usize::MAX })?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
}
