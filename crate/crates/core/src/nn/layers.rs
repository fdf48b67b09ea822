use rand::Rng;

use super::tensor::{Tensor, TensorMap};
use crate::error::{Error, Result};

/// Stride-1 cross-correlation with zero padding that preserves spatial extents.
///
/// `input` is `[C, H, W]`, `kernel` is `[O, C, Kh, Kw]` with odd `Kh`, `Kw`, and
/// `bias` (optional) is `[O]`. Accumulation order is fixed, so results are
/// reproducible bit for bit.
pub fn conv2d(input: &Tensor, kernel: &Tensor, bias: Option<&Tensor>, dilation: usize) -> Result<Tensor> {
    let &[c, h, w] = input.shape() else {
        return Err(Error::shape(format!("conv2d input must be CHW, got {:?}", input.shape())));
    };
    let &[o, kc, kh, kw] = kernel.shape() else {
        return Err(Error::shape(format!("conv2d kernel must be OCKhKw, got {:?}", kernel.shape())));
    };
    if kc != c {
        return Err(Error::shape(format!("kernel expects {kc} input channels, input has {c}")));
    }
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::shape(format!("kernel extents must be odd, got {kh}x{kw}")));
    }
    if dilation == 0 {
        return Err(Error::shape("dilation must be >= 1"));
    }
    if let Some(b) = bias {
        b.expect_shape("conv2d bias", &[o])?;
    }
    let plane = h * w;
    let mut out = vec![0.0f32; o * plane];
    let src = input.data();
    let k = kernel.data();
    let (ph, pw) = ((kh / 2 * dilation) as isize, (kw / 2 * dilation) as isize);
    for oc in 0..o {
        let dst = &mut out[oc * plane..(oc + 1) * plane];
        if let Some(b) = bias {
            dst.fill(b.data()[oc]);
        }
        for ic in 0..c {
            let s = &src[ic * plane..(ic + 1) * plane];
            for ky in 0..kh {
                let dy = ky as isize * dilation as isize - ph;
                let (y0, y1) = ((-dy).max(0) as usize, (h as isize - dy).clamp(0, h as isize) as usize);
                for kx in 0..kw {
                    let wv = k[((oc * c + ic) * kh + ky) * kw + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    let dx = kx as isize * dilation as isize - pw;
                    let (x0, x1) = ((-dx).max(0) as usize, (w as isize - dx).clamp(0, w as isize) as usize);
                    if x0 >= x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let drow = &mut dst[y * w + x0..y * w + x1];
                        let srow = &s[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                        for (d, &v) in drow.iter_mut().zip(srow) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![o, h, w], out)
}

/// Per-channel PReLU on a `[C, H, W]` tensor, in place.
pub fn prelu(x: &mut Tensor, slopes: &Tensor) -> Result<()> {
    let c = x.shape()[0];
    slopes.expect_shape("prelu slopes", &[c])?;
    let plane = x.len() / c.max(1);
    for (ch, chunk) in x.data_mut().chunks_mut(plane.max(1)).enumerate() {
        let a = slopes.data()[ch];
        for v in chunk {
            if *v < 0.0 {
                *v *= a;
            }
        }
    }
    Ok(())
}

pub fn relu(x: &mut Tensor) {
    for v in x.data_mut() {
        *v = v.max(0.0);
    }
}

/// A convolution layer with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    pub weight: Tensor,
    pub bias: Tensor,
    pub dilation: usize,
}

impl Conv {
    pub fn zeros(out_ch: usize, in_ch: usize, kh: usize, kw: usize, dilation: usize) -> Self {
        Conv { weight: Tensor::zeros(vec![out_ch, in_ch, kh, kw]), bias: Tensor::zeros(vec![out_ch]), dilation }
    }

    /// Uniform fan-in scaled initialisation, zero bias.
    pub fn random(out_ch: usize, in_ch: usize, kh: usize, kw: usize, dilation: usize, gain: f32, rng: &mut impl Rng) -> Self {
        let bound = gain * (3.0 / (in_ch * kh * kw) as f32).sqrt();
        let weight = Tensor::from_fn(vec![out_ch, in_ch, kh, kw], |_| rng.gen_range(-bound..=bound));
        Conv { weight, bias: Tensor::zeros(vec![out_ch]), dilation }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        conv2d(x, &self.weight, Some(&self.bias), self.dilation)
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub(crate) fn load(map: &TensorMap, prefix: &str, shape: [usize; 4], dilation: usize) -> Result<Self> {
        let weight = map.require(&format!("{prefix}.weight"))?.clone();
        weight.expect_shape(&format!("{prefix}.weight"), &shape)?;
        let bias = map.require(&format!("{prefix}.bias"))?.clone();
        bias.expect_shape(&format!("{prefix}.bias"), &[shape[0]])?;
        Ok(Conv { weight, bias, dilation })
    }

    pub(crate) fn store(&self, map: &mut TensorMap, prefix: &str) -> Result<()> {
        map.insert(format!("{prefix}.weight"), self.weight.clone())?;
        map.insert(format!("{prefix}.bias"), self.bias.clone())
    }
}

/// Fully connected layer, `weight` is `[out, in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(out: usize, input: usize) -> Self {
        Dense { weight: Tensor::zeros(vec![out, input]), bias: Tensor::zeros(vec![out]) }
    }

    pub fn random(out: usize, input: usize, gain: f32, rng: &mut impl Rng) -> Self {
        let bound = gain * (3.0 / input as f32).sqrt();
        Dense { weight: Tensor::from_fn(vec![out, input], |_| rng.gen_range(-bound..=bound)), bias: Tensor::zeros(vec![out]) }
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        let &[o, i] = self.weight.shape() else { unreachable!() };
        if x.len() != i {
            return Err(Error::shape(format!("dense layer expects {i} inputs, got {}", x.len())));
        }
        let w = self.weight.data();
        Ok((0..o)
            .map(|r| {
                let row = &w[r * i..(r + 1) * i];
                row.iter().zip(x).fold(self.bias.data()[r], |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    pub(crate) fn load(map: &TensorMap, prefix: &str, out: usize, input: usize) -> Result<Self> {
        let weight = map.require(&format!("{prefix}.weight"))?.clone();
        weight.expect_shape(&format!("{prefix}.weight"), &[out, input])?;
        let bias = map.require(&format!("{prefix}.bias"))?.clone();
        bias.expect_shape(&format!("{prefix}.bias"), &[out])?;
        Ok(Dense { weight, bias })
    }

    pub(crate) fn store(&self, map: &mut TensorMap, prefix: &str) -> Result<()> {
        map.insert(format!("{prefix}.weight"), self.weight.clone())?;
        map.insert(format!("{prefix}.bias"), self.bias.clone())
    }
}
