//! QP-conditioned CNN in-loop filter.
//!
//! Inputs are stacked as `[rec.., pred.., bs, qp]`, normalised to `[0, 1]`
//! (samples / 255, BS / 2, QP / 63). A 3x3 head conv lifts them to `C` channels,
//! `B` backbone blocks refine the features, and a 3x3 tail conv predicts a
//! residual that is added back onto `rec`.
//!
//! Backbone block, `x` with `C` channels:
//!
//! ```text
//! 1x1 C->2C, PReLU, 3x1 2C->2C, 1x3 2C->2C, 1x1 2C->C, + x
//! ```
//!
//! Blocks with an even index dilate the 3x1/1x3 pair by two.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{prelu, Conv};
use super::tensor::{Tensor, TensorMap};
use crate::error::{Error, Result};
use crate::video_io::Plane;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneKind {
    Luma,
    Chroma,
}

impl PlaneKind {
    pub fn content_channels(self) -> usize {
        match self {
            PlaneKind::Luma => 1,
            PlaneKind::Chroma => 2,
        }
    }

    pub fn prefix(self) -> &'static str {
        match self {
            PlaneKind::Luma => "luma",
            PlaneKind::Chroma => "chroma",
        }
    }

    /// Content channels twice (rec, pred), plus BS and QP.
    pub fn input_channels(self) -> usize {
        self.content_channels() * 2 + 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackboneBlock {
    pub expand: Conv,
    pub prelu: Tensor,
    pub conv_v: Conv,
    pub conv_h: Conv,
    pub reduce: Conv,
}

impl BackboneBlock {
    fn dilation(index: usize) -> usize {
        if index.is_multiple_of(2) {
            2
        } else {
            1
        }
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut t = self.expand.forward(x)?;
        prelu(&mut t, &self.prelu)?;
        let t = self.conv_v.forward(&t)?;
        let t = self.conv_h.forward(&t)?;
        let mut t = self.reduce.forward(&t)?;
        for (a, b) in t.data_mut().iter_mut().zip(x.data()) {
            *a += b;
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnlfModel {
    pub kind: PlaneKind,
    pub channels: usize,
    pub head: Conv,
    pub blocks: Vec<BackboneBlock>,
    pub tail: Conv,
}

impl CnnlfModel {
    /// All weights zero; PReLU slopes 0.25.
    pub fn zeros(kind: PlaneKind, channels: usize, blocks: usize) -> Self {
        let c = channels;
        CnnlfModel {
            kind,
            channels,
            head: Conv::zeros(c, kind.input_channels(), 3, 3, 1),
            blocks: (0..blocks)
                .map(|i| {
                    let d = BackboneBlock::dilation(i);
                    BackboneBlock {
                        expand: Conv::zeros(2 * c, c, 1, 1, 1),
                        prelu: Tensor::from_fn(vec![2 * c], |_| 0.25),
                        conv_v: Conv::zeros(2 * c, 2 * c, 3, 1, d),
                        conv_h: Conv::zeros(2 * c, 2 * c, 1, 3, d),
                        reduce: Conv::zeros(c, 2 * c, 1, 1, 1),
                    }
                })
                .collect(),
            tail: Conv::zeros(kind.content_channels(), c, 3, 3, 1),
        }
    }

    /// Seeded random initialisation; the tail is scaled down so the initial
    /// residual is small.
    pub fn random(kind: PlaneKind, channels: usize, blocks: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = channels;
        let mut m = Self::zeros(kind, channels, blocks);
        m.head = Conv::random(c, kind.input_channels(), 3, 3, 1, 1.0, &mut rng);
        for (i, b) in m.blocks.iter_mut().enumerate() {
            let d = BackboneBlock::dilation(i);
            b.expand = Conv::random(2 * c, c, 1, 1, 1, 1.0, &mut rng);
            b.conv_v = Conv::random(2 * c, 2 * c, 3, 1, d, 1.0, &mut rng);
            b.conv_h = Conv::random(2 * c, 2 * c, 1, 3, d, 1.0, &mut rng);
            b.reduce = Conv::random(c, 2 * c, 1, 1, 1, 0.5, &mut rng);
        }
        m.tail = Conv::random(kind.content_channels(), c, 3, 3, 1, 0.05, &mut rng);
        m
    }

    pub fn to_tensors(&self) -> Result<TensorMap> {
        let p = self.kind.prefix();
        let mut map = TensorMap::new();
        self.head.store(&mut map, &format!("{p}.head"))?;
        for (i, b) in self.blocks.iter().enumerate() {
            let bp = format!("{p}.block{i}");
            b.expand.store(&mut map, &format!("{bp}.expand"))?;
            map.insert(format!("{bp}.prelu.weight"), b.prelu.clone())?;
            b.conv_v.store(&mut map, &format!("{bp}.conv_v"))?;
            b.conv_h.store(&mut map, &format!("{bp}.conv_h"))?;
            b.reduce.store(&mut map, &format!("{bp}.reduce"))?;
        }
        self.tail.store(&mut map, &format!("{p}.tail"))?;
        Ok(map)
    }

    /// Reads the `luma.*` or `chroma.*` tensors of a map. Channel and block counts
    /// are inferred from the tensor shapes and names.
    pub fn from_tensors(map: &TensorMap, kind: PlaneKind) -> Result<Self> {
        let p = kind.prefix();
        let head_w = map.require(&format!("{p}.head.weight"))?;
        let c = *head_w.shape().first().ok_or_else(|| Error::shape("empty head weight shape"))?;
        let head = Conv::load(map, &format!("{p}.head"), [c, kind.input_channels(), 3, 3], 1)?;
        let mut blocks = Vec::new();
        while map.get(&format!("{p}.block{}.expand.weight", blocks.len())).is_some() {
            let i = blocks.len();
            let bp = format!("{p}.block{i}");
            let d = BackboneBlock::dilation(i);
            let prelu = map.require(&format!("{bp}.prelu.weight"))?.clone();
            prelu.expect_shape(&format!("{bp}.prelu.weight"), &[2 * c])?;
            blocks.push(BackboneBlock {
                expand: Conv::load(map, &format!("{bp}.expand"), [2 * c, c, 1, 1], 1)?,
                prelu,
                conv_v: Conv::load(map, &format!("{bp}.conv_v"), [2 * c, 2 * c, 3, 1], d)?,
                conv_h: Conv::load(map, &format!("{bp}.conv_h"), [2 * c, 2 * c, 1, 3], d)?,
                reduce: Conv::load(map, &format!("{bp}.reduce"), [c, 2 * c, 1, 1], 1)?,
            });
        }
        let tail = Conv::load(map, &format!("{p}.tail"), [kind.content_channels(), c, 3, 3], 1)?;
        Ok(CnnlfModel { kind, channels: c, head, blocks, tail })
    }

    /// Runs the network on an already stacked, normalised `[in, H, W]` input and
    /// returns the normalised residual `[content, H, W]`.
    pub fn residual(&self, input: &Tensor) -> Result<Tensor> {
        let ch = input.shape().first().copied().unwrap_or(0);
        if ch != self.kind.input_channels() {
            return Err(Error::shape(format!("cnnlf expects {} input channels, got {ch}", self.kind.input_channels())));
        }
        let mut x = self.head.forward(input)?;
        for b in &self.blocks {
            x = b.forward(&x)?;
        }
        self.tail.forward(&x)
    }
}

/// Filter inputs for one model: one or two content planes plus the shared BS plane.
pub struct CnnlfInput<'a> {
    pub rec: &'a [&'a Plane],
    pub pred: &'a [&'a Plane],
    pub bs: &'a Plane,
    pub qp: i32,
}

pub fn stack_inputs(kind: PlaneKind, input: &CnnlfInput<'_>) -> Result<Tensor> {
    let n = kind.content_channels();
    if input.rec.len() != n || input.pred.len() != n {
        return Err(Error::shape(format!("{} cnnlf needs {n} rec and pred planes", kind.prefix())));
    }
    if !(0..=63).contains(&input.qp) {
        return Err(Error::arg(format!("qp must be in [0, 63], got {}", input.qp)));
    }
    let (w, h) = (input.bs.width(), input.bs.height());
    if input.rec.iter().chain(input.pred).any(|p| p.width() != w || p.height() != h) {
        return Err(Error::dims("cnnlf input planes must share extents"));
    }
    let mut data = Vec::with_capacity(kind.input_channels() * w * h);
    for p in input.rec.iter().chain(input.pred) {
        data.extend(p.data().iter().map(|&v| v as f32 / 255.0));
    }
    data.extend(input.bs.data().iter().map(|&v| v as f32 / 2.0));
    data.extend(std::iter::repeat_n(input.qp as f32 / 63.0, w * h));
    Tensor::new(vec![kind.input_channels(), h, w], data)
}

/// Filtered samples as real values in `[0, 255]` (`rec + 255 * residual`, clamped).
pub fn cnnlf_forward_f32(model: &CnnlfModel, input: &CnnlfInput<'_>) -> Result<Tensor> {
    let stacked = stack_inputs(model.kind, input)?;
    let mut res = model.residual(&stacked)?;
    let plane = input.bs.width() * input.bs.height();
    for (ch, rec) in input.rec.iter().enumerate() {
        let dst = &mut res.data_mut()[ch * plane..(ch + 1) * plane];
        for (d, &r) in dst.iter_mut().zip(rec.data()) {
            *d = (r as f32 + *d * 255.0).clamp(0.0, 255.0);
        }
    }
    Ok(res)
}

/// Filtered planes, rounded to 8-bit samples.
pub fn cnnlf_forward(model: &CnnlfModel, input: &CnnlfInput<'_>) -> Result<Vec<Plane>> {
    let out = cnnlf_forward_f32(model, input)?;
    let (w, h) = (input.bs.width(), input.bs.height());
    Ok(out
        .data()
        .chunks(w * h)
        .map(|c| Plane::new(w, h, c.iter().map(|&v| v.round() as u8).collect()).expect("extent checked"))
        .collect())
}

/// Luma and chroma filter models used together by the codec.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnlfPair {
    pub luma: CnnlfModel,
    pub chroma: CnnlfModel,
}

impl CnnlfPair {
    pub fn from_tensors(map: &TensorMap) -> Result<Self> {
        Ok(CnnlfPair {
            luma: CnnlfModel::from_tensors(map, PlaneKind::Luma)?,
            chroma: CnnlfModel::from_tensors(map, PlaneKind::Chroma)?,
        })
    }

    pub fn to_tensors(&self) -> Result<TensorMap> {
        let mut map = self.luma.to_tensors()?;
        map.extend(self.chroma.to_tensors()?)?;
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn run(model: &CnnlfModel, rec: &Plane, pred: &Plane, bs: &Plane, qp: i32) -> Vec<Plane> {
        cnnlf_forward(model, &CnnlfInput { rec: &[rec], pred: &[pred], bs, qp }).unwrap()
    }

    #[test]
    fn zero_tail_is_identity() {
        let mut m = CnnlfModel::random(PlaneKind::Luma, 4, 2, 7);
        m.tail = Conv::zeros(1, 4, 3, 3, 1);
        let clip = synth::noise_clip(24, 16, 1, 5);
        let rec = &clip[0].y;
        let bs = Plane::filled(24, 16, 1);
        assert_eq!(run(&m, rec, rec, &bs, 37)[0], *rec);
    }

    #[test]
    fn output_bounded_and_deterministic() {
        let mut m = CnnlfModel::random(PlaneKind::Luma, 4, 2, 9);
        m.tail.bias.data_mut()[0] = 3.0;
        let rec = Plane::filled(8, 8, 250);
        let bs = Plane::filled(8, 8, 0);
        let a = run(&m, &rec, &rec, &bs, 20);
        assert!(a[0].data().iter().all(|&v| v == 255));
        m.tail.bias.data_mut()[0] = 0.0;
        let noisy = synth::noise_clip(16, 16, 1, 2).remove(0).y;
        let flat = Plane::filled(16, 16, 100);
        let bs = Plane::filled(16, 16, 2);
        assert_eq!(run(&m, &noisy, &flat, &bs, 30), run(&m, &noisy, &flat, &bs, 30));
    }

    /// C = 2, B = 1 with every conv a centred point kernel, so each layer acts
    /// per sample and the whole chain can be evaluated by hand.
    #[test]
    fn handcrafted_chain() {
        let mut m = CnnlfModel::zeros(PlaneKind::Luma, 2, 1);
        // head: ch0 = rec, ch1 = 0.5*qp + 0.1
        m.head.weight.data_mut()[4] = 1.0;
        m.head.weight.data_mut()[(4 + 3) * 9 + 4] = 0.5;
        m.head.bias.data_mut()[1] = 0.1;
        let b = &mut m.blocks[0];
        // expand: e0 = ch0, e1 = -ch0, e2 = ch1, e3 = 0
        b.expand.weight.data_mut()[0] = 1.0;
        b.expand.weight.data_mut()[2] = -1.0;
        b.expand.weight.data_mut()[5] = 1.0;
        // prelu slope 0.25 everywhere (default); vertical / horizontal: centre taps
        for k in 0..4 {
            b.conv_v.weight.data_mut()[(k * 4 + k) * 3 + 1] = 1.0;
            b.conv_h.weight.data_mut()[(k * 4 + k) * 3 + 1] = 2.0;
        }
        // reduce: r0 = e0 + e1, r1 = e2
        b.reduce.weight.data_mut()[0] = 1.0;
        b.reduce.weight.data_mut()[1] = 1.0;
        b.reduce.weight.data_mut()[4 + 2] = 1.0;
        // tail: residual = 0.1 * f0 - 0.05 * f1 - 0.01
        m.tail.weight.data_mut()[4] = 0.1;
        m.tail.weight.data_mut()[9 + 4] = -0.05;
        m.tail.bias.data_mut()[0] = -0.01;

        let rec = Plane::from_fn(4, 4, |x, y| (x * 40 + y * 10) as u8);
        let pred = Plane::filled(4, 4, 0);
        let bs = Plane::filled(4, 4, 0);
        let qp = 32;
        let out = cnnlf_forward_f32(&m, &CnnlfInput { rec: &[&rec], pred: &[&pred], bs: &bs, qp }).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let r = rec.get(x, y) as f64 / 255.0;
                let q = qp as f64 / 63.0;
                let (h0, h1) = (r, 0.5 * q + 0.1);
                // r >= 0: e0 = r, e1 = -r -> 0.25 * -r after PReLU
                let (e0, e1, e2) = (2.0 * h0, 2.0 * (-0.25 * h0), 2.0 * h1);
                let (f0, f1) = (h0 + e0 + e1, h1 + e2);
                let res = 0.1 * f0 - 0.05 * f1 - 0.01;
                let want = (rec.get(x, y) as f64 + 255.0 * res).clamp(0.0, 255.0);
                let got = out.data()[y * 4 + x] as f64;
                assert!((got - want).abs() < 1e-4, "({x},{y}) got {got} want {want}");
            }
        }
    }

    #[test]
    fn tensors_round_trip() {
        let pair = CnnlfPair {
            luma: CnnlfModel::random(PlaneKind::Luma, 3, 3, 1),
            chroma: CnnlfModel::random(PlaneKind::Chroma, 2, 1, 2),
        };
        let map = pair.to_tensors().unwrap();
        assert!(map.get("luma.block2.expand.weight").is_some());
        assert!(map.get("chroma.tail.bias").is_some());
        let back = CnnlfPair::from_tensors(&map).unwrap();
        assert_eq!(back, pair);
        assert_eq!(back.luma.blocks.len(), 3);
        assert_eq!(back.luma.blocks[0].conv_v.dilation, 2);
        assert_eq!(back.luma.blocks[1].conv_v.dilation, 1);
    }

    #[test]
    fn input_validation() {
        let m = CnnlfModel::zeros(PlaneKind::Chroma, 2, 1);
        let p = Plane::filled(4, 4, 0);
        assert!(cnnlf_forward(&m, &CnnlfInput { rec: &[&p], pred: &[&p], bs: &p, qp: 30 }).is_err());
        assert!(cnnlf_forward(&m, &CnnlfInput { rec: &[&p, &p], pred: &[&p, &p], bs: &p, qp: 64 }).is_err());
        let small = Plane::filled(2, 4, 0);
        assert!(cnnlf_forward(&m, &CnnlfInput { rec: &[&p, &small], pred: &[&p, &p], bs: &p, qp: 30 }).is_err());
    }
}
