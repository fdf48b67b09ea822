//! Neural intra prediction from an L-shaped context of reconstructed samples.
//!
//! A `w`x`h` block at `(x0, y0)` is predicted from:
//! * the above context: `n_a` rows of `n_l + 2w` samples starting at `(x0 - n_l, y0 - n_a)`,
//! * the left context: `2h` rows of `n_l` samples starting at `(x0 - n_l, y0)`,
//!
//! with `n_a = min(h, 8)` and `n_l = min(w, 8)`. Each context goes through its own
//! two-layer conv branch; the flattened branches are concatenated and fed to a
//! two-layer dense trunk with three heads: the `w*h` prediction and two 4-way
//! logit vectors (`grp1`, `grp2`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{relu, Conv, Dense};
use super::tensor::{Tensor, TensorMap};
use crate::error::{Error, Result};
use crate::video_io::Plane;

/// Supported block sizes as (width, height).
pub const INTRA_SIZES: [(usize, usize); 8] = [(4, 4), (8, 4), (16, 4), (32, 4), (8, 8), (16, 8), (16, 16), (32, 32)];

/// QPs that per-QP models are trained for.
pub const INTRA_QPS: [i32; 4] = [27, 32, 37, 43];

pub const BRANCH_CH1: usize = 8;
pub const BRANCH_CH2: usize = 16;
pub const TRUNK_WIDTH: usize = 96;
pub const GROUP_CLASSES: usize = 4;

/// Context normalisation scale.
const CONTEXT_SCALE: f32 = 127.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntraGeometry {
    pub w: usize,
    pub h: usize,
    pub n_a: usize,
    pub n_l: usize,
}

impl IntraGeometry {
    pub fn new(w: usize, h: usize) -> Result<Self> {
        if !INTRA_SIZES.contains(&(w, h)) {
            return Err(Error::arg(format!("unsupported nn-intra block size {w}x{h}")));
        }
        Ok(IntraGeometry { w, h, n_a: h.min(8), n_l: w.min(8) })
    }

    /// (rows, cols) of the above context.
    pub fn above_shape(&self) -> (usize, usize) {
        (self.n_a, self.n_l + 2 * self.w)
    }

    /// (rows, cols) of the left context.
    pub fn left_shape(&self) -> (usize, usize) {
        (2 * self.h, self.n_l)
    }

    pub fn trunk_inputs(&self) -> usize {
        let (ar, ac) = self.above_shape();
        let (lr, lc) = self.left_shape();
        BRANCH_CH2 * (ar * ac + lr * lc)
    }

    pub fn name(&self) -> String {
        format!("{}x{}", self.w, self.h)
    }
}

/// Reference samples around a block, raw and normalised.
#[derive(Clone, Debug, PartialEq)]
pub struct IntraContext {
    pub geometry: IntraGeometry,
    /// `n_a * (n_l + 2w)` samples, row-major, after unavailable-sample substitution.
    pub above_raw: Vec<u8>,
    /// `2h * n_l` samples, row-major, after substitution.
    pub left_raw: Vec<u8>,
    /// Mean of the available samples, 128 when none are available.
    pub mean: f32,
    /// `[1, n_a, n_l + 2w]`, `(sample - mean) / 127`.
    pub above: Tensor,
    /// `[1, 2h, n_l]`, `(sample - mean) / 127`.
    pub left: Tensor,
}

/// Inclusive-exclusive rectangle of available samples, `None` when empty.
#[derive(Clone, Copy, Debug)]
struct Avail {
    x0: isize,
    x1: isize,
    y0: isize,
    y1: isize,
}

impl Avail {
    fn new(x0: isize, x1: isize, y0: isize, y1: isize) -> Option<Self> {
        (x0 < x1 && y0 < y1).then_some(Avail { x0, x1, y0, y1 })
    }

    fn nearest(&self, x: isize, y: isize) -> (isize, isize, isize) {
        let cx = x.clamp(self.x0, self.x1 - 1);
        let cy = y.clamp(self.y0, self.y1 - 1);
        ((cx - x).pow(2) + (cy - y).pow(2), cx, cy)
    }
}

/// Gathers the context of the `w`x`h` block at `(x0, y0)`.
///
/// A context position is available when it lies inside the picture and has
/// already been reconstructed in raster block order: every row above the block,
/// and the rows of the block itself to its left. Unavailable positions take the
/// value of the nearest available position (squared Euclidean distance; ties go
/// to the above context), or 128 when nothing is available.
pub fn assemble_intra_context(recon: &Plane, x0: usize, y0: usize, w: usize, h: usize) -> Result<IntraContext> {
    let g = IntraGeometry::new(w, h)?;
    if x0 + w > recon.width() || y0 + h > recon.height() {
        return Err(Error::arg(format!(
            "block {w}x{h} at ({x0},{y0}) is outside the {}x{} picture",
            recon.width(),
            recon.height()
        )));
    }
    let (pw, ph) = (recon.width() as isize, recon.height() as isize);
    let (bx, by) = (x0 as isize, y0 as isize);
    let (n_a, n_l) = (g.n_a as isize, g.n_l as isize);
    let above_start = (bx - n_l, by - n_a);
    let (above_rows, above_cols) = g.above_shape();
    let (left_rows, left_cols) = g.left_shape();

    let above_av = Avail::new((bx - n_l).max(0), (bx + 2 * w as isize).min(pw), (by - n_a).max(0), by);
    let left_av = Avail::new((bx - n_l).max(0), bx, by, (by + h as isize).min(ph));

    let mut sum = 0u64;
    let mut count = 0u64;
    for av in [above_av, left_av].into_iter().flatten() {
        for y in av.y0..av.y1 {
            for x in av.x0..av.x1 {
                sum += recon.get(x as usize, y as usize) as u64;
                count += 1;
            }
        }
    }
    let mean = if count == 0 { 128.0 } else { (sum as f64 / count as f64) as f32 };

    let fetch = |x: isize, y: isize| -> u8 {
        let best = [above_av, left_av]
            .into_iter()
            .flatten()
            .map(|av| av.nearest(x, y))
            .fold(None::<(isize, isize, isize)>, |acc, c| match acc {
                Some(a) if a.0 <= c.0 => Some(a),
                _ => Some(c),
            });
        match best {
            Some((_, cx, cy)) => recon.get(cx as usize, cy as usize),
            None => 128,
        }
    };

    let mut above_raw = Vec::with_capacity(above_rows * above_cols);
    for r in 0..above_rows as isize {
        for c in 0..above_cols as isize {
            above_raw.push(fetch(above_start.0 + c, above_start.1 + r));
        }
    }
    let mut left_raw = Vec::with_capacity(left_rows * left_cols);
    for r in 0..left_rows as isize {
        for c in 0..left_cols as isize {
            left_raw.push(fetch(bx - n_l + c, by + r));
        }
    }
    let norm = |v: &u8| (*v as f32 - mean) / CONTEXT_SCALE;
    let above = Tensor::new(vec![1, above_rows, above_cols], above_raw.iter().map(norm).collect())?;
    let left = Tensor::new(vec![1, left_rows, left_cols], left_raw.iter().map(norm).collect())?;
    Ok(IntraContext { geometry: g, above_raw, left_raw, mean, above, left })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NnIntraModel {
    pub geometry: IntraGeometry,
    pub qp: i32,
    pub above_conv1: Conv,
    pub above_conv2: Conv,
    pub left_conv1: Conv,
    pub left_conv2: Conv,
    pub fc1: Dense,
    pub fc2: Dense,
    pub head_pred: Dense,
    pub head_grp1: Dense,
    pub head_grp2: Dense,
}

/// Raw network outputs: normalised prediction and the two logit vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct IntraOutputs {
    pub pred: Vec<f32>,
    pub grp1: Vec<f32>,
    pub grp2: Vec<f32>,
}

/// De-normalised prediction, `h` rows of `w` samples, in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntraPrediction {
    pub w: usize,
    pub h: usize,
    pub samples: Vec<f32>,
    pub grp1: Vec<f32>,
    pub grp2: Vec<f32>,
}

impl IntraPrediction {
    pub fn rounded(&self) -> Vec<u8> {
        self.samples.iter().map(|v| v.round() as u8).collect()
    }
}

impl NnIntraModel {
    pub fn zeros(w: usize, h: usize, qp: i32) -> Result<Self> {
        let g = IntraGeometry::new(w, h)?;
        Ok(NnIntraModel {
            geometry: g,
            qp,
            above_conv1: Conv::zeros(BRANCH_CH1, 1, 3, 3, 1),
            above_conv2: Conv::zeros(BRANCH_CH2, BRANCH_CH1, 3, 3, 1),
            left_conv1: Conv::zeros(BRANCH_CH1, 1, 3, 3, 1),
            left_conv2: Conv::zeros(BRANCH_CH2, BRANCH_CH1, 3, 3, 1),
            fc1: Dense::zeros(TRUNK_WIDTH, g.trunk_inputs()),
            fc2: Dense::zeros(TRUNK_WIDTH, TRUNK_WIDTH),
            head_pred: Dense::zeros(w * h, TRUNK_WIDTH),
            head_grp1: Dense::zeros(GROUP_CLASSES, TRUNK_WIDTH),
            head_grp2: Dense::zeros(GROUP_CLASSES, TRUNK_WIDTH),
        })
    }

    pub fn random(w: usize, h: usize, qp: i32, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = IntraGeometry::new(w, h)?;
        Ok(NnIntraModel {
            geometry: g,
            qp,
            above_conv1: Conv::random(BRANCH_CH1, 1, 3, 3, 1, 1.0, &mut rng),
            above_conv2: Conv::random(BRANCH_CH2, BRANCH_CH1, 3, 3, 1, 1.0, &mut rng),
            left_conv1: Conv::random(BRANCH_CH1, 1, 3, 3, 1, 1.0, &mut rng),
            left_conv2: Conv::random(BRANCH_CH2, BRANCH_CH1, 3, 3, 1, 1.0, &mut rng),
            fc1: Dense::random(TRUNK_WIDTH, g.trunk_inputs(), 1.0, &mut rng),
            fc2: Dense::random(TRUNK_WIDTH, TRUNK_WIDTH, 1.0, &mut rng),
            head_pred: Dense::random(w * h, TRUNK_WIDTH, 0.1, &mut rng),
            head_grp1: Dense::random(GROUP_CLASSES, TRUNK_WIDTH, 1.0, &mut rng),
            head_grp2: Dense::random(GROUP_CLASSES, TRUNK_WIDTH, 1.0, &mut rng),
        })
    }

    pub fn prefix(&self) -> String {
        model_prefix(&self.geometry, self.qp)
    }

    pub fn parameter_count(&self) -> usize {
        self.to_tensors().map(|m| m.iter().map(|(_, t)| t.len()).sum()).unwrap_or(0)
    }

    pub fn to_tensors(&self) -> Result<TensorMap> {
        let p = self.prefix();
        let mut map = TensorMap::new();
        self.above_conv1.store(&mut map, &format!("{p}.branch_above.conv1"))?;
        self.above_conv2.store(&mut map, &format!("{p}.branch_above.conv2"))?;
        self.left_conv1.store(&mut map, &format!("{p}.branch_left.conv1"))?;
        self.left_conv2.store(&mut map, &format!("{p}.branch_left.conv2"))?;
        self.fc1.store(&mut map, &format!("{p}.trunk.fc1"))?;
        self.fc2.store(&mut map, &format!("{p}.trunk.fc2"))?;
        self.head_pred.store(&mut map, &format!("{p}.head_pred"))?;
        self.head_grp1.store(&mut map, &format!("{p}.head_grp1"))?;
        self.head_grp2.store(&mut map, &format!("{p}.head_grp2"))?;
        Ok(map)
    }

    pub fn from_tensors(map: &TensorMap, w: usize, h: usize, qp: i32) -> Result<Self> {
        let g = IntraGeometry::new(w, h)?;
        let p = model_prefix(&g, qp);
        Ok(NnIntraModel {
            geometry: g,
            qp,
            above_conv1: Conv::load(map, &format!("{p}.branch_above.conv1"), [BRANCH_CH1, 1, 3, 3], 1)?,
            above_conv2: Conv::load(map, &format!("{p}.branch_above.conv2"), [BRANCH_CH2, BRANCH_CH1, 3, 3], 1)?,
            left_conv1: Conv::load(map, &format!("{p}.branch_left.conv1"), [BRANCH_CH1, 1, 3, 3], 1)?,
            left_conv2: Conv::load(map, &format!("{p}.branch_left.conv2"), [BRANCH_CH2, BRANCH_CH1, 3, 3], 1)?,
            fc1: Dense::load(map, &format!("{p}.trunk.fc1"), TRUNK_WIDTH, g.trunk_inputs())?,
            fc2: Dense::load(map, &format!("{p}.trunk.fc2"), TRUNK_WIDTH, TRUNK_WIDTH)?,
            head_pred: Dense::load(map, &format!("{p}.head_pred"), w * h, TRUNK_WIDTH)?,
            head_grp1: Dense::load(map, &format!("{p}.head_grp1"), GROUP_CLASSES, TRUNK_WIDTH)?,
            head_grp2: Dense::load(map, &format!("{p}.head_grp2"), GROUP_CLASSES, TRUNK_WIDTH)?,
        })
    }

    /// Forward pass on normalised `[1, n_a, n_l + 2w]` and `[1, 2h, n_l]` contexts.
    pub fn forward(&self, above: &Tensor, left: &Tensor) -> Result<IntraOutputs> {
        let (ar, ac) = self.geometry.above_shape();
        let (lr, lc) = self.geometry.left_shape();
        above.expect_shape("above context", &[1, ar, ac])?;
        left.expect_shape("left context", &[1, lr, lc])?;
        let branch = |x: &Tensor, c1: &Conv, c2: &Conv| -> Result<Tensor> {
            let mut t = c1.forward(x)?;
            relu(&mut t);
            let mut t = c2.forward(&t)?;
            relu(&mut t);
            Ok(t)
        };
        let a = branch(above, &self.above_conv1, &self.above_conv2)?;
        let l = branch(left, &self.left_conv1, &self.left_conv2)?;
        let mut flat = a.into_data();
        flat.extend(l.into_data());
        let mut t = self.fc1.forward(&flat)?;
        t.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut t = self.fc2.forward(&t)?;
        t.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(IntraOutputs { pred: self.head_pred.forward(&t)?, grp1: self.head_grp1.forward(&t)?, grp2: self.head_grp2.forward(&t)? })
    }
}

fn model_prefix(g: &IntraGeometry, qp: i32) -> String {
    format!("intra.{}.qp{}", g.name(), qp)
}

/// Predicts the block described by `ctx`, de-normalising by `* 127 + mean`.
pub fn nnintra_predict(model: &NnIntraModel, ctx: &IntraContext) -> Result<IntraPrediction> {
    if model.geometry != ctx.geometry {
        return Err(Error::shape(format!("model is {}, context is {}", model.geometry.name(), ctx.geometry.name())));
    }
    let out = model.forward(&ctx.above, &ctx.left)?;
    let samples = out.pred.iter().map(|v| (v * CONTEXT_SCALE + ctx.mean).clamp(0.0, 255.0)).collect();
    Ok(IntraPrediction { w: model.geometry.w, h: model.geometry.h, samples, grp1: out.grp1, grp2: out.grp2 })
}

/// Picks the model trained for the QP nearest to `qp`; ties go to the lower QP.
pub fn select_model_for_qp<'a>(models: &[&'a NnIntraModel], qp: i32) -> Result<&'a NnIntraModel> {
    models
        .iter()
        .copied()
        .min_by_key(|m| ((m.qp - qp).abs(), m.qp))
        .ok_or_else(|| Error::arg("no nn-intra model available"))
}

/// All NN-intra models found in a weights map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NnIntraSet {
    pub models: Vec<NnIntraModel>,
}

impl NnIntraSet {
    /// Loads every `(size, qp)` combination whose tensors are present.
    pub fn from_tensors(map: &TensorMap) -> Result<Self> {
        let mut models = Vec::new();
        for (w, h) in INTRA_SIZES {
            let g = IntraGeometry::new(w, h)?;
            let mut qps: Vec<i32> = map
                .names()
                .filter_map(|n| n.strip_prefix(&format!("intra.{}.qp", g.name())))
                .filter_map(|rest| rest.split('.').next()?.parse().ok())
                .collect();
            qps.sort_unstable();
            qps.dedup();
            for qp in qps {
                models.push(NnIntraModel::from_tensors(map, w, h, qp)?);
            }
        }
        if models.is_empty() {
            return Err(Error::shape("weights contain no nn-intra models"));
        }
        Ok(NnIntraSet { models })
    }

    pub fn to_tensors(&self) -> Result<TensorMap> {
        let mut map = TensorMap::new();
        for m in &self.models {
            map.extend(m.to_tensors()?)?;
        }
        Ok(map)
    }

    pub fn for_size(&self, w: usize, h: usize) -> Vec<&NnIntraModel> {
        self.models.iter().filter(|m| m.geometry.w == w && m.geometry.h == h).collect()
    }

    pub fn select(&self, w: usize, h: usize, qp: i32) -> Option<&NnIntraModel> {
        select_model_for_qp(&self.for_size(w, h), qp).ok()
    }
}
