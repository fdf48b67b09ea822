//! 16x16 coding blocks: modes, prediction, coefficient syntax and reconstruction.
//!
//! Encoder and decoder both reconstruct through [`reconstruct`], which is what
//! keeps them bit-exact.

use serde::{Deserialize, Serialize};

use super::entropy::{se_len, ue_len, BitReader, BitWriter};
use super::predict::{neighbours, predict_dc, predict_planar};
use super::transform::{dequantize_block, qstep, quantize_block, Block8};
use crate::error::{Error, Result};
use crate::motion::MotionVector;
use crate::nn::{assemble_intra_context, nnintra_predict, NnIntraSet};
use crate::video_io::{Frame420, Plane};

pub const BLOCK: usize = 16;
const CBLOCK: usize = BLOCK / 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockMode {
    Dc = 0,
    Planar = 1,
    Nn = 2,
    Inter = 3,
}

impl BlockMode {
    pub const ALL: [BlockMode; 4] = [BlockMode::Dc, BlockMode::Planar, BlockMode::Nn, BlockMode::Inter];

    pub fn from_code(code: u64) -> Self {
        Self::ALL[code as usize & 3]
    }

    pub fn is_intra(self) -> bool {
        self != BlockMode::Inter
    }
}

/// Quantized levels in zigzag order: four luma 8x8 sets (raster), then Cb, then Cr.
pub type Levels = [[i32; 64]; 6];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSyntax {
    pub mode: BlockMode,
    pub mv: MotionVector,
    pub levels: Levels,
}

/// Samples of one block: 16x16 luma and two 8x8 chroma arrays, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSamples {
    pub y: Vec<u8>,
    pub cb: Vec<u8>,
    pub cr: Vec<u8>,
}

impl BlockSamples {
    fn arrays(&self) -> [&[u8]; 3] {
        [&self.y, &self.cb, &self.cr]
    }
}

pub fn block_grid(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(BLOCK), height.div_ceil(BLOCK))
}

/// NN-intra is only offered for blocks fully inside the picture.
pub fn nn_available(nn: Option<&NnIntraSet>, frame: &Frame420, x0: usize, y0: usize, qp: i32) -> bool {
    nn.and_then(|s| s.select(BLOCK, BLOCK, qp)).is_some() && x0 + BLOCK <= frame.width() && y0 + BLOCK <= frame.height()
}

fn inter_plane(reference: &Plane, x0: usize, y0: usize, n: usize, mv: MotionVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            out.push(reference.get_clamped((x0 + x) as isize + mv.dx as isize, (y0 + y) as isize + mv.dy as isize));
        }
    }
    out
}

/// Chroma displacement: the luma vector halved with an arithmetic shift.
pub fn chroma_mv(mv: MotionVector) -> MotionVector {
    MotionVector::new(mv.dx >> 1, mv.dy >> 1)
}

/// Prediction of the block at luma position `(x0, y0)`.
///
/// Intra modes read `recon`, which must hold every block preceding this one in
/// raster order. NN blocks predict chroma with DC.
pub fn predict(
    mode: BlockMode,
    mv: MotionVector,
    recon: &Frame420,
    reference: Option<&Frame420>,
    nn: Option<&NnIntraSet>,
    qp: i32,
    x0: usize,
    y0: usize,
) -> Result<BlockSamples> {
    let (cx, cy) = (x0 / 2, y0 / 2);
    let intra = |f: fn(&super::predict::Neighbours, usize) -> Vec<u8>| BlockSamples {
        y: f(&neighbours(&recon.y, x0, y0, BLOCK), BLOCK),
        cb: f(&neighbours(&recon.cb, cx, cy, CBLOCK), CBLOCK),
        cr: f(&neighbours(&recon.cr, cx, cy, CBLOCK), CBLOCK),
    };
    Ok(match mode {
        BlockMode::Dc => intra(predict_dc),
        BlockMode::Planar => intra(predict_planar),
        BlockMode::Nn => {
            if !nn_available(nn, recon, x0, y0, qp) {
                return Err(Error::arg(format!("nn-intra is not available for the block at ({x0},{y0})")));
            }
            let model = nn.and_then(|s| s.select(BLOCK, BLOCK, qp)).expect("checked above");
            let ctx = assemble_intra_context(&recon.y, x0, y0, BLOCK, BLOCK)?;
            let mut s = intra(predict_dc);
            s.y = nnintra_predict(model, &ctx)?.rounded();
            s
        }
        BlockMode::Inter => {
            let r = reference.ok_or_else(|| Error::arg("inter block without a reference picture"))?;
            let cmv = chroma_mv(mv);
            BlockSamples {
                y: inter_plane(&r.y, x0, y0, BLOCK, mv),
                cb: inter_plane(&r.cb, cx, cy, CBLOCK, cmv),
                cr: inter_plane(&r.cr, cx, cy, CBLOCK, cmv),
            }
        }
    })
}

/// (array index, x offset, y offset, array width) of each coefficient set.
const SETS: [(usize, usize, usize, usize); 6] =
    [(0, 0, 0, BLOCK), (0, 8, 0, BLOCK), (0, 0, 8, BLOCK), (0, 8, 8, BLOCK), (1, 0, 0, CBLOCK), (2, 0, 0, CBLOCK)];

/// Transforms and quantizes `orig - pred`. Samples outside the picture carry a zero residual.
pub fn quantize_residual(orig: &Frame420, pred: &BlockSamples, x0: usize, y0: usize, qp: i32) -> Result<Levels> {
    let step = qstep(qp)?;
    let planes = orig.planes();
    let arrays = pred.arrays();
    let mut levels = [[0; 64]; 6];
    for (k, &(p, ox, oy, aw)) in SETS.iter().enumerate() {
        let plane = planes[p];
        let (bx, by) = if p == 0 { (x0, y0) } else { (x0 / 2, y0 / 2) };
        let mut res: Block8 = [0.0; 64];
        for y in 0..8 {
            for x in 0..8 {
                let (px, py) = (bx + ox + x, by + oy + y);
                if px < plane.width() && py < plane.height() {
                    res[y * 8 + x] = plane.get(px, py) as f64 - arrays[p][(oy + y) * aw + ox + x] as f64;
                }
            }
        }
        levels[k] = quantize_block(&res, step);
    }
    Ok(levels)
}

/// Prediction plus dequantized residual, rounded and clamped.
pub fn reconstruct(pred: &BlockSamples, levels: &Levels, qp: i32) -> Result<BlockSamples> {
    let step = qstep(qp)?;
    let mut out = pred.clone();
    for (k, &(p, ox, oy, aw)) in SETS.iter().enumerate() {
        let res = dequantize_block(&levels[k], step);
        let arr = match p {
            0 => &mut out.y,
            1 => &mut out.cb,
            _ => &mut out.cr,
        };
        for y in 0..8 {
            for x in 0..8 {
                let i = (oy + y) * aw + ox + x;
                arr[i] = (arr[i] as f64 + res[y * 8 + x]).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(out)
}

/// Writes the in-picture part of `samples` into `frame`.
pub fn store(frame: &mut Frame420, samples: &BlockSamples, x0: usize, y0: usize) {
    let arrays = samples.arrays();
    for (p, plane) in frame.planes_mut().into_iter().enumerate() {
        let (n, bx, by) = if p == 0 { (BLOCK, x0, y0) } else { (CBLOCK, x0 / 2, y0 / 2) };
        for y in 0..n.min(plane.height().saturating_sub(by)) {
            for x in 0..n.min(plane.width().saturating_sub(bx)) {
                plane.set(bx + x, by + y, arrays[p][y * n + x]);
            }
        }
    }
}

/// Squared error of the in-picture part of `samples` against `orig`, all planes.
pub fn block_sse(orig: &Frame420, samples: &BlockSamples, x0: usize, y0: usize) -> u64 {
    let arrays = samples.arrays();
    let mut acc = 0u64;
    for (p, plane) in orig.planes().into_iter().enumerate() {
        let (n, bx, by) = if p == 0 { (BLOCK, x0, y0) } else { (CBLOCK, x0 / 2, y0 / 2) };
        for y in 0..n.min(plane.height().saturating_sub(by)) {
            for x in 0..n.min(plane.width().saturating_sub(bx)) {
                let d = plane.get(bx + x, by + y) as i64 - arrays[p][y * n + x] as i64;
                acc += (d * d) as u64;
            }
        }
    }
    acc
}

/// Run/level coding of one zigzag set: `ue(run + 1), se(level)` per nonzero level, `ue(0)` to end.
pub fn write_levels(w: &mut BitWriter, levels: &[i32; 64]) {
    let mut run = 0u32;
    for &l in levels {
        if l == 0 {
            run += 1;
        } else {
            w.write_ue(run + 1);
            w.write_se(l);
            run = 0;
        }
    }
    w.write_ue(0);
}

pub fn levels_bits(levels: &[i32; 64]) -> usize {
    let mut run = 0u32;
    let mut bits = 1;
    for &l in levels {
        if l == 0 {
            run += 1;
        } else {
            bits += ue_len(run + 1) + se_len(l);
            run = 0;
        }
    }
    bits
}

pub fn read_levels(r: &mut BitReader<'_>) -> Result<[i32; 64]> {
    let mut levels = [0; 64];
    let mut pos = 0usize;
    loop {
        let at = r.position();
        let code = r.read_ue()? as usize;
        if code == 0 {
            return Ok(levels);
        }
        pos += code - 1;
        if pos >= 64 {
            return Err(Error::Bitstream { bit: at, msg: "coefficient run past the end of the block".into() });
        }
        let at = r.position();
        let l = r.read_se()?;
        if l == 0 {
            return Err(Error::Bitstream { bit: at, msg: "zero level in run/level pair".into() });
        }
        levels[pos] = l;
        pos += 1;
    }
}

pub fn write_block(w: &mut BitWriter, b: &BlockSyntax) {
    w.write_bits(b.mode as u64, 2);
    if b.mode == BlockMode::Inter {
        w.write_se(b.mv.dx);
        w.write_se(b.mv.dy);
    }
    b.levels.iter().for_each(|l| write_levels(w, l));
}

pub fn block_bits(b: &BlockSyntax) -> usize {
    let mv = if b.mode == BlockMode::Inter { se_len(b.mv.dx) + se_len(b.mv.dy) } else { 0 };
    2 + mv + b.levels.iter().map(levels_bits).sum::<usize>()
}

pub fn read_block(r: &mut BitReader<'_>) -> Result<BlockSyntax> {
    let mode = BlockMode::from_code(r.read_bits(2)?);
    let mv = if mode == BlockMode::Inter { MotionVector::new(r.read_se()?, r.read_se()?) } else { MotionVector::ZERO };
    let mut levels = [[0; 64]; 6];
    for l in levels.iter_mut() {
        *l = read_levels(r)?;
    }
    Ok(BlockSyntax { mode, mv, levels })
}

/// Boundary-strength planes (luma, chroma) from the block modes.
///
/// Samples on an 8x8 transform edge (excluding the picture border) get 2 inside
/// intra blocks and 1 inside inter blocks; all others get 0. Chroma uses its own
/// 8x8 grid and the mode of the co-located luma block.
pub fn bs_planes(modes: &[BlockMode], width: usize, height: usize) -> (Plane, Plane) {
    let (cols, _) = block_grid(width, height);
    let strength = |lx: usize, ly: usize| if modes[(ly / BLOCK) * cols + lx / BLOCK].is_intra() { 2 } else { 1 };
    let edge = |x: usize, y: usize| (x.is_multiple_of(8) && x > 0) || (y.is_multiple_of(8) && y > 0);
    let luma = Plane::from_fn(width, height, |x, y| if edge(x, y) { strength(x, y) } else { 0 });
    let (cw, ch) = crate::video_io::chroma_dims(width, height);
    let chroma = Plane::from_fn(cw, ch, |x, y| if edge(x, y) { strength(2 * x, 2 * y) } else { 0 });
    (luma, chroma)
}
